"""Shared domain types: Prony models, sampling schemes, sample sets, piecewise signals.

Angle convention: a node z on the unit circle and a jump position x are related
by z = exp(-i*x).  All conversions go through node_from_position /
position_from_node so the sign never drifts.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

#: tolerance for the unit-modulus node invariant
UNIT_MODULUS_TOL = 1e-12

#: exhaustive matching is only attempted up to this many nodes
MAX_MATCH_NODES = 8


class PronydecError(Exception):
    """Base class for all library errors."""


class ValidationError(PronydecError, ValueError):
    """Invalid input: broken invariant or violated precondition."""


class SolverError(PronydecError, RuntimeError):
    """A solve failed for numerical reasons (degenerate data, no usable root, ...)."""


class RankDeficiencyError(SolverError):
    """Linear system numerically rank-deficient."""

    def __init__(self, message, smallest_singular_value=None, condition=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value
        self.condition = condition


class AmbiguousBranchError(SolverError):
    """Branch selection (root-of-unity disambiguation) had no clear winner."""


class QuadratureError(SolverError):
    """Adaptive quadrature failed to reach the requested accuracy."""


# ---------------------------------------------------------------------------
# circle geometry
# ---------------------------------------------------------------------------

def circle_distance(x: float, y: float) -> float:
    """Distance between two angles on the circle: min over n of |x - y + 2*pi*n|."""
    d = (x - y) % TWO_PI
    return min(d, TWO_PI - d)


def wrap_angle(x: float) -> float:
    """Wrap an angle into the canonical interval (-pi, pi]."""
    a = x % TWO_PI
    if a > math.pi:
        a -= TWO_PI
    return a


def wrap_position(x: float) -> float:
    """Wrap a jump position into [-pi, pi)."""
    a = (x + math.pi) % TWO_PI - math.pi
    return a


def node_from_position(x: float) -> complex:
    """Unit node encoding the jump position x, z = exp(-i*x)."""
    return cmath.exp(-1j * x)


def position_from_node(z: complex) -> float:
    """Jump position encoded by a unit node, x = -arg(z), wrapped into [-pi, pi)."""
    return wrap_position(-cmath.phase(z))


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PronyModel:
    """Nodes on the unit circle with multiplicities and polynomial amplitudes.

    The model parameterizes the measurement sequence
    m_k = sum_j z_j^k * sum_{l=0}^{mult_j - 1} c_{l,j} * k^l.

    nodes[j] must have unit modulus (tolerance UNIT_MODULUS_TOL);
    coefficients[j] holds (c_{0,j}, ..., c_{mult_j-1,j}).
    """

    nodes: tuple
    multiplicities: tuple
    coefficients: tuple

    def __post_init__(self):
        nodes = tuple(complex(z) for z in self.nodes)
        mults = tuple(int(m) for m in self.multiplicities)
        coeffs = tuple(tuple(complex(c) for c in row) for row in self.coefficients)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "multiplicities", mults)
        object.__setattr__(self, "coefficients", coeffs)
        if len(nodes) < 1:
            raise ValidationError("model needs at least one node")
        if not (len(nodes) == len(mults) == len(coeffs)):
            raise ValidationError("nodes, multiplicities, coefficients must align")
        for z in nodes:
            if abs(abs(z) - 1.0) > UNIT_MODULUS_TOL:
                raise ValidationError(f"node {z!r} is off the unit circle")
        for m, row in zip(mults, coeffs):
            if m < 1:
                raise ValidationError("multiplicities must be >= 1")
            if len(row) != m:
                raise ValidationError("coefficient list length must equal the multiplicity")

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def unknown_count(self) -> int:
        """Number of unknowns: sum of (multiplicity + 1) over nodes."""
        return sum(m + 1 for m in self.multiplicities)

    @property
    def poly_order(self) -> int:
        """Degree of the annihilating polynomial: sum of multiplicities."""
        return sum(self.multiplicities)

    @property
    def node_args(self) -> tuple:
        return tuple(cmath.phase(z) for z in self.nodes)

    def leading_coefficients(self) -> tuple:
        return tuple(row[-1] for row in self.coefficients)

    def canonical(self) -> "PronyModel":
        """Reorder nodes by ascending argument in (-pi, pi]."""
        order = sorted(range(self.num_nodes), key=lambda j: wrap_angle(cmath.phase(self.nodes[j])))
        return PronyModel(
            tuple(self.nodes[j] for j in order),
            tuple(self.multiplicities[j] for j in order),
            tuple(self.coefficients[j] for j in order),
        )


@dataclass(frozen=True)
class SamplingScheme:
    """Arithmetic-progression index set {offset, offset+stride, ...} of given count."""

    offset: int
    stride: int
    count: int

    def __post_init__(self):
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "stride", int(self.stride))
        object.__setattr__(self, "count", int(self.count))
        if self.offset < 0:
            raise ValidationError("offset must be nonnegative")
        if self.stride < 1:
            raise ValidationError("stride must be positive")
        if self.count < 1:
            raise ValidationError("count must be positive")

    @property
    def indices(self) -> tuple:
        return tuple(self.offset + s * self.stride for s in range(self.count))

    @property
    def max_index(self) -> int:
        return self.offset + (self.count - 1) * self.stride


@dataclass(frozen=True)
class SampleSet:
    """Complex measurement values bound to a sampling scheme."""

    scheme: SamplingScheme
    values: tuple
    noise_level: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))
        object.__setattr__(self, "noise_level", float(self.noise_level))
        if len(self.values) != self.scheme.count:
            raise ValidationError("values length must equal the scheme count")
        if self.noise_level < 0:
            raise ValidationError("noise_level must be nonnegative")


@dataclass(frozen=True)
class PiecewiseSignal:
    """A piecewise-smooth periodic function on [-pi, pi).

    Jump positions are strictly increasing; magnitudes[l][j] is the jump of the
    l-th derivative at jumps[j] (real), for 0 <= l <= smoothness.  The smooth
    part is a finite trigonometric series given by its coefficients for
    n = 0..degree (negative n by conjugation; the signal is real).  psi_decay
    certifies |psi_coeffs[n]| <= psi_decay * n^(-smoothness-2) for n >= 1.
    """

    smoothness: int
    jumps: tuple
    magnitudes: tuple
    psi_coeffs: tuple
    psi_decay: float

    def __post_init__(self):
        d = int(self.smoothness)
        jumps = tuple(float(x) for x in self.jumps)
        mags = tuple(tuple(float(a) for a in row) for row in self.magnitudes)
        psi = tuple(complex(c) for c in self.psi_coeffs)
        object.__setattr__(self, "smoothness", d)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "magnitudes", mags)
        object.__setattr__(self, "psi_coeffs", psi)
        object.__setattr__(self, "psi_decay", float(self.psi_decay))
        if d < 0:
            raise ValidationError("smoothness must be nonnegative")
        if len(jumps) < 1:
            raise ValidationError("at least one jump is required")
        for x in jumps:
            if not (-math.pi <= x < math.pi):
                raise ValidationError("jump positions must lie in [-pi, pi)")
        if any(b <= a for a, b in zip(jumps, jumps[1:])):
            raise ValidationError("jump positions must be strictly increasing")
        if self.min_separation <= 0:
            raise ValidationError("jump positions must be distinct on the circle")
        if len(mags) != d + 1 or any(len(row) != len(jumps) for row in mags):
            raise ValidationError("magnitudes must be a (smoothness+1) x K matrix")
        if not psi:
            raise ValidationError("psi_coeffs must contain at least the mean value")
        if abs(psi[0].imag) > 1e-12:
            raise ValidationError("mean coefficient of the smooth part must be real")
        if self.psi_decay < 0:
            raise ValidationError("psi_decay must be nonnegative")
        for n in range(1, len(psi)):
            if abs(psi[n]) > self.psi_decay * float(n) ** (-d - 2) * (1 + 1e-9):
                raise ValidationError(
                    f"smooth-part coefficient {n} exceeds the certified decay bound"
                )

    @property
    def num_jumps(self) -> int:
        return len(self.jumps)

    @property
    def psi_degree(self) -> int:
        return len(self.psi_coeffs) - 1

    @property
    def min_separation(self) -> float:
        """Minimal pairwise circle distance between jumps (2*pi for a single jump)."""
        if len(self.jumps) == 1:
            return TWO_PI
        return min(
            circle_distance(a, b) for a, b in itertools.combinations(self.jumps, 2)
        )

    @property
    def min_base_magnitude(self) -> float:
        return min(abs(a) for a in self.magnitudes[0])

    def psi_coeff(self, n: int) -> complex:
        """Coefficient of the smooth part at index n (0 beyond the stored degree)."""
        m = abs(n)
        if m >= len(self.psi_coeffs):
            return 0.0 + 0.0j
        c = self.psi_coeffs[m]
        return c.conjugate() if n < 0 else c


@dataclass(frozen=True)
class ErrorBounds:
    """First-order worst-case error bounds for a model at a given scheme."""

    node_bounds: tuple
    coeff_bounds: tuple
    separation: float


@dataclass(frozen=True)
class MatchResult:
    """Best assignment between estimated and true nodes.

    assignment[j] is the index of the estimated node matched to true node j.
    node_errors are circle distances between node arguments; coeff_errors are
    absolute differences per coefficient under that assignment.
    """

    assignment: tuple
    node_errors: tuple
    coeff_errors: tuple

    @property
    def max_node_error(self) -> float:
        return max(self.node_errors)

    @property
    def max_coeff_error(self) -> float:
        return max(max(row) for row in self.coeff_errors)


def match_estimates(estimated: PronyModel, truth: PronyModel) -> MatchResult:
    """Match estimated nodes to true nodes, minimizing total circle distance.

    Exhaustive search over permutations that preserve multiplicities; requires
    the same structure on both sides and at most MAX_MATCH_NODES nodes.
    """
    if estimated.num_nodes != truth.num_nodes:
        raise ValidationError("models have different numbers of nodes")
    if sorted(estimated.multiplicities) != sorted(truth.multiplicities):
        raise ValidationError("models have different multiplicity structures")
    k = truth.num_nodes
    if k > MAX_MATCH_NODES:
        raise ValidationError(f"matching supports at most {MAX_MATCH_NODES} nodes")

    t_args = truth.node_args
    e_args = estimated.node_args
    best = None
    best_cost = math.inf
    for perm in itertools.permutations(range(k)):
        if any(estimated.multiplicities[perm[j]] != truth.multiplicities[j] for j in range(k)):
            continue
        cost = sum(circle_distance(e_args[perm[j]], t_args[j]) for j in range(k))
        if cost < best_cost:
            best_cost = cost
            best = perm
    if best is None:
        raise ValidationError("no multiplicity-preserving assignment exists")

    node_errors = tuple(circle_distance(e_args[best[j]], t_args[j]) for j in range(k))
    coeff_errors = tuple(
        tuple(
            abs(ce - ct)
            for ce, ct in zip(estimated.coefficients[best[j]], truth.coefficients[j])
        )
        for j in range(k)
    )
    return MatchResult(tuple(best), node_errors, coeff_errors)


# ---------------------------------------------------------------------------
# serialization (JSON)
# ---------------------------------------------------------------------------
# Models store nodes as angles in radians (the node argument); complex values
# are [re, im] pairs.  Round trips are lossless: floats survive JSON exactly.

def _c2pair(c: complex):
    return [c.real, c.imag]


def _pair2c(p) -> complex:
    return complex(float(p[0]), float(p[1]))


def model_to_dict(model: PronyModel) -> dict:
    return {
        "nodes": [cmath.phase(z) for z in model.nodes],
        "multiplicities": list(model.multiplicities),
        "coefficients": [[_c2pair(c) for c in row] for row in model.coefficients],
    }


def model_from_dict(data: dict) -> PronyModel:
    return PronyModel(
        tuple(cmath.exp(1j * float(a)) for a in data["nodes"]),
        tuple(data["multiplicities"]),
        tuple(tuple(_pair2c(c) for c in row) for row in data["coefficients"]),
    )


def scheme_to_dict(scheme: SamplingScheme) -> dict:
    return {"offset": scheme.offset, "stride": scheme.stride, "count": scheme.count}


def scheme_from_dict(data: dict) -> SamplingScheme:
    return SamplingScheme(data["offset"], data["stride"], data["count"])


def samples_to_dict(samples: SampleSet) -> dict:
    return {
        "scheme": scheme_to_dict(samples.scheme),
        "values": [_c2pair(v) for v in samples.values],
        "noise_level": samples.noise_level,
    }


def samples_from_dict(data: dict) -> SampleSet:
    return SampleSet(
        scheme_from_dict(data["scheme"]),
        tuple(_pair2c(v) for v in data["values"]),
        float(data["noise_level"]),
    )


def signal_to_dict(signal: PiecewiseSignal) -> dict:
    return {
        "smoothness": signal.smoothness,
        "jumps": list(signal.jumps),
        "magnitudes": [list(row) for row in signal.magnitudes],
        "psi_coeffs": [_c2pair(c) for c in signal.psi_coeffs],
        "psi_decay": signal.psi_decay,
    }


def signal_from_dict(data: dict) -> PiecewiseSignal:
    return PiecewiseSignal(
        int(data["smoothness"]),
        tuple(data["jumps"]),
        tuple(tuple(row) for row in data["magnitudes"]),
        tuple(_pair2c(c) for c in data["psi_coeffs"]),
        float(data["psi_decay"]),
    )


def save_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
