"""Piecewise-smooth Fourier machinery: coefficient windows, the canonical
jump-absorbing piecewise polynomial, mollifier localization, and the full
jump-recovery reconstruction pipeline.

The canonical absorbing basis V_l is the zero-mean periodic polynomial with
Fourier coefficients (1/2pi) * (i*k)^(-l-1); a unit jump in the l-th derivative
at 0 and smooth elsewhere.  Signals split as f = (absorbing part from jump
data) + (smooth remainder), so the absorbing part's coefficients are available
in closed form and the mean coefficient belongs entirely to the remainder.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .decimate import decimated_solve
from .model import (
    TWO_PI,
    AmbiguousBranchError,
    PiecewiseSignal,
    PronyModel,
    QuadratureError,
    SampleSet,
    SamplingScheme,
    ValidationError,
    position_from_node,
    wrap_angle,
)

#: conjugate-symmetry tolerance for windows tagged as real signals
REAL_WINDOW_TOL = 1e-12

#: certified absolute accuracy of each mollifier Fourier coefficient
QUAD_CERT = 1e-13


# ---------------------------------------------------------------------------
# Bernoulli-polynomial closed form of the absorbing basis
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _bernoulli_numbers(n: int) -> tuple:
    """B_0..B_n with B_1 = -1/2."""
    values = [1.0]
    for m in range(1, n + 1):
        acc = 0.0
        for j in range(m):
            acc += math.comb(m + 1, j) * values[j]
        values.append(-acc / (m + 1))
    return tuple(values)


@lru_cache(maxsize=None)
def _bernoulli_poly(n: int) -> tuple:
    """Coefficients of B_n(x), highest degree first (for polyval)."""
    numbers = _bernoulli_numbers(n)
    coeffs = [math.comb(n, k) * numbers[n - k] for k in range(n + 1)]
    return tuple(reversed(coeffs))


def jump_basis_eval(order: int, x) -> np.ndarray:
    """V_order(x): unit jump of the order-th derivative at 0, zero mean.

    Closed form -(2pi)^order / (order+1)! * B_{order+1} of the fractional part
    of x/(2pi).  At the jump itself the value is the right-hand limit.
    """
    x = np.asarray(x, dtype=float)
    u = np.mod(x / TWO_PI, 1.0)
    poly = np.polyval(_bernoulli_poly(order + 1), u)
    return -((TWO_PI ** order) / math.factorial(order + 1)) * poly


def evaluate_absorbing(jumps, magnitudes, x) -> np.ndarray:
    """Pointwise value of the absorbing piecewise polynomial for the jump data."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for l, row in enumerate(magnitudes):
        for xj, a in zip(jumps, row):
            if a != 0.0:
                total = total + a * jump_basis_eval(l, x - xj)
    return total


def piecewise_poly_coeffs(jumps, magnitudes, smoothness: int, ks) -> np.ndarray:
    """Fourier coefficients of the absorbing piecewise polynomial at nonzero ks.

    (1/2pi) * sum_j exp(-i k x_j) * sum_l (i k)^(-l-1) a_{l,j}; valid for
    negative k as well.  k = 0 is excluded: the canonical absorbing polynomial
    has zero mean, so the mean coefficient belongs to the smooth part.
    """
    ks = np.asarray(ks, dtype=float)
    if np.any(ks == 0):
        raise ValidationError(
            "k = 0 has no formula coefficient; the absorbing part is zero-mean "
            "and the mean belongs to the smooth remainder"
        )
    d = int(smoothness)
    if len(magnitudes) != d + 1:
        raise ValidationError("magnitudes must have smoothness+1 rows")
    out = np.zeros(len(ks), dtype=complex)
    inv = 1.0 / (1j * ks)
    for xj_idx, xj in enumerate(jumps):
        inner = np.zeros(len(ks), dtype=complex)
        power = inv.copy()
        for l in range(d + 1):
            inner += magnitudes[l][xj_idx] * power
            power = power * inv
        out += np.exp(-1j * ks * xj) * inner
    return out / TWO_PI


# ---------------------------------------------------------------------------
# coefficient windows
# ---------------------------------------------------------------------------

@dataclass
class CoefficientWindow:
    """Fourier coefficients c_k for |k| <= bandwidth, stored at index k + bandwidth."""

    coeffs: np.ndarray
    bandwidth: int
    real_signal: bool = True

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        self.bandwidth = int(self.bandwidth)
        if self.coeffs.shape != (2 * self.bandwidth + 1,):
            raise ValidationError("window needs 2*bandwidth + 1 coefficients")
        if self.real_signal:
            flipped = np.conj(self.coeffs[::-1])
            if float(np.max(np.abs(self.coeffs - flipped))) > REAL_WINDOW_TOL:
                raise ValidationError("window tagged real-signal is not conjugate-symmetric")
        self.coeffs.flags.writeable = False

    def coeff(self, k: int) -> complex:
        if abs(k) > self.bandwidth:
            raise ValidationError(f"index {k} outside the window bandwidth {self.bandwidth}")
        return complex(self.coeffs[k + self.bandwidth])


def signal_coeffs(signal: PiecewiseSignal, bandwidth: int) -> CoefficientWindow:
    """Exact coefficient window of a piecewise signal: closed-form absorbing part
    plus the stored smooth-part series."""
    m = int(bandwidth)
    if m < 1:
        raise ValidationError("bandwidth must be positive")
    ks = np.arange(-m, m + 1)
    coeffs = np.zeros(2 * m + 1, dtype=complex)
    nonzero = ks != 0
    coeffs[nonzero] = piecewise_poly_coeffs(
        signal.jumps, signal.magnitudes, signal.smoothness, ks[nonzero]
    )
    for i, k in enumerate(ks):
        coeffs[i] += signal.psi_coeff(int(k))
    return CoefficientWindow(coeffs, m, real_signal=True)


def _series_eval(coeffs: np.ndarray, ks: np.ndarray, x: np.ndarray) -> np.ndarray:
    """sum_k coeffs_k exp(i k x), evaluated in blocks to bound memory."""
    out = np.zeros(len(x), dtype=complex)
    block = 512
    for start in range(0, len(ks), block):
        kb = ks[start:start + block]
        cb = coeffs[start:start + block]
        out += np.exp(1j * np.outer(x, kb)) @ cb
    return out


def partial_sum(window: CoefficientWindow, x):
    """Truncated Fourier series of the window at x (scalar or array)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ks = np.arange(-window.bandwidth, window.bandwidth + 1)
    values = _series_eval(window.coeffs, ks, xs)
    if window.real_signal:
        assert float(np.max(np.abs(values.imag))) < 1e-10
    result = values.real
    return float(result[0]) if np.isscalar(x) or np.ndim(x) == 0 else result


def evaluate_signal(signal: PiecewiseSignal, x):
    """Pointwise value of the signal: absorbing part + smooth trigonometric series."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    total = evaluate_absorbing(signal.jumps, signal.magnitudes, xs)
    psi = np.asarray(signal.psi_coeffs)
    ns = np.arange(1, len(psi))
    if len(ns):
        total = total + 2.0 * _series_eval(psi[1:], ns, xs).real
    total = total + psi[0].real
    return float(total[0]) if np.isscalar(x) or np.ndim(x) == 0 else total


# ---------------------------------------------------------------------------
# transform to a polynomial Prony system
# ---------------------------------------------------------------------------

def eckhoff_transform(window: CoefficientWindow, smoothness: int) -> SampleSet:
    """Measurements m_k = 2pi (i k)^(d+1) c_k for k = 1..bandwidth.

    On a pure jump signal this is exactly a polynomial Prony system with nodes
    exp(-i x_j) of multiplicity d+1; the smooth part contributes a perturbation
    decaying like 1/k.
    """
    d = int(smoothness)
    if d < 0:
        raise ValidationError("smoothness must be nonnegative")
    m = window.bandwidth
    ks = np.arange(1, m + 1, dtype=float)
    values = TWO_PI * (1j * ks) ** (d + 1) * window.coeffs[m + 1:]
    return SampleSet(SamplingScheme(1, 1, m), tuple(values), 0.0)


def induced_prony_model(jumps, magnitudes, smoothness: int) -> PronyModel:
    """The Prony model the transform produces from pure jump data:
    nodes exp(-i x_j), multiplicity d+1, coefficients c_{l,j} = i^l a_{d-l,j}."""
    d = int(smoothness)
    nodes = tuple(cmath.exp(-1j * x) for x in jumps)
    mults = (d + 1,) * len(jumps)
    coeffs = tuple(
        tuple((1j ** l) * magnitudes[d - l][j] for l in range(d + 1))
        for j in range(len(jumps))
    )
    return PronyModel(nodes, mults, coeffs)


def magnitudes_from_coefficients(coefficients, smoothness: int) -> np.ndarray:
    """Invert c_l = i^l a_{d-l}: jump magnitudes (a_0, ..., a_d) from one node's
    polynomial amplitudes."""
    d = int(smoothness)
    if len(coefficients) != d + 1:
        raise ValidationError("need d+1 coefficients")
    mags = np.empty(d + 1)
    for l, c in enumerate(coefficients):
        mags[d - l] = (complex(c) * (-1j) ** l).real
    return mags


def initial_jump_estimates(window: CoefficientWindow, num_jumps: int):
    """Coarse jump positions from the order-zero transform's top indices.

    Applies the transform with d = 0, keeps the 4K highest-index samples, and
    runs the subspace solver with K nodes.  Accuracy is O(1/bandwidth) when the
    smooth remainder obeys the decay hypothesis.
    """
    from .solvers import esprit_solve

    k = int(num_jumps)
    m = window.bandwidth
    if m < 4 * k:
        raise ValidationError(f"bandwidth {m} too small for {k} jumps (need >= {4 * k})")
    transformed = eckhoff_transform(window, 0)
    sub = SampleSet(
        SamplingScheme(m - 4 * k + 1, 1, 4 * k),
        transformed.values[m - 4 * k:],
        0.0,
    )
    model, _ = esprit_solve(sub, k)
    return sorted(position_from_node(z) for z in model.nodes)


# ---------------------------------------------------------------------------
# mollifiers
# ---------------------------------------------------------------------------

@dataclass
class Mollifier:
    """Smooth bump: 1 on [center-flat, center+flat], 0 outside [center-half, center+half].

    centered_coeffs[n] holds the (real) Fourier coefficient of the bump centered
    at 0; shifting to `center` multiplies coefficient n by exp(-i n center).
    `accuracy` is the conservative quadrature error estimate.
    """

    center: float
    half_width: float
    flat_half_width: float
    degree: int
    centered_coeffs: np.ndarray
    accuracy: float

    def __post_init__(self):
        self.centered_coeffs = np.asarray(self.centered_coeffs, dtype=float)
        self.centered_coeffs.flags.writeable = False

    def coeff(self, n: int) -> complex:
        if abs(n) > self.degree:
            raise ValidationError(f"index {n} beyond mollifier degree {self.degree}")
        return cmath.exp(-1j * n * self.center) * self.centered_coeffs[abs(n)]

    def two_sided(self) -> np.ndarray:
        ns = np.arange(-self.degree, self.degree + 1)
        return np.exp(-1j * ns * self.center) * self.centered_coeffs[np.abs(ns)]


def _smoothstep(u: float) -> float:
    """C-infinity transition from 1 at u<=0 to 0 at u>=1 via exp(-1/s)."""
    if u <= 0.0:
        return 1.0
    if u >= 1.0:
        return 0.0
    a = math.exp(-1.0 / (1.0 - u))
    b = math.exp(-1.0 / u)
    return a / (a + b)


_BUMP_CACHE: dict = {}


def _transition_integrals(transition, a: float, b: float, degree: int, panels: int) -> np.ndarray:
    """integral of transition(x) * cos(n x) over [a, b] for n = 0..degree,
    by composite 16-point Gauss-Legendre over `panels` panels."""
    gl_nodes, gl_weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    xs = (mid[:, None] + half[:, None] * gl_nodes[None, :]).ravel()
    ws = (half[:, None] * gl_weights[None, :]).ravel()
    weighted = ws * np.array([transition(x) for x in xs])
    out = np.empty(degree + 1)
    ns = np.arange(degree + 1)
    block = 256
    for s in range(0, len(ns), block):
        nb = ns[s:s + block]
        out[s:s + block] = np.cos(np.outer(nb, xs)) @ weighted
    return out


def _centered_bump_coeffs(half_width: float, flat_half_width: float, degree: int):
    key = (half_width, flat_half_width, degree)
    cached = _BUMP_CACHE.get(key)
    if cached is not None:
        return cached
    h, h1 = half_width, flat_half_width
    width = h - h1
    transition = lambda x: _smoothstep((x - h1) / width)

    # refine panel count until two resolutions agree below the certified bound
    panels = max(4, int(degree * width / 3.0) + 1)
    tails = _transition_integrals(transition, h1, h, degree, panels)
    worst = math.inf
    for _ in range(6):
        finer = _transition_integrals(transition, h1, h, degree, 2 * panels)
        worst = float(np.max(np.abs(finer - tails)))
        tails = finer
        panels *= 2
        if worst <= 0.5 * QUAD_CERT:
            break
    else:
        raise QuadratureError(
            f"bump coefficient quadrature did not converge (disagreement {worst:.2g})"
        )

    ns = np.arange(degree + 1, dtype=float)
    flat = np.empty(degree + 1)
    flat[0] = h1
    flat[1:] = np.sin(ns[1:] * h1) / ns[1:]
    coeffs = (flat + tails) / math.pi
    result = (coeffs, worst / math.pi)
    _BUMP_CACHE[key] = result
    return result


def build_mollifier(center: float, half_width: float, flat_half_width: float, degree: int) -> Mollifier:
    """Mollifier with Fourier coefficients up to `degree` by adaptive quadrature.

    The bump is even about its center, so the centered coefficients are real
    and shifting is an exact phase modulation.
    """
    if not 0.0 < flat_half_width < half_width <= math.pi:
        raise ValidationError("need 0 < flat_half_width < half_width <= pi")
    if degree < 0:
        raise ValidationError("degree must be nonnegative")
    coeffs, accuracy = _centered_bump_coeffs(float(half_width), float(flat_half_width), int(degree))
    return Mollifier(
        center=float(center),
        half_width=float(half_width),
        flat_half_width=float(flat_half_width),
        degree=int(degree),
        centered_coeffs=coeffs,
        accuracy=accuracy,
    )


def identity_mollifier(degree: int) -> Mollifier:
    """Degenerate mollifier identically equal to 1 (delta coefficient sequence)."""
    coeffs = np.zeros(int(degree) + 1)
    coeffs[0] = 1.0
    return Mollifier(0.0, math.pi, math.pi / 2, int(degree), coeffs, 0.0)


def localize(window: CoefficientWindow, moll: Mollifier, out_bandwidth: int) -> CoefficientWindow:
    """Coefficients of (signal * mollifier) for |k| <= out_bandwidth.

    Discrete convolution of the window with the mollifier coefficients.  The
    output bandwidth is capped at half the input bandwidth so the truncation
    only drops products against mollifier coefficients of order >= bandwidth/2,
    which are super-polynomially small.
    """
    b = int(out_bandwidth)
    m = window.bandwidth
    if b < 1:
        raise ValidationError("out_bandwidth must be positive")
    if b > m // 2:
        raise ValidationError("out_bandwidth must not exceed half the window bandwidth")
    if moll.degree < m + b:
        raise ValidationError(
            f"mollifier degree {moll.degree} too small: need >= bandwidth + out_bandwidth = {m + b}"
        )
    conv = np.convolve(window.coeffs, moll.two_sided())
    center = m + moll.degree
    out = conv[center - b: center + b + 1]
    return CoefficientWindow(out, b, real_signal=window.real_signal)


# ---------------------------------------------------------------------------
# full reconstruction
# ---------------------------------------------------------------------------

@dataclass
class ReconstructionResult:
    """Recovered jump data plus the corrected series of the final approximation."""

    jumps: tuple
    magnitudes: tuple
    corrected: CoefficientWindow
    smoothness: int
    reports: tuple = field(default=())

    def evaluate(self, x):
        """Final approximation: absorbing part from the estimates plus the
        corrected truncated series."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        values = evaluate_absorbing(self.jumps, self.magnitudes, xs) + partial_sum(
            self.corrected, xs
        )
        return float(values[0]) if np.isscalar(x) or np.ndim(x) == 0 else values


def reconstruct(window: CoefficientWindow, smoothness: int, num_jumps: int, min_separation: float) -> ReconstructionResult:
    """Recover jump positions, jump magnitudes, and a full-accuracy approximant.

    Pipeline: coarse jump positions from the order-zero transform; one
    mollifier-localized subproblem per jump (skipped when there is only one
    jump, since the window is already single-jump and the taper would only add
    contamination); a single-node progression solve at offset = stride =
    floor(bandwidth / (d+2)) per subproblem; synthesis of the approximant from
    the estimated jump data plus the corrected series.

    min_separation must lower-bound the true pairwise jump separation.
    """
    d = int(smoothness)
    k = int(num_jumps)
    m = window.bandwidth
    if d < 0 or k < 1:
        raise ValidationError("need smoothness >= 0 and num_jumps >= 1")
    if m < 8 * (d + 2) * k:
        raise ValidationError(
            f"bandwidth {m} too small for d={d}, K={k} (need >= {8 * (d + 2) * k})"
        )
    if not 0.0 < min_separation <= 3.0 * math.pi:
        raise ValidationError("min_separation must be in (0, 3*pi]")

    coarse = initial_jump_estimates(window, k)

    estimates = []
    reports = []
    for j, x0 in enumerate(coarse):
        if k == 1:
            loc = window
        else:
            moll = build_mollifier(
                center=x0,
                half_width=min_separation / 3.0,
                flat_half_width=min_separation / 9.0,
                degree=m + m // 2,
            )
            loc = localize(window, moll, m // 2)
        m_loc = loc.bandwidth
        n = m_loc // (d + 2)
        transformed = eckhoff_transform(loc, d)
        sub = SampleSet(
            SamplingScheme(n, n, d + 2),
            tuple(transformed.values[n * (i + 1) - 1] for i in range(d + 2)),
            0.0,
        )
        hint = wrap_angle(-x0)
        try:
            node_model, report = decimated_solve(
                sub, (d + 1,), [hint], base_solver="annihilation", refine=True
            )
        except AmbiguousBranchError as exc:
            raise AmbiguousBranchError(f"branch ambiguity at jump {j}: {exc}") from exc
        x_hat = position_from_node(node_model.nodes[0])
        mags = magnitudes_from_coefficients(node_model.coefficients[0], d)
        estimates.append((x_hat, mags))
        reports.append(report)

    estimates.sort(key=lambda pair: pair[0])
    jumps_hat = tuple(x for x, _ in estimates)
    mags_hat = tuple(
        tuple(float(estimates[j][1][l]) for j in range(k)) for l in range(d + 1)
    )

    ks = np.arange(-m, m + 1)
    corrected = np.array(window.coeffs, dtype=complex)
    nonzero = ks != 0
    corrected[nonzero] -= piecewise_poly_coeffs(jumps_hat, mags_hat, d, ks[nonzero])
    corrected_window = CoefficientWindow(corrected, m, real_signal=window.real_signal)

    return ReconstructionResult(
        jumps=jumps_hat,
        magnitudes=mags_hat,
        corrected=corrected_window,
        smoothness=d,
        reports=tuple(reports),
    )


def sup_error_away(
    signal: PiecewiseSignal,
    result: ReconstructionResult,
    exclusion_radius: float,
    grid_size: int,
) -> float:
    """Max |f - f_hat| on a uniform grid, excluding neighborhoods of the true jumps."""
    rho = float(exclusion_radius)
    if rho <= 0:
        raise ValidationError("exclusion radius must be positive")
    grid = -math.pi + TWO_PI * np.arange(int(grid_size)) / int(grid_size)
    keep = np.ones(len(grid), dtype=bool)
    for xj in signal.jumps:
        delta = np.abs(np.mod(grid - xj + math.pi, TWO_PI) - math.pi)
        keep &= delta > rho
    if not np.any(keep):
        raise ValidationError("exclusion radius removed every grid point")
    pts = grid[keep]
    return float(np.max(np.abs(evaluate_signal(signal, pts) - result.evaluate(pts))))


# ---------------------------------------------------------------------------
# synthetic signals
# ---------------------------------------------------------------------------

def synthesize_psi(smoothness: int, decay: float, degree: int, rng) -> tuple:
    """Smooth-part coefficients r_n * n^(-d-2) * exp(i phi_n) with random
    amplitudes r_n in [0, decay) and phases, plus a random real mean."""
    coeffs = [complex(decay * (2.0 * rng.random() - 1.0), 0.0)]
    for n in range(1, int(degree) + 1):
        r = decay * rng.random()
        phi = TWO_PI * rng.random()
        coeffs.append(r * float(n) ** (-int(smoothness) - 2) * cmath.exp(1j * phi))
    return tuple(coeffs)


def random_piecewise_signal(
    smoothness: int,
    num_jumps: int,
    seed: int,
    min_separation: float = 1.5,
    base_magnitude_range=(2.0, 4.0),
    higher_magnitude_scale: float = 0.5,
    psi_decay: float = 1.0,
    psi_degree: int = 4096,
) -> PiecewiseSignal:
    """Seeded random signal with certified jump separation and magnitude floor."""
    d = int(smoothness)
    k = int(num_jumps)
    rng = np.random.default_rng(seed)
    if k * min_separation >= TWO_PI:
        raise ValidationError("cannot place the jumps with that separation")
    for _ in range(1000):
        jumps = np.sort(rng.uniform(-math.pi, math.pi, size=k))
        if k == 1:
            break
        gaps = np.diff(jumps).tolist() + [TWO_PI - (jumps[-1] - jumps[0])]
        if min(gaps) >= min_separation:
            break
    else:
        raise ValidationError("failed to draw jump positions with the requested separation")

    lo, hi = base_magnitude_range
    signs = np.where(rng.random(k) < 0.5, -1.0, 1.0)
    base = signs * rng.uniform(lo, hi, size=k)
    magnitudes = [tuple(float(a) for a in base)]
    for _ in range(d):
        row = rng.uniform(-higher_magnitude_scale, higher_magnitude_scale, size=k)
        magnitudes.append(tuple(float(a) for a in row))

    psi = synthesize_psi(d, psi_decay, psi_degree, rng)
    return PiecewiseSignal(
        smoothness=d,
        jumps=tuple(float(x) for x in jumps),
        magnitudes=tuple(magnitudes),
        psi_coeffs=psi,
        psi_decay=psi_decay,
    )


# ---------------------------------------------------------------------------
# window file format: one line per k from -M to M, "k re im"
# ---------------------------------------------------------------------------

def write_window_file(window: CoefficientWindow, path) -> None:
    m = window.bandwidth
    with open(path, "w", encoding="utf-8") as fh:
        for i, k in enumerate(range(-m, m + 1)):
            c = complex(window.coeffs[i])
            fh.write(f"{k} {c.real!r} {c.imag!r}\n")


def read_window_file(path) -> CoefficientWindow:
    ks = []
    coeffs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValidationError(f"bad window line: {line!r}")
            ks.append(int(parts[0]))
            coeffs.append(complex(float(parts[1]), float(parts[2])))
    if not ks:
        raise ValidationError("empty window file")
    m = max(ks)
    if sorted(ks) != list(range(-m, m + 1)):
        raise ValidationError("window file must cover every k from -M to M exactly once")
    order = np.argsort(ks)
    arr = np.asarray(coeffs, dtype=complex)[order]
    symmetric = float(np.max(np.abs(arr - np.conj(arr[::-1])))) <= REAL_WINDOW_TOL
    return CoefficientWindow(arr, m, real_signal=symmetric)
