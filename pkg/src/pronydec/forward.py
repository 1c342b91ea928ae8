"""Forward measurement map for polynomial Prony models, its Jacobian, and noise."""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .model import (
    TWO_PI,
    PronyModel,
    RankDeficiencyError,
    SampleSet,
    SamplingScheme,
    ValidationError,
)

#: largest sample index accepted by the forward map (k^l stays in double range)
MAX_INDEX = 10**7
#: largest node multiplicity accepted by the forward map
MAX_MULTIPLICITY = 12


def _check_limits(model: PronyModel, extent: int) -> None:
    if abs(extent) > MAX_INDEX:
        raise ValidationError(f"index extent {extent} exceeds the supported {MAX_INDEX}")
    if max(model.multiplicities) > MAX_MULTIPLICITY:
        raise ValidationError(f"multiplicities above {MAX_MULTIPLICITY} are not supported")


def _check_scheme(model: PronyModel, scheme: SamplingScheme) -> None:
    _check_limits(model, scheme.count * scheme.stride + scheme.offset)


def _index_powers(ks: np.ndarray, max_power: int) -> np.ndarray:
    """Table k^l for l = 0..max_power, built by repeated multiplication."""
    pows = np.empty((max_power + 1, len(ks)))
    pows[0] = 1.0
    for l in range(1, max_power + 1):
        pows[l] = pows[l - 1] * ks
    return pows


def evaluate_moments(model: PronyModel, scheme: SamplingScheme) -> SampleSet:
    """Exact measurements m_k = sum_j z_j^k * sum_l c_{l,j} k^l on the scheme.

    Powers of the unit nodes are taken as exp(i*k*arg z_j) so the modulus does
    not drift for large k.
    """
    _check_scheme(model, scheme)
    ks = np.asarray(scheme.indices, dtype=float)
    pows = _index_powers(ks, max(model.multiplicities) - 1)
    values = np.zeros(len(ks), dtype=complex)
    for theta, coeffs in zip(model.node_args, model.coefficients):
        poly = np.zeros(len(ks), dtype=complex)
        for l, c in enumerate(coeffs):
            poly += c * pows[l]
        values += np.exp(1j * theta * ks) * poly
    return SampleSet(scheme, tuple(values), 0.0)


def moment_at(model: PronyModel, k: int) -> complex:
    """Single measurement m_k; k may be negative (used for symmetry checks)."""
    _check_limits(model, k)
    total = 0.0 + 0.0j
    for theta, coeffs in zip(model.node_args, model.coefficients):
        poly = 0.0 + 0.0j
        kp = 1.0
        for c in coeffs:
            poly += c * kp
            kp *= k
        total += cmath.exp(1j * theta * k) * poly
    return total


def coefficient_matrix(nodes, multiplicities, ks) -> np.ndarray:
    """Columns z_j^k * k^l for each node j and l = 0..mult_j-1 (confluent Vandermonde)."""
    ks = np.asarray(ks, dtype=float)
    pows = _index_powers(ks, max(multiplicities) - 1)
    cols = []
    for z, m in zip(nodes, multiplicities):
        zk = np.exp(1j * cmath.phase(z) * ks)
        for l in range(m):
            cols.append(zk * pows[l])
    return np.column_stack(cols)


def jacobian(model: PronyModel, scheme: SamplingScheme) -> np.ndarray:
    """Jacobian of the measurement map, one row per index.

    Columns are grouped per node j as (d/dc_{0,j}, ..., d/dc_{mult_j-1,j}, d/dz_j)
    with d m_k/dc_{l,j} = z_j^k k^l and d m_k/dz_j = k z_j^{k-1} sum_l c_{l,j} k^l.
    """
    _check_scheme(model, scheme)
    ks = np.asarray(scheme.indices, dtype=float)
    pows = _index_powers(ks, max(model.multiplicities) - 1)
    cols = []
    for theta, m, coeffs in zip(model.node_args, model.multiplicities, model.coefficients):
        zk = np.exp(1j * theta * ks)
        for l in range(m):
            cols.append(zk * pows[l])
        poly = np.zeros(len(ks), dtype=complex)
        for l, c in enumerate(coeffs):
            poly += c * pows[l]
        zk1 = np.exp(1j * theta * (ks - 1.0))
        cols.append(ks * zk1 * poly)
    return np.column_stack(cols)


@dataclass(frozen=True)
class RegularityReport:
    """Outcome of the local-invertibility test at a given stride."""

    ok: bool
    stride: int
    separation: float
    node_pair_violations: tuple
    coefficient_violations: tuple

    def __bool__(self) -> bool:
        return self.ok


def stride_separation(model: PronyModel, p: int) -> float:
    """min_{i != j} |z_j^p - z_i^p|; 2.0 by convention for a single node."""
    if model.num_nodes == 1:
        return 2.0
    powered = [cmath.exp(1j * theta * p) for theta in model.node_args]
    return min(
        abs(powered[i] - powered[j])
        for i in range(len(powered))
        for j in range(i + 1, len(powered))
    )


def regularity_check(
    model: PronyModel,
    p: int,
    tol_sep: float = 1e-10,
    tol_coeff: float = 1e-10,
) -> RegularityReport:
    """Local invertibility at stride p: distinct p-th node powers and nonzero
    leading coefficients.  Degenerate inputs yield ok=False with a report,
    never an exception."""
    if p < 1:
        raise ValidationError("stride must be positive")
    powered = [cmath.exp(1j * theta * p) for theta in model.node_args]
    pair_violations = []
    for i in range(model.num_nodes):
        for j in range(i + 1, model.num_nodes):
            sep = abs(powered[i] - powered[j])
            if sep <= tol_sep:
                pair_violations.append((i, j, sep))
    coeff_violations = []
    for j, row in enumerate(model.coefficients):
        lead = abs(row[-1])
        if lead <= tol_coeff:
            coeff_violations.append((j, lead))
    return RegularityReport(
        ok=not pair_violations and not coeff_violations,
        stride=p,
        separation=stride_separation(model, p),
        node_pair_violations=tuple(pair_violations),
        coefficient_violations=tuple(coeff_violations),
    )


def condition_estimate(model: PronyModel, scheme: SamplingScheme) -> float:
    """Max-row-sum norm of the inverse Jacobian on the square system (count == R)."""
    if scheme.count != model.unknown_count:
        raise ValidationError("condition estimate needs a square system: count == unknown_count")
    report = regularity_check(model, scheme.stride)
    if not report:
        raise ValidationError(f"model is not a regular point at stride {scheme.stride}: {report}")
    jac = jacobian(model, scheme)
    svals = np.linalg.svd(jac, compute_uv=False)
    if svals[-1] <= svals[0] * 1e-15:
        raise RankDeficiencyError(
            "Jacobian is numerically singular",
            smallest_singular_value=float(svals[-1]),
        )
    inv = np.linalg.inv(jac)
    return float(np.linalg.norm(inv, np.inf))


def add_noise(
    samples: SampleSet,
    eps: float,
    seed: int,
    distribution: str = "disk",
) -> SampleSet:
    """Perturb each value by an independent complex draw of size eps.

    "disk" draws uniformly from the closed disk of radius eps (the worst-case
    bounded-error model).  "gaussian" draws a complex normal with E|eta|^2 =
    eps^2; it is off-model (unbounded) and only offered for comparison.
    """
    if eps < 0:
        raise ValidationError("noise level must be nonnegative")
    if eps == 0:
        return SampleSet(samples.scheme, samples.values, 0.0)
    rng = np.random.default_rng(seed)
    n = samples.scheme.count
    if distribution == "disk":
        radius = eps * np.sqrt(rng.random(n))
        angle = TWO_PI * rng.random(n)
        eta = radius * np.exp(1j * angle)
    elif distribution == "gaussian":
        eta = (eps / np.sqrt(2.0)) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    else:
        raise ValidationError(f"unknown noise distribution {distribution!r}")
    values = np.asarray(samples.values, dtype=complex) + eta
    return SampleSet(samples.scheme, tuple(values), eps)
