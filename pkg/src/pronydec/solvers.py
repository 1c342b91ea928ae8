"""Inversion of the measurement map.

All solvers consume a SampleSet whose values are read as the progression-indexed
sequence q_s = m_{offset + s*stride} and return a model in the "powered" domain
w = z^stride over the index s.  Mapping w back to z (branch selection) and
recovering coefficients in the original index domain is the decimation layer's
job; see decimate.decimated_solve.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .forward import coefficient_matrix, evaluate_moments, jacobian, regularity_check
from .model import (
    PronyModel,
    RankDeficiencyError,
    SampleSet,
    SamplingScheme,
    SolverError,
    ValidationError,
    wrap_angle,
)

#: relative singular-value threshold below which linear systems count as degenerate
RANK_TOL = 1e-12

#: clustering cost ratio under which a second grouping counts as ambiguous
CLUSTER_AMBIGUITY = 0.10


@dataclass(frozen=True)
class SolverReport:
    """Method tag, iteration count, max-abs residual over the used indices, flags."""

    method: str
    iterations: int
    residual: float
    flags: tuple = ()


def max_residual(model: PronyModel, samples: SampleSet) -> float:
    """max_k |m_k(model) - value_k| over the sample scheme."""
    predicted = np.asarray(evaluate_moments(model, samples.scheme).values)
    return float(np.max(np.abs(predicted - np.asarray(samples.values))))


def _progression_view(samples: SampleSet):
    """Values as the sequence q_s, with the s-domain scheme they live on."""
    q = np.asarray(samples.values, dtype=complex)
    return q, SamplingScheme(0, 1, samples.scheme.count)


def _project_unit(w: complex) -> complex:
    mod = abs(w)
    if mod == 0:
        raise SolverError("node estimate collapsed to zero")
    return w / mod


# ---------------------------------------------------------------------------
# coefficient recovery (linear subproblem)
# ---------------------------------------------------------------------------

def confluent_vandermonde_coeffs(nodes, multiplicities, samples: SampleSet):
    """Least-squares coefficients for fixed nodes: columns z_j^k k^l.

    Raises RankDeficiencyError when the basis is numerically rank-deficient
    (nearly aliased nodes), carrying the condition estimate.
    """
    total = sum(multiplicities)
    if samples.scheme.count < total:
        raise ValidationError("need at least as many samples as coefficients")
    matrix = coefficient_matrix(nodes, multiplicities, samples.scheme.indices)
    svals = np.linalg.svd(matrix, compute_uv=False)
    if svals[-1] <= svals[0] * RANK_TOL:
        raise RankDeficiencyError(
            "coefficient basis is numerically rank-deficient (aliased nodes?)",
            smallest_singular_value=float(svals[-1]),
            condition=float(svals[0] / svals[-1]) if svals[-1] > 0 else math.inf,
        )
    solution, *_ = np.linalg.lstsq(matrix, np.asarray(samples.values), rcond=None)
    out = []
    pos = 0
    for m in multiplicities:
        out.append(tuple(complex(c) for c in solution[pos:pos + m]))
        pos += m
    return tuple(out)


# ---------------------------------------------------------------------------
# root clustering for multiple roots
# ---------------------------------------------------------------------------

def _partitions_with_sizes(indices, sizes):
    """All set partitions of `indices` into groups of the prescribed sizes."""
    if not sizes:
        yield ()
        return
    head = sizes[0]
    rest_sizes = sizes[1:]
    first = indices[0]
    for combo in itertools.combinations(indices[1:], head - 1):
        group = (first,) + combo
        remaining = tuple(i for i in indices if i not in group)
        for rest in _partitions_with_sizes(remaining, rest_sizes):
            yield (group,) + rest


def _grouping_cost(roots, grouping):
    cost = 0.0
    for group in grouping:
        pts = roots[list(group)]
        centroid = pts.mean()
        cost += float(np.sum(np.abs(pts - centroid)))
    return cost


def _cluster_roots(roots: np.ndarray, multiplicities):
    """Group roots into clusters of the prescribed size multiset.

    Exhaustive search over partitions for small systems (so the ambiguity check
    can compare grouping costs); greedy agglomeration otherwise.  Returns
    (centroids aligned with `multiplicities`, flags).
    """
    sizes = tuple(sorted(multiplicities, reverse=True))
    total = sum(sizes)
    flags = []
    if total <= 8:
        best = None
        best_cost = math.inf
        second_cost = math.inf
        for grouping in _partitions_with_sizes(tuple(range(total)), sizes):
            cost = _grouping_cost(roots, grouping)
            if cost < best_cost:
                second_cost = best_cost
                best_cost = cost
                best = grouping
            elif cost < second_cost:
                second_cost = cost
        if second_cost <= best_cost * (1 + CLUSTER_AMBIGUITY) + 1e-15 and len(sizes) > 1:
            flags.append("ambiguous-clustering")
        grouping = best
    else:
        clusters = [[i] for i in range(total)]
        max_size = sizes[0]
        while len(clusters) > len(sizes):
            best_pair = None
            best_dist = math.inf
            for a in range(len(clusters)):
                for b in range(a + 1, len(clusters)):
                    if len(clusters[a]) + len(clusters[b]) > max_size:
                        continue
                    ca = roots[clusters[a]].mean()
                    cb = roots[clusters[b]].mean()
                    dist = abs(ca - cb)
                    if dist < best_dist:
                        best_dist = dist
                        best_pair = (a, b)
            if best_pair is None:
                raise SolverError("root clustering failed to reach the prescribed sizes")
            a, b = best_pair
            clusters[a] = clusters[a] + clusters[b]
            del clusters[b]
        if sorted(len(c) for c in clusters) != sorted(sizes):
            raise SolverError("root clustering produced a wrong size profile")
        grouping = tuple(tuple(c) for c in sorted(clusters, key=len, reverse=True))

    # pair each centroid with a requested multiplicity of the matching size
    centroids_by_size = {}
    for group in grouping:
        centroids_by_size.setdefault(len(group), []).append(roots[list(group)].mean())
    assigned = []
    for m in multiplicities:
        assigned.append(centroids_by_size[m].pop(0))
    return assigned, flags


# ---------------------------------------------------------------------------
# Hankel / annihilating-polynomial solver
# ---------------------------------------------------------------------------

def prony_hankel_solve(samples: SampleSet, multiplicities):
    """Classical Prony solve generalized to multiple roots.

    Fits the monic annihilating polynomial of degree L = sum(multiplicities) by
    least squares over all available Hankel rows, takes its roots, clusters them
    into groups of the prescribed sizes (centroid = node estimate in the powered
    domain), then recovers polynomial amplitudes by confluent-Vandermonde least
    squares.
    """
    multiplicities = tuple(int(m) for m in multiplicities)
    if not multiplicities or any(m < 1 for m in multiplicities):
        raise ValidationError("multiplicities must be positive")
    total = sum(multiplicities)
    q, s_scheme = _progression_view(samples)
    if len(q) < 2 * total:
        raise ValidationError(f"need at least {2 * total} samples, got {len(q)}")

    rows = len(q) - total
    hankel = np.empty((rows, total + 1), dtype=complex)
    for s in range(rows):
        hankel[s] = q[s:s + total + 1]
    # the L-column system must have full rank; the (L+1)-column Hankel is
    # rank-deficient by design on exact data (the annihilator is its null space)
    svals = np.linalg.svd(hankel[:, :total], compute_uv=False)
    if svals[-1] <= svals[0] * RANK_TOL:
        raise RankDeficiencyError(
            "degenerate sample set",
            smallest_singular_value=float(svals[-1]),
        )
    coeffs, *_ = np.linalg.lstsq(hankel[:, :total], -hankel[:, total], rcond=None)
    # monic polynomial x^L + coeffs[L-1] x^(L-1) + ... + coeffs[0]
    roots = np.roots(np.concatenate(([1.0 + 0.0j], coeffs[::-1])))

    centroids, flags = _cluster_roots(roots, multiplicities)
    nodes = tuple(_project_unit(w) for w in centroids)
    coefficients = confluent_vandermonde_coeffs(nodes, multiplicities, SampleSet(s_scheme, q))
    model = PronyModel(nodes, multiplicities, coefficients).canonical()
    report = SolverReport(
        method="hankel",
        iterations=1,
        residual=max_residual(model, SampleSet(s_scheme, q)),
        flags=tuple(flags),
    )
    return model, report


# ---------------------------------------------------------------------------
# single-node annihilation solver
# ---------------------------------------------------------------------------

def annihilation_solve_single(samples: SampleSet, multiplicity: int, expected_node: complex):
    """Single-node solve via the shift-operator identity.

    (E - w)^m annihilates w^s Q(s) for deg Q < m, so each run of m+1 consecutive
    samples yields a degree-m polynomial equation in w with w as a simple root.
    Multiple shifted equations are averaged into one polynomial by least squares
    (principal right singular vector of the stacked coefficient rows).  The root
    with modulus in [0.5, 2] and argument nearest the hint wins; its amplitudes
    come from confluent-Vandermonde least squares on all samples.
    """
    m = int(multiplicity)
    if m < 1:
        raise ValidationError("multiplicity must be positive")
    q, s_scheme = _progression_view(samples)
    if len(q) < m + 1:
        raise ValidationError(f"need at least {m + 1} samples, got {len(q)}")

    shifts = len(q) - m
    rows = np.empty((shifts, m + 1), dtype=complex)
    binom = [math.comb(m, i) for i in range(m + 1)]
    for s in range(shifts):
        # coefficient of w^i in sum_j C(m,j) (-w)^(m-j) q_{s+j} is (-1)^i C(m,i) q_{s+m-i}
        rows[s] = [((-1) ** i) * binom[i] * q[s + m - i] for i in range(m + 1)]
    if shifts == 1:
        poly = rows[0]
    else:
        # rows are plain linear combinations of the Vh rows, and every row's
        # polynomial vanishes at the true node, so the principal Vh row does too
        _, _, vh = np.linalg.svd(rows)
        poly = vh[0]
    if np.max(np.abs(poly)) == 0:
        raise SolverError("annihilation system vanished identically")
    roots = np.roots(poly[::-1])

    candidates = [w for w in roots if 0.5 <= abs(w) <= 2.0]
    if not candidates:
        raise SolverError("no unimodular root")
    hint_arg = cmath.phase(complex(expected_node))
    dists = sorted(
        (abs(wrap_angle(cmath.phase(w) - hint_arg)), idx) for idx, w in enumerate(candidates)
    )
    if len(dists) > 1 and dists[1][0] - dists[0][0] < 1e-9:
        raise SolverError("hint ambiguous: two roots equally close")
    w = _project_unit(candidates[dists[0][1]])

    coefficients = confluent_vandermonde_coeffs((w,), (m,), SampleSet(s_scheme, q))
    model = PronyModel((w,), (m,), coefficients)
    report = SolverReport(
        method="annihilation",
        iterations=1,
        residual=max_residual(model, SampleSet(s_scheme, q)),
    )
    return model, report


# ---------------------------------------------------------------------------
# ESPRIT (subspace) solver
# ---------------------------------------------------------------------------

def esprit_solve(samples: SampleSet, num_nodes: int):
    """Subspace solve for simple nodes: SVD of the sample Hankel matrix, then the
    shift-invariance equation between the first and last row blocks."""
    k = int(num_nodes)
    if k < 1:
        raise ValidationError("num_nodes must be positive")
    q, s_scheme = _progression_view(samples)
    if len(q) < 2 * k + 1:
        raise ValidationError(f"need at least {2 * k + 1} samples, got {len(q)}")

    n_rows = len(q) // 2 + 1
    n_cols = len(q) - n_rows + 1
    hankel = np.empty((n_rows, n_cols), dtype=complex)
    for i in range(n_rows):
        hankel[i] = q[i:i + n_cols]

    u, svals, _ = np.linalg.svd(hankel, full_matrices=False)
    flags = []
    if len(svals) > k:
        tail = svals[k]
        gap = math.inf if tail == 0 else float(svals[k - 1] / tail)
        if gap < 1.5:
            raise SolverError(f"no rank-{k} structure: singular value gap {gap:.3g}")
        if gap < 10.0:
            flags.append("weak-rank-structure")
    subspace = u[:, :k]
    shift, *_ = np.linalg.lstsq(subspace[:-1], subspace[1:], rcond=None)
    eigs = np.linalg.eigvals(shift)

    nodes = tuple(_project_unit(w) for w in eigs)
    mults = (1,) * k
    coefficients = confluent_vandermonde_coeffs(nodes, mults, SampleSet(s_scheme, q))
    model = PronyModel(nodes, mults, coefficients).canonical()
    report = SolverReport(
        method="esprit",
        iterations=1,
        residual=max_residual(model, SampleSet(s_scheme, q)),
        flags=tuple(flags),
    )
    return model, report


# ---------------------------------------------------------------------------
# damped Gauss-Newton refinement
# ---------------------------------------------------------------------------

def _pack_params(model: PronyModel) -> np.ndarray:
    params = list(model.node_args)
    for row in model.coefficients:
        for c in row:
            params.append(c.real)
            params.append(c.imag)
    return np.asarray(params, dtype=float)


def _unpack_params(params: np.ndarray, multiplicities) -> PronyModel:
    k = len(multiplicities)
    nodes = tuple(cmath.exp(1j * a) for a in params[:k])
    coeffs = []
    pos = k
    for m in multiplicities:
        row = []
        for _ in range(m):
            row.append(complex(params[pos], params[pos + 1]))
            pos += 2
        coeffs.append(tuple(row))
    return PronyModel(nodes, tuple(multiplicities), tuple(coeffs))


def _real_residual(model: PronyModel, samples: SampleSet) -> np.ndarray:
    diff = np.asarray(evaluate_moments(model, samples.scheme).values) - np.asarray(samples.values)
    return np.concatenate([diff.real, diff.imag])


def _real_jacobian(model: PronyModel, samples: SampleSet) -> np.ndarray:
    jac = jacobian(model, samples.scheme)
    cols = []
    pos = 0
    angle_cols = []
    for j, m in enumerate(model.multiplicities):
        coeff_block = jac[:, pos:pos + m]
        z_col = jac[:, pos + m]
        pos += m + 1
        # node argument: dz/dtheta = i z
        angle_cols.append(z_col * (1j * model.nodes[j]))
        for l in range(m):
            cols.append(coeff_block[:, l])         # d/d Re(c)
            cols.append(coeff_block[:, l] * 1j)    # d/d Im(c)
    complex_cols = angle_cols + cols
    real = np.empty((2 * jac.shape[0], len(complex_cols)))
    for idx, col in enumerate(complex_cols):
        real[: jac.shape[0], idx] = col.real
        real[jac.shape[0]:, idx] = col.imag
    return real


def lm_refine(
    samples: SampleSet,
    init: PronyModel,
    max_iterations: int = 200,
    step_tol: float = 1e-12,
):
    """Damped Gauss-Newton fit of the model to the samples.

    Parameters are the node arguments (unit modulus enforced by construction)
    and coefficient real/imaginary parts.  The damping factor is divided by 10
    on accepted steps and multiplied by 10 on rejected ones; iteration stops
    when the proposed step norm drops below step_tol or at the iteration cap.
    """
    report_flags = []
    if not regularity_check(init, samples.scheme.stride):
        raise ValidationError("initial model is not a regular point at the scheme stride")

    multiplicities = init.multiplicities
    params = _pack_params(init)
    model = init
    cost = float(np.sum(_real_residual(model, samples) ** 2))
    best_cost, best_model = cost, model
    lam = 1e-3
    iterations = 0
    changed = False

    while iterations < max_iterations:
        iterations += 1
        residual = _real_residual(model, samples)
        jac = _real_jacobian(model, samples)
        col_norms = np.linalg.norm(jac, axis=0)
        col_norms[col_norms == 0] = 1.0
        scaled = jac / col_norms
        augmented = np.vstack([scaled, math.sqrt(lam) * np.eye(jac.shape[1])])
        rhs = np.concatenate([-residual, np.zeros(jac.shape[1])])
        step_scaled, *_ = np.linalg.lstsq(augmented, rhs, rcond=None)
        step = step_scaled / col_norms
        if float(np.linalg.norm(step)) < step_tol:
            break
        trial_params = params + step
        trial_model = _unpack_params(trial_params, multiplicities)
        trial_cost = float(np.sum(_real_residual(trial_model, samples) ** 2))
        if trial_cost < cost:
            # divergence on accepted steps is impossible by construction
            assert trial_cost <= cost
            params, model, cost = trial_params, trial_model, trial_cost
            changed = True
            lam = max(lam / 10.0, 1e-15)
            if cost < best_cost:
                best_cost, best_model = cost, model
        else:
            lam *= 10.0
            if lam > 1e14:
                report_flags.append("damping-saturated")
                break
    else:
        report_flags.append("max-iterations")

    final = best_model if changed else init
    report = SolverReport(
        method="lm",
        iterations=iterations,
        residual=max_residual(final, samples),
        flags=tuple(report_flags),
    )
    return final, report
