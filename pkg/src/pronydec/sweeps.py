"""Reproducible experiment driver: seeded sweeps over decimation strides or
Fourier bandwidths, slope fitting, and deterministic CSV/SVG emission.

Determinism contract: identical configs (including seeds) produce byte-identical
CSVs regardless of the worker count.  Wall-clock timings are therefore kept out
of the main table and returned (or written) separately.
"""

from __future__ import annotations

import cmath
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import fourier
from .decimate import decimated_solve, node_error_bound
from .forward import evaluate_moments, stride_separation
from .model import (
    TWO_PI,
    PronyModel,
    PronydecError,
    SampleSet,
    SamplingScheme,
    ValidationError,
    circle_distance,
    match_estimates,
    model_from_dict,
    model_to_dict,
    samples_to_dict,
)
from .solvers import confluent_vandermonde_coeffs, lm_refine, max_residual

KINDS = (
    "fixed-count-decimation",
    "fixed-top-index-decimation",
    "fourier-convergence",
    "bound-check",
)

DECIMATION_SOLVERS = ("hankel", "esprit", "lm")


@dataclass(frozen=True)
class SweepConfig:
    """Declarative description of one experiment.

    model:  {"kind": "two-node", "gap": g, "coefficient": c}          fixed model
            {"kind": "random-simple", "num_nodes": k,
             "min_stride_separation": s}                              per-seed model
    signal: {"smoothness": d, "num_jumps": k, "min_separation": s,
             "psi_decay": r, "psi_degree": n,
             "base_magnitude_range": [lo, hi],
             "higher_magnitude_scale": s,
             "reconstruction_separation": J}
    """

    kind: str
    seeds: tuple
    noise: float = 0.0
    solver: str = "hankel"
    p_values: tuple = ()
    m_values: tuple = ()
    count: int = 0
    top_index: int = 0
    model: dict | None = None
    signal: dict | None = None
    coeff_constant: float = 1.0
    exclusion_radius: float = 0.1
    grid_size: int = 1024
    workers: int = 1
    csv_path: str | None = None
    svg_path: str | None = None
    timing_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "p_values", tuple(int(p) for p in self.p_values))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        if self.kind not in KINDS:
            raise ValidationError(f"unknown sweep kind {self.kind!r}; pick from {KINDS}")
        if not self.seeds:
            raise ValidationError("seed list must be non-empty")
        if self.noise < 0:
            raise ValidationError("noise level must be nonnegative")
        if self.kind == "fourier-convergence":
            if not self.m_values:
                raise ValidationError("fourier-convergence needs m_values")
            if self.signal is None:
                raise ValidationError("fourier-convergence needs a signal spec")
        else:
            if not self.p_values:
                raise ValidationError(f"{self.kind} needs p_values")
            if self.model is None:
                raise ValidationError(f"{self.kind} needs a model spec")
            if self.solver not in DECIMATION_SOLVERS:
                raise ValidationError(
                    f"unknown solver {self.solver!r}; pick from {DECIMATION_SOLVERS}"
                )
        if self.kind == "fixed-count-decimation" and self.count < 2:
            raise ValidationError("fixed-count-decimation needs count >= 2")
        if self.kind == "fixed-top-index-decimation" and self.top_index < 1:
            raise ValidationError("fixed-top-index-decimation needs top_index >= 1")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["seeds"] = list(self.seeds)
        data["p_values"] = list(self.p_values)
        data["m_values"] = list(self.m_values)
        return data

    @staticmethod
    def from_dict(data: dict) -> "SweepConfig":
        known = {f for f in SweepConfig.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown sweep config fields: {sorted(unknown)}")
        return SweepConfig(**data)


@dataclass
class SweepResult:
    columns: tuple
    rows: list
    slopes: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------

def _two_node_model(gap: float, coefficient: complex = 1.0) -> PronyModel:
    half = float(gap) / 2.0
    return PronyModel(
        (cmath.exp(1j * half), cmath.exp(-1j * half)),
        (1, 1),
        ((coefficient,), (coefficient,)),
    ).canonical()


def _random_simple_model(num_nodes: int, seed: int, p_values, min_stride_separation: float) -> PronyModel:
    """Seeded random simple-node model, rejection-sampled so that the powered
    node separation stays above the floor for every stride in the sweep."""
    rng = np.random.default_rng([int(seed), 0x5EED])
    for _ in range(10_000):
        args = rng.uniform(-math.pi, math.pi, size=int(num_nodes))
        nodes = tuple(cmath.exp(1j * a) for a in args)
        moduli = rng.uniform(0.5, 2.0, size=int(num_nodes))
        phases = rng.uniform(0.0, TWO_PI, size=int(num_nodes))
        coeffs = tuple((complex(m * math.cos(f), m * math.sin(f)),) for m, f in zip(moduli, phases))
        model = PronyModel(nodes, (1,) * int(num_nodes), coeffs)
        if all(stride_separation(model, p) >= min_stride_separation for p in p_values):
            return model.canonical()
    raise ValidationError("could not draw a model with the requested stride separations")


def _build_model(config: SweepConfig, seed: int) -> PronyModel:
    spec = config.model
    kind = spec.get("kind", "two-node")
    if kind == "two-node":
        return _two_node_model(spec.get("gap", 1e-2), spec.get("coefficient", 1.0))
    if kind == "random-simple":
        return _random_simple_model(
            spec.get("num_nodes", 2),
            seed,
            config.p_values,
            spec.get("min_stride_separation", 0.8),
        )
    raise ValidationError(f"unknown model spec kind {kind!r}")


def _count_for_stride(config: SweepConfig, p: int, truth: PronyModel) -> int:
    if config.kind == "fixed-count-decimation":
        return config.count
    if config.kind == "fixed-top-index-decimation":
        return config.top_index // p
    # bound-check: the square system of the model
    return truth.unknown_count


def _union_noise(config: SweepConfig, seed: int, truth: PronyModel) -> dict:
    """Disk noise drawn once per seed on the union of all sweep index sets,
    so different strides see identical perturbations on shared indices."""
    union = set()
    for p in config.p_values:
        union.update(s * p for s in range(_count_for_stride(config, p, truth)))
    ordered = sorted(union)
    rng = np.random.default_rng([int(seed), 0x0D15C])
    u = rng.random((len(ordered), 2))
    eta = config.noise * np.sqrt(u[:, 0]) * np.exp(1j * TWO_PI * u[:, 1])
    return dict(zip(ordered, eta))


# ---------------------------------------------------------------------------
# per-task solves
# ---------------------------------------------------------------------------

def _solve_decimated(config: SweepConfig, model: PronyModel, samples: SampleSet, hints):
    if config.solver in ("hankel", "esprit"):
        return decimated_solve(
            samples, model.multiplicities, hints, base_solver=config.solver, refine=True
        )
    # "lm": initialize from the oracle hints plus a linear coefficient fit
    init_nodes = tuple(cmath.exp(1j * a) for a in hints)
    init_coeffs = confluent_vandermonde_coeffs(init_nodes, model.multiplicities, samples)
    init = PronyModel(init_nodes, model.multiplicities, init_coeffs)
    return lm_refine(samples, init)


def _decimation_task(config: SweepConfig, p: int, seed: int):
    truth = _build_model(config, seed)
    count = _count_for_stride(config, p, truth)
    scheme = SamplingScheme(0, p, count)
    exact = evaluate_moments(truth, scheme)
    noise_map = _union_noise(config, seed, truth)
    values = tuple(v + noise_map[k] for v, k in zip(exact.values, scheme.indices))
    samples = SampleSet(scheme, values, config.noise)
    hints = list(truth.node_args)

    rows = []
    artifact = None
    start = time.perf_counter()
    try:
        estimate, report = _solve_decimated(config, truth, samples, hints)
        elapsed = time.perf_counter() - start
        match = match_estimates(estimate, truth)
        bounds = node_error_bound(truth, p, config.noise)
        for j in range(truth.num_nodes):
            est_node = estimate.nodes[match.assignment[j]]
            rows.append({
                "p": p,
                "seed": seed,
                "node_index": j,
                "error": abs(est_node - truth.nodes[j]),
                "bound": float(bounds[j]),
                "residual": report.residual,
                "method": report.method,
                "iterations": report.iterations,
                "flags": ";".join(report.flags),
            })
        artifact = (model_to_dict(estimate), samples_to_dict(samples))
    except PronydecError as exc:
        elapsed = time.perf_counter() - start
        for j in range(truth.num_nodes):
            rows.append({
                "p": p,
                "seed": seed,
                "node_index": j,
                "error": math.nan,
                "bound": math.nan,
                "residual": math.nan,
                "method": config.solver,
                "iterations": 0,
                "flags": f"solver-error:{type(exc).__name__}",
            })
    return (p, seed), rows, elapsed, artifact


def _signal_for_seed(config: SweepConfig, seed: int):
    spec = config.signal
    return fourier.random_piecewise_signal(
        smoothness=spec.get("smoothness", 0),
        num_jumps=spec.get("num_jumps", 1),
        seed=seed,
        min_separation=spec.get("min_separation", 1.5),
        base_magnitude_range=tuple(spec.get("base_magnitude_range", (3.0, 5.0))),
        higher_magnitude_scale=spec.get("higher_magnitude_scale", 0.5),
        psi_decay=spec.get("psi_decay", 1.0),
        psi_degree=spec.get("psi_degree", 8192),
    )


def _fourier_task(config: SweepConfig, m: int, seed: int):
    spec = config.signal
    d = spec.get("smoothness", 0)
    k = spec.get("num_jumps", 1)
    sep = spec.get("reconstruction_separation", spec.get("min_separation", 1.5))
    signal = _signal_for_seed(config, seed)
    window = fourier.signal_coeffs(signal, m)
    row = {"M": m, "seed": seed}
    start = time.perf_counter()
    try:
        result = fourier.reconstruct(window, d, k, sep)
        elapsed = time.perf_counter() - start
        row["jump_error"] = max(
            circle_distance(a, b) for a, b in zip(result.jumps, signal.jumps)
        )
        for l in range(d + 1):
            row[f"mag_error_{l}"] = max(
                abs(a - b) for a, b in zip(result.magnitudes[l], signal.magnitudes[l])
            )
        row["sup_away"] = fourier.sup_error_away(
            signal, result, config.exclusion_radius, config.grid_size
        )
        row["flags"] = ""
    except PronydecError as exc:
        elapsed = time.perf_counter() - start
        row["jump_error"] = math.nan
        for l in range(d + 1):
            row[f"mag_error_{l}"] = math.nan
        row["sup_away"] = math.nan
        row["flags"] = f"reconstruction-error:{type(exc).__name__}"
    return (m, seed), [row], elapsed, None


# ---------------------------------------------------------------------------
# sweep runners
# ---------------------------------------------------------------------------

def _run_tasks(config: SweepConfig, task, grid):
    results = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(task, config, a, b) for a, b in grid]
            results = [f.result() for f in futures]
    else:
        results = [task(config, a, b) for a, b in grid]
    results.sort(key=lambda r: r[0])
    return results


def _collect_decimation(config: SweepConfig) -> SweepResult:
    grid = [(p, seed) for p in config.p_values for seed in config.seeds]
    results = _run_tasks(config, _decimation_task, grid)
    rows = []
    timings = {}
    artifacts = {}
    for key, task_rows, elapsed, artifact in results:
        rows.extend(task_rows)
        timings[key] = elapsed
        if artifact is not None:
            artifacts[key] = artifact
    rows.sort(key=lambda r: (r["p"], r["seed"], r["node_index"]))
    columns = (
        "p", "seed", "node_index", "error", "bound",
        "residual", "method", "iterations", "flags",
    )
    return SweepResult(columns=columns, rows=rows, timings=timings, artifacts=artifacts)


def run_fixed_count_sweep(config: SweepConfig) -> SweepResult:
    """Stride sweep at a fixed number of measurements (indices {0, p, ..., (count-1)p})."""
    if config.kind != "fixed-count-decimation":
        raise ValidationError("config kind mismatch")
    return _collect_decimation(config)


def run_fixed_top_sweep(config: SweepConfig) -> SweepResult:
    """Stride sweep at a fixed top index; the count shrinks as top_index // p."""
    if config.kind != "fixed-top-index-decimation":
        raise ValidationError("config kind mismatch")
    return _collect_decimation(config)


def run_bound_check_sweep(config: SweepConfig) -> SweepResult:
    """Square-system solves on per-seed random models, with per-node error bounds."""
    if config.kind != "bound-check":
        raise ValidationError("config kind mismatch")
    return _collect_decimation(config)


def run_fourier_convergence(config: SweepConfig) -> SweepResult:
    """Reconstruction error sweep over bandwidths, with fitted log-log slopes.

    Slopes are fitted on the per-bandwidth medians over seeds, using the largest
    ceil(half) of the bandwidth list.
    """
    if config.kind != "fourier-convergence":
        raise ValidationError("config kind mismatch")
    if len(config.m_values) < 2:
        raise ValidationError("need at least two bandwidths")
    grid = [(m, seed) for m in config.m_values for seed in config.seeds]
    results = _run_tasks(config, _fourier_task, grid)
    rows = []
    timings = {}
    for key, task_rows, elapsed, _ in results:
        rows.extend(task_rows)
        timings[key] = elapsed
    rows.sort(key=lambda r: (r["M"], r["seed"]))

    d = config.signal.get("smoothness", 0)
    error_cols = ["jump_error"] + [f"mag_error_{l}" for l in range(d + 1)] + ["sup_away"]
    columns = tuple(["M", "seed"] + error_cols + ["flags"])

    ms = sorted(set(config.m_values))
    top = ms[-math.ceil(len(ms) / 2):]
    slopes = {}
    for col in error_cols:
        points = []
        for m in top:
            vals = [r[col] for r in rows if r["M"] == m and not math.isnan(r[col])]
            if vals:
                points.append((float(m), float(np.median(vals))))
        if len(points) >= 2 and all(y > 0 for _, y in points):
            slopes[col] = fit_loglog_slope(points)
        else:
            slopes[col] = math.nan
    return SweepResult(columns=columns, rows=rows, slopes=slopes, timings=timings)


def run_sweep(config: SweepConfig) -> SweepResult:
    runner = {
        "fixed-count-decimation": run_fixed_count_sweep,
        "fixed-top-index-decimation": run_fixed_top_sweep,
        "bound-check": run_bound_check_sweep,
        "fourier-convergence": run_fourier_convergence,
    }[config.kind]
    return runner(config)


def audit_rows(result: SweepResult, fraction: float = 0.01, seed: int = 0) -> int:
    """Recompute residuals from the per-solve artifacts for a random subset of
    rows; returns the number audited.  Raises if any residual disagrees."""
    keys = sorted(result.artifacts)
    if not keys:
        return 0
    rng = np.random.default_rng(seed)
    n_pick = max(1, int(math.ceil(fraction * len(keys))))
    picked = [keys[i] for i in rng.choice(len(keys), size=n_pick, replace=False)]
    from .model import samples_from_dict

    for key in picked:
        model_dict, samples_dict = result.artifacts[key]
        recomputed = max_residual(model_from_dict(model_dict), samples_from_dict(samples_dict))
        recorded = [r["residual"] for r in result.rows if (r["p"], r["seed"]) == key]
        for value in recorded:
            if not math.isclose(value, recomputed, rel_tol=1e-12, abs_tol=1e-15):
                raise AssertionError(
                    f"residual audit failed at {key}: recorded {value}, recomputed {recomputed}"
                )
    return n_pick


# ---------------------------------------------------------------------------
# slope fitting and emission
# ---------------------------------------------------------------------------

def fit_loglog_slope(points) -> float:
    """Least-squares slope of log(y) against log(x)."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2:
        raise ValidationError("need at least two points")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ValidationError("log-log fit needs positive values")
    xs = np.log([x for x, _ in pts])
    ys = np.log([y for _, y in pts])
    return float(np.polyfit(xs, ys, 1)[0])


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    raise ValidationError(f"cannot format cell of type {type(value).__name__}")


def emit_csv(rows, path, columns) -> None:
    """Deterministic CSV: fixed column order, shortest-round-trip float text."""
    if not rows:
        raise ValidationError("refusing to write an empty table")
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_timings_csv(timings: dict, path, key_names=("a", "b")) -> None:
    """Wall-clock sidecar; excluded from the byte-determinism contract."""
    if not timings:
        raise ValidationError("refusing to write an empty table")
    lines = [",".join(key_names) + ",seconds"]
    for key in sorted(timings):
        lines.append(",".join(str(k) for k in key) + f",{timings[key]!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _svg_ticks(lo: float, hi: float):
    """Decade tick positions covering [lo, hi] in log space."""
    first = math.floor(math.log10(lo))
    last = math.ceil(math.log10(hi))
    return [10.0 ** e for e in range(first, last + 1)]


def emit_svg(rows, path, x_col: str, y_col: str, title: str = "") -> None:
    """Deterministic log-log scatter with a median line per x value."""
    if not rows:
        raise ValidationError("refusing to plot an empty table")
    pts = [
        (float(r[x_col]), float(r[y_col]))
        for r in rows
        if not (math.isnan(float(r[x_col])) or math.isnan(float(r[y_col])))
        and float(r[x_col]) > 0 and float(r[y_col]) > 0
    ]
    if not pts:
        raise ValidationError("no plottable points (all nonpositive or missing)")
    width, height = 640, 480
    mleft, mright, mtop, mbottom = 70, 20, 30, 50
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    lx0, lx1 = math.log10(min(xs)), math.log10(max(xs))
    ly0, ly1 = math.log10(min(ys)), math.log10(max(ys))
    if lx1 - lx0 < 1e-9:
        lx0, lx1 = lx0 - 0.5, lx1 + 0.5
    if ly1 - ly0 < 1e-9:
        ly0, ly1 = ly0 - 0.5, ly1 + 0.5

    def px(x):
        return mleft + (math.log10(x) - lx0) / (lx1 - lx0) * (width - mleft - mright)

    def py(y):
        return height - mbottom - (math.log10(y) - ly0) / (ly1 - ly0) * (height - mtop - mbottom)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.6g}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width / 2:.6g}" y="{height - 10}" text-anchor="middle" font-size="12">{x_col}</text>',
        f'<text x="15" y="{height / 2:.6g}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {height / 2:.6g})">{y_col}</text>',
    ]
    for tx in _svg_ticks(min(xs), max(xs)):
        if lx0 - 1e-9 <= math.log10(tx) <= lx1 + 1e-9:
            parts.append(
                f'<line x1="{px(tx):.6g}" y1="{mtop}" x2="{px(tx):.6g}" y2="{height - mbottom}" '
                f'stroke="#dddddd"/>'
            )
            parts.append(
                f'<text x="{px(tx):.6g}" y="{height - mbottom + 15}" text-anchor="middle" '
                f'font-size="10">{tx:.6g}</text>'
            )
    for ty in _svg_ticks(min(ys), max(ys)):
        if ly0 - 1e-9 <= math.log10(ty) <= ly1 + 1e-9:
            parts.append(
                f'<line x1="{mleft}" y1="{py(ty):.6g}" x2="{width - mright}" y2="{py(ty):.6g}" '
                f'stroke="#dddddd"/>'
            )
            parts.append(
                f'<text x="{mleft - 5}" y="{py(ty):.6g}" text-anchor="end" '
                f'font-size="10">{ty:.6g}</text>'
            )
    for x, y in pts:
        parts.append(f'<circle cx="{px(x):.6g}" cy="{py(y):.6g}" r="2.5" fill="#3366cc"/>')
    medians = []
    for x in sorted(set(xs)):
        vals = sorted(y for px_, y in pts if px_ == x)
        medians.append((x, float(np.median(vals))))
    if len(medians) > 1:
        path_d = " ".join(f"{px(x):.6g},{py(y):.6g}" for x, y in medians)
        parts.append(f'<polyline points="{path_d}" fill="none" stroke="#cc3333" stroke-width="1.5"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
