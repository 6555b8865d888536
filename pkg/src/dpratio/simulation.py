"""Seeded Monte Carlo experiments for the private ratio estimators.

Each experiment expands its grid into cells, splits every cell's replicates
into fixed-size blocks and gives block ``j`` of cell ``i`` its own random
stream ``(seed, i << 32 | j)``. Blocks return partial sums which are reduced
in block order, so the output does not depend on how many workers ran them.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from dpratio import analysis, confidence, estimators, mechanisms
from dpratio.errors import ConfigError, DPRatioError
from dpratio.estimators import CountTable, Method
from dpratio.mechanisms import PrivacyBudget
from dpratio.numerics import RngHandle

BLOCK_SIZE = 20_000

# Under the null, sqrt(n) * KS converges to the Kolmogorov law, whose
# standard deviation is about 0.2603.
KOLMOGOROV_SD = 0.2603

ACCURACY_METHODS = (
    Method.NOISED_COUNTS,
    Method.NOISED_LOG,
    Method.NAIVE,
    Method.SMOOTH_SENS,
    Method.PTR,
)

COVERAGE_METHODS = (
    "classic",
    "non-private",
    "private-laplace",
    "private-gaussian",
    "conservative-laplace",
    "conservative-gaussian",
)

# PTR proposals tried, as multiples of the true local sensitivity
PTR_PROPOSAL_MULTIPLIERS = np.logspace(0.0, 3.0, 61)


class ExperimentKind(str, enum.Enum):
    ACCURACY = "accuracy"
    BIAS = "bias"
    COVERAGE = "coverage"
    CDF = "cdf"


@dataclass(frozen=True)
class ExperimentGrid:
    """Configuration of one sweep.

    ``budget_scope`` says what one (epsilon, delta) covers in coverage runs:
    ``"pair"`` splits it evenly over the two counts (Lap(2/epsilon) each),
    ``"count"`` spends all of it on each count (Lap(1/epsilon) each).

    ``pairs`` holds fixed counts ``(X, Y)`` for accuracy runs and success
    probabilities ``(p_x, p_y)`` for bias and coverage runs. CDF runs use
    ``cdf_cells`` of ``(mu1, mu2, b)`` and ignore the epsilon grid.
    """

    kind: ExperimentKind
    n_x: int = 150
    n_y: int = 150
    pairs: tuple = ()
    epsilons: tuple = ()
    delta: float = 0.0
    replications: int = 10_000
    level: float = 0.95
    seed: int = 0
    alpha: float = 0.1
    cdf_cells: tuple = ()
    gaussian_calibration: str = "balle"
    budget_scope: str = "pair"

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "cdf_cells", tuple(tuple(float(v) for v in c) for c in self.cdf_cells))
        self.validate()

    def validate(self):
        def bad(key, msg):
            raise ConfigError(key, msg)

        if self.n_x < 1:
            bad("nx", "must be a positive integer")
        if self.n_y < 1:
            bad("ny", "must be a positive integer")
        if self.replications < 1:
            bad("replications", "must be at least 1")
        if not 0 < self.level < 1:
            bad("level", "must lie in (0, 1)")
        if not 0 <= self.delta < 1:
            bad("delta", "must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            bad("seed", "must be an unsigned 64-bit integer")
        if not self.alpha > 0:
            bad("alpha", "must be positive")
        if self.gaussian_calibration not in ("balle", "dwork"):
            bad("calibration", "must be 'balle' or 'dwork'")
        if self.budget_scope not in ("pair", "count"):
            bad("budget_scope", "must be 'pair' or 'count'")
        if self.kind is ExperimentKind.CDF:
            if not self.cdf_cells:
                bad("cdf_cells", "grid is empty")
            for cell in self.cdf_cells:
                if len(cell) != 3 or cell[2] <= 0:
                    bad("cdf_cells", f"expected (mu1, mu2, b) with b > 0, got {cell}")
            return
        if not self.pairs:
            bad("pairs", "grid is empty")
        if not self.epsilons:
            bad("epsilon_grid", "grid is empty")
        if any(not e > 0 for e in self.epsilons):
            bad("epsilon_grid", "epsilons must be positive")
        for pair in self.pairs:
            if len(pair) != 2:
                bad("pairs", f"expected two entries, got {pair}")
            if self.kind is ExperimentKind.ACCURACY:
                x, y = pair
                if x != int(x) or y != int(y) or not (1 <= x <= self.n_x and 1 <= y <= self.n_y):
                    bad("pairs", f"counts {pair} must be integers in [1, n]")
            elif not all(0 < p <= 1 for p in pair):
                bad("pairs", f"probabilities {pair} must lie in (0, 1]")
        if self.kind is ExperimentKind.ACCURACY and not 0 < self.delta < 1:
            bad("delta", "accuracy runs need delta in (0, 1) for the local-sensitivity methods")
        if self.kind is ExperimentKind.COVERAGE and not 0 < self.delta < 1:
            bad("delta", "coverage runs need delta in (0, 1) for the Gaussian mechanism")

    @classmethod
    def protocol(cls, kind, **overrides):
        """Defaults that mirror the published experiments, with overrides applied."""
        kind = ExperimentKind(kind)
        if kind is ExperimentKind.ACCURACY:
            base = dict(
                n_x=150, n_y=150,
                pairs=((100, 100), (50, 100), (100, 50), (100, 30)),
                epsilons=tuple(np.round(np.arange(1, 41) * 0.1, 10)),
                delta=1.0 / 150, alpha=0.1, replications=10_000,
            )
        elif kind is ExperimentKind.BIAS:
            base = dict(
                n_x=150, n_y=150,
                pairs=((1 / 3, 2 / 3), (0.5, 0.5), (2 / 3, 1 / 3)),
                epsilons=tuple(np.round(np.arange(1, 21) * 0.25, 10)),
                replications=20_000,
            )
        elif kind is ExperimentKind.COVERAGE:
            probs = tuple(np.round(np.arange(1, 10) * 0.1, 10))
            base = dict(
                n_x=200, n_y=200,
                pairs=tuple((px, py) for px in probs for py in probs),
                epsilons=(0.5,), delta=1e-4, level=0.95, replications=10_000,
            )
        else:
            base = dict(
                cdf_cells=((100, 100, 2), (100, 50, 2), (50, 100, 4)),
                replications=1_000_000,
            )
        base.update(overrides)
        return cls(kind=kind, **base)

    def with_overrides(self, **overrides):
        return replace(self, **overrides)


@dataclass(frozen=True)
class ExperimentRecord:
    """One output row: grid coordinates, metrics, their standard errors, diagnostics.

    A metric of ``None`` marks a gap (e.g. a singular closed form); the reason
    goes in ``diagnostics["reason"]``.
    """

    coords: dict
    metrics: dict
    stderr: dict
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, se in self.stderr.items():
            if se is not None and not se >= 0:
                raise ValueError(f"standard error {name} must be nonnegative")

    def columns(self):
        return (
            list(self.coords)
            + list(self.metrics)
            + [f"{name}_se" for name in self.stderr]
            + list(self.diagnostics)
        )

    def values(self):
        return (
            list(self.coords.values())
            + list(self.metrics.values())
            + list(self.stderr.values())
            + list(self.diagnostics.values())
        )


# -- block scheduling --------------------------------------------------------


def _blocks(replications):
    full, rest = divmod(replications, BLOCK_SIZE)
    sizes = [BLOCK_SIZE] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _stream(grid, cell, block):
    return RngHandle(grid.seed, (cell << 32) | block)


def _run_tasks(fn, tasks, workers):
    """Apply ``fn`` to every task and return results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _reduce_by_cell(tasks, results):
    out = {}
    for task, res in zip(tasks, results):
        out.setdefault(task[1], []).append(res)
    return out


def _mean_se(total, total_sq, n):
    if n == 0:
        return None, None
    mean = total / n
    if n < 2:
        return mean, 0.0
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


def _sum_blocks(parts):
    return np.sum(np.array(parts, dtype=float), axis=0)


# -- accuracy ----------------------------------------------------------------


def _closed_form_accuracy(method, t, eps, grid):
    budget = PrivacyBudget(eps, grid.delta if method is Method.SMOOTH_SENS else 0.0)
    return analysis.closed_form_accuracy(method, t, budget, grid.alpha)


def optimal_ptr_proposal(t, budget, alpha):
    """Proposal maximising the closed-form PTR accuracy over multiples of the true LS."""
    ls = estimators.local_sensitivity_ratio(t)
    candidates = ls * PTR_PROPOSAL_MULTIPLIERS
    betas = [analysis.ptr_accuracy(t, budget, alpha, c).beta for c in candidates]
    best = int(np.argmin(betas))
    return float(candidates[best]), float(betas[best])


def _ptr_block(task):
    grid, cell, block, size, (x, y, eps, proposal) = task
    t = CountTable(int(x), int(y), grid.n_x, grid.n_y)
    out = estimators.propose_test_release(
        _stream(grid, cell, block), t, PrivacyBudget(eps, grid.delta), proposal, size
    )
    with np.errstate(invalid="ignore"):
        err = out.failed | ~(np.abs(out.estimate.value - t.ratio) <= grid.alpha)
    return (float(np.sum(err)), float(np.sum(out.failed)), float(size))


def run_accuracy_experiment(grid, workers=1):
    """Empirical 1 - beta per (pair, epsilon, method).

    Closed forms are used where they exist; PTR is simulated with FAIL
    counted as an error, at the proposal that maximises its closed form.
    """
    rows = []
    tasks = []
    ptr_rows = {}
    cell = 0
    for x, y in grid.pairs:
        t = CountTable(int(x), int(y), grid.n_x, grid.n_y)
        for eps in grid.epsilons:
            for method in ACCURACY_METHODS:
                coords = {"x": int(x), "y": int(y), "epsilon": eps, "method": method.value}
                if method is Method.PTR:
                    proposal, beta = optimal_ptr_proposal(t, PrivacyBudget(eps, grid.delta), grid.alpha)
                    ptr_rows[cell] = (len(rows), coords, proposal, 1.0 - beta)
                    rows.append(None)
                    for block, size in _blocks(grid.replications):
                        tasks.append((grid, cell, block, size, (x, y, eps, proposal)))
                    cell += 1
                    continue
                try:
                    acc, reason = _closed_form_accuracy(method, t, eps, grid).accuracy, ""
                except DPRatioError as exc:
                    acc, reason = None, exc.code
                rows.append(ExperimentRecord(
                    coords,
                    {"accuracy": acc, "closed_form": acc},
                    {"accuracy": 0.0 if acc is not None else None},
                    {"source": "closed-form", "proposal": None, "fail_rate": None, "reason": reason},
                ))
    results = _reduce_by_cell(tasks, _run_tasks(_ptr_block, tasks, workers))
    for c, (idx, coords, proposal, closed) in ptr_rows.items():
        errors, fails, n = _sum_blocks(results[c])
        p = errors / n
        rows[idx] = ExperimentRecord(
            coords,
            {"accuracy": 1.0 - p, "closed_form": closed},
            {"accuracy": math.sqrt(p * (1.0 - p) / n)},
            {"source": "monte-carlo", "proposal": proposal, "fail_rate": fails / n, "reason": ""},
        )
    return rows


# -- bias --------------------------------------------------------------------


def _draw_positive_pairs(rng, grid, p_x, p_y, size):
    """Binomial pairs with both counts positive; zero draws are redrawn and counted."""
    x = rng.binomial(grid.n_x, p_x, size)
    y = rng.binomial(grid.n_y, p_y, size)
    redraws = 0
    while True:
        zero = (x == 0) | (y == 0)
        k = int(np.count_nonzero(zero))
        if k == 0:
            return x, y, redraws
        redraws += k
        x[zero] = rng.binomial(grid.n_x, p_x, k)
        y[zero] = rng.binomial(grid.n_y, p_y, k)


def _bias_block(task):
    grid, cell, block, size, (p_x, p_y, eps) = task
    rng = _stream(grid, cell, block)
    x, y, redraws = _draw_positive_pairs(rng, grid, p_x, p_y, size)
    b = 2.0 / eps
    x_t = x + rng.laplace(0.0, b, size)
    y_t = y + rng.laplace(0.0, b, size)
    p_hat = x / y
    p_tilde = x_t / np.maximum(y_t, 1.0)
    budget = PrivacyBudget(eps)
    ys, inverse = np.unique(y, return_inverse=True)
    factors = np.array([
        analysis.noised_counts_bias_exact(CountTable(1, int(v), grid.n_x, grid.n_y), budget) for v in ys
    ])
    exact = x * factors[inverse]
    diff = p_tilde - p_hat
    out = []
    for v in (p_hat, p_tilde, exact, diff):
        out += [float(np.sum(v)), float(np.sum(v * v))]
    return tuple(out) + (float(redraws), float(size))


def run_bias_experiment(grid, workers=1):
    """Mean non-private ratio, mean maxed private ratio and mean exact expectation per (pair, epsilon)."""
    tasks = []
    coords = []
    for cell, ((p_x, p_y), eps) in enumerate((pp, e) for pp in grid.pairs for e in grid.epsilons):
        coords.append({"p_x": p_x, "p_y": p_y, "epsilon": eps})
        for block, size in _blocks(grid.replications):
            tasks.append((grid, cell, block, size, (p_x, p_y, eps)))
    results = _reduce_by_cell(tasks, _run_tasks(_bias_block, tasks, workers))
    rows = []
    names = ("mean_p_hat", "mean_p_tilde", "mean_exact", "mean_privacy_shift")
    for cell, c in enumerate(coords):
        s = _sum_blocks(results[cell])
        n = s[-1]
        metrics, ses = {}, {}
        for i, name in enumerate(names):
            metrics[name], ses[name] = _mean_se(s[2 * i], s[2 * i + 1], n)
        rows.append(ExperimentRecord(c, metrics, ses, {"redrawn": int(s[-2])}))
    return rows


# -- coverage ----------------------------------------------------------------


def count_budget(grid, eps):
    """Budget spent on each count under the grid's ``budget_scope``."""
    budget = PrivacyBudget(eps, grid.delta)
    return budget.split(2) if grid.budget_scope == "pair" else budget


def gaussian_count_sigma(grid, eps):
    """Per-count Gaussian sigma for unit sensitivity, at (epsilon/2, delta/2) by default."""
    budget = count_budget(grid, eps)
    if grid.gaussian_calibration == "dwork":
        return mechanisms.calibrate_gaussian_dwork(budget, 1.0).sigma
    return mechanisms.calibrate_gaussian_balle(budget, 1.0).sigma


def _interval_stats(lower, upper, truth):
    valid = ~np.isnan(lower)
    covered = valid & (lower <= truth) & (truth <= upper)
    width = np.where(valid, upper - lower, 0.0)
    return [
        float(np.sum(covered)),
        float(np.sum(width)),
        float(np.sum(width * width)),
        float(np.sum(valid)),
    ]


def _coverage_block(task):
    grid, cell, block, size, (p_x, p_y, b, sigma) = task
    rng = _stream(grid, cell, block)
    x = rng.binomial(grid.n_x, p_x, size).astype(float)
    y = rng.binomial(grid.n_y, p_y, size).astype(float)
    xl = np.maximum(x + rng.laplace(0.0, b, size), 1.0)
    yl = np.maximum(y + rng.laplace(0.0, b, size), 1.0)
    xg = np.maximum(x + rng.normal(0.0, sigma, size), 1.0)
    yg = np.maximum(y + rng.normal(0.0, sigma, size), 1.0)
    truth = p_x / p_y
    lap_var = 2.0 * b * b
    n_x, n_y, level = grid.n_x, grid.n_y, grid.level
    bounds = (
        confidence.classic_bounds(x, y, n_x, n_y, level),
        confidence.ratio_bounds(x, y, n_x, n_y, level),
        confidence.ratio_bounds(xl, yl, n_x, n_y, level),
        confidence.ratio_bounds(xg, yg, n_x, n_y, level),
        confidence.ratio_bounds(xl, yl, n_x, n_y, level, lap_var),
        confidence.ratio_bounds(xg, yg, n_x, n_y, level, sigma**2),
    )
    out = []
    for lower, upper in bounds:
        out += _interval_stats(lower, upper, truth)
    return tuple(out) + (float(size),)


def run_coverage_experiment(grid, workers=1):
    """Coverage of p_x / p_y and mean width per (pair, epsilon, CI method).

    Noised counts are clamped at 1. Intervals that cannot be formed (zero raw
    counts for the classic interval, a negative variance estimate) count as
    not covering and are reported in ``degenerate``.
    """
    tasks = []
    cells = []
    for cell, ((p_x, p_y), eps) in enumerate((pp, e) for pp in grid.pairs for e in grid.epsilons):
        sigma = gaussian_count_sigma(grid, eps)
        b = mechanisms.laplace_scale(count_budget(grid, eps), 1.0)
        cells.append((p_x, p_y, eps, sigma))
        for block, size in _blocks(grid.replications):
            tasks.append((grid, cell, block, size, (p_x, p_y, b, sigma)))
    results = _reduce_by_cell(tasks, _run_tasks(_coverage_block, tasks, workers))
    rows = []
    for cell, (p_x, p_y, eps, sigma) in enumerate(cells):
        s = _sum_blocks(results[cell])
        n = s[-1]
        for i, method in enumerate(COVERAGE_METHODS):
            covered, wsum, wsq, valid = s[4 * i: 4 * i + 4]
            cov = covered / n
            width, width_se = _mean_se(wsum, wsq, valid)
            rows.append(ExperimentRecord(
                {"p_x": p_x, "p_y": p_y, "epsilon": eps, "method": method},
                {"coverage": cov, "mean_width": width},
                {"coverage": math.sqrt(cov * (1.0 - cov) / n), "mean_width": width_se},
                {"sigma": sigma if "gaussian" in method else None, "degenerate": int(n - valid)},
            ))
    return rows


# -- ratio-of-Laplace CDF ----------------------------------------------------


def _cdf_block(task):
    grid, cell, block, size, (mu1, mu2, b) = task
    rng = _stream(grid, cell, block)
    return (mu1 + rng.laplace(0.0, b, size)) / (mu2 + rng.laplace(0.0, b, size))


def ks_distance(samples, cdf):
    """Two-sided Kolmogorov-Smirnov distance between a sample and a CDF."""
    s = np.sort(samples)
    n = s.size
    f = cdf(s)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def run_cdf_validation(grid, workers=1):
    """KS distance between simulated X1 / X2 and the closed-form CDF per cell."""
    tasks = []
    for cell, c in enumerate(grid.cdf_cells):
        for block, size in _blocks(grid.replications):
            tasks.append((grid, cell, block, size, c))
    results = _reduce_by_cell(tasks, _run_tasks(_cdf_block, tasks, workers))
    rows = []
    for cell, (mu1, mu2, b) in enumerate(grid.cdf_cells):
        samples = np.concatenate(results[cell])
        params = analysis.RatioLawParams(mu1, mu2, b)
        ks = ks_distance(samples, lambda a: analysis.ratio_of_laplace_cdf_array(params, a))
        n = samples.size
        rows.append(ExperimentRecord(
            {"mu1": mu1, "mu2": mu2, "b": b},
            {"ks": ks},
            {"ks": KOLMOGOROV_SD / math.sqrt(n)},
            {"samples": n, "negative_denominators": int(np.sum(samples < 0))},
        ))
    return rows


_RUNNERS = {
    ExperimentKind.ACCURACY: run_accuracy_experiment,
    ExperimentKind.BIAS: run_bias_experiment,
    ExperimentKind.COVERAGE: run_coverage_experiment,
    ExperimentKind.CDF: run_cdf_validation,
}


def run_experiment(grid, workers=1):
    return _RUNNERS[grid.kind](grid, workers)


GRID_FIELDS = tuple(f.name for f in fields(ExperimentGrid))
