"""Rank-based significance analysis over block x treatment x repetition
score grids: Friedman omnibus test, Dunn pairwise z-tests with step-up or
Bonferroni adjustment, Spearman correlation, and the Shapiro-Wilk /
Brown-Forsythe diagnostics used to justify the non-parametric route.

Repetitions collapse to per-cell means before ranking; missing cells are
mean-imputed within their block (with an audit flag) or the whole block
is dropped, keeping the design balanced either way.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tails

DEFAULT_ALPHA = 0.05

BENJAMINI_HOCHBERG = "benjamini_hochberg"
BONFERRONI = "bonferroni"
NO_CORRECTION = "none"

IMPUTE = "impute"
DROP = "drop"


class StatsError(ValueError):
    """Degenerate or malformed statistical input."""


@dataclass(frozen=True)
class ExperimentDesign:
    n: int  # blocks (texts)
    k: int  # treatments (backends)
    r: int  # repetitions per cell

    def __post_init__(self) -> None:
        # single-cell matrices are legal pipeline output; the rank tests
        # themselves insist on n >= 2 and k >= 2
        if self.n < 1 or self.k < 1 or self.r < 1:
            raise StatsError("design requires n >= 1, k >= 1, r >= 1")

    @property
    def observations(self) -> int:
        return self.n * self.k * self.r


@dataclass
class ScoreMatrix:
    """(block, treatment, repetition) grid of scores; NaN marks missing cells."""

    design: ExperimentDesign
    metric: str
    values: np.ndarray
    block_ids: list[str]
    treatment_ids: list[str]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.design.n, self.design.k, self.design.r)
        if self.values.shape != expected:
            raise StatsError(f"values shape {self.values.shape} != design {expected}")
        if len(self.block_ids) != self.design.n or len(self.treatment_ids) != self.design.k:
            raise StatsError("label lengths must match the design")

    def missing_fraction(self) -> float:
        return float(np.isnan(self.values).mean())

    def observations(self) -> np.ndarray:
        """All non-missing repetition-level scores, in grid order."""
        flat = self.values.reshape(-1)
        return flat[~np.isnan(flat)]

    def to_dict(self) -> dict:
        grid = [
            [[None if math.isnan(v) else v for v in cell] for cell in block]
            for block in self.values.tolist()
        ]
        return {
            "metric": self.metric,
            "design": {"n": self.design.n, "k": self.design.k, "r": self.design.r},
            "block_ids": list(self.block_ids),
            "treatment_ids": list(self.treatment_ids),
            "values": grid,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreMatrix":
        design = ExperimentDesign(**data["design"])
        values = np.array(
            [[[math.nan if v is None else float(v) for v in cell] for cell in block]
             for block in data["values"]],
            dtype=float,
        )
        return cls(design, data["metric"], values, list(data["block_ids"]),
                   list(data["treatment_ids"]))


@dataclass(frozen=True)
class PairwiseComparison:
    treatment_a: str
    treatment_b: str
    z: float
    raw_p: float
    adjusted_p: float
    mean_difference: float


@dataclass
class StatTestResult:
    test_name: str
    statistic: float
    df: object  # int, tuple of ints, or None
    p_value: float
    pairwise: list[PairwiseComparison] | None = None

    def to_dict(self) -> dict:
        out = {
            "test_name": self.test_name,
            "statistic": self.statistic,
            "df": list(self.df) if isinstance(self.df, tuple) else self.df,
            "p_value": self.p_value,
        }
        if self.pairwise is not None:
            out["pairwise"] = [vars(entry).copy() for entry in self.pairwise]
        return out


def cell_means(matrix: ScoreMatrix) -> np.ndarray:
    """n x k grid of per-cell repetition means, skipping missing values."""
    counts = (~np.isnan(matrix.values)).sum(axis=2)
    if (counts == 0).any():
        b, t = np.argwhere(counts == 0)[0]
        raise StatsError(
            f"cell ({matrix.block_ids[b]}, {matrix.treatment_ids[t]}) has no observations"
        )
    with np.errstate(invalid="ignore"):
        return np.nanmean(matrix.values, axis=2)


def prepare_cell_means(matrix: ScoreMatrix, missing_policy: str = IMPUTE):
    """Cell means with missing cells resolved; returns (grid, block_ids, audit)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        grid = np.nanmean(matrix.values, axis=2)
    audit: list[str] = []
    if not np.isnan(grid).any():
        return grid, list(matrix.block_ids), audit
    if missing_policy == IMPUTE:
        for b in range(grid.shape[0]):
            row = grid[b]
            missing = np.isnan(row)
            if missing.all():
                raise StatsError(f"block {matrix.block_ids[b]} has no observations at all")
            if missing.any():
                fill = row[~missing].mean()
                for t in np.flatnonzero(missing):
                    audit.append(
                        f"imputed block mean {fill:.6f} for "
                        f"({matrix.block_ids[b]}, {matrix.treatment_ids[t]})"
                    )
                row[missing] = fill
        return grid, list(matrix.block_ids), audit
    if missing_policy == DROP:
        keep = ~np.isnan(grid).any(axis=1)
        for b in np.flatnonzero(~keep):
            audit.append(f"dropped block {matrix.block_ids[b]} (missing cells)")
        if keep.sum() < 2:
            raise StatsError("fewer than 2 complete blocks remain after dropping")
        ids = [bid for bid, k in zip(matrix.block_ids, keep) if k]
        return grid[keep], ids, audit
    raise StatsError(f"unknown missing policy {missing_policy!r}")


def rank_with_ties(values) -> list[float]:
    """Ascending ranks 1..m; ties share the mean of their rank positions."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise StatsError("cannot rank an empty list")
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks.tolist()


def _block_ranks(means: np.ndarray) -> np.ndarray:
    return np.array([rank_with_ties(row) for row in means])


def friedman(means) -> StatTestResult:
    """Friedman chi-square over an n x k grid of cell means.

    Uses the standard tie-correction divisor; a grid whose blocks are all
    fully tied yields statistic 0 and p = 1.
    """
    grid = np.asarray(means, dtype=float)
    if grid.ndim != 2:
        raise StatsError("friedman expects an n x k grid")
    n, k = grid.shape
    if n < 2 or k < 2:
        raise StatsError("friedman requires n >= 2 and k >= 2")
    ranks = _block_ranks(grid)
    rank_sums = ranks.sum(axis=0)
    classic = 12.0 / (n * k * (k + 1)) * float((rank_sums ** 2).sum()) - 3.0 * n * (k + 1)
    ties = 0.0
    for row in grid:
        _, counts = np.unique(row, return_counts=True)
        ties += float((counts ** 3 - counts).sum())
    correction = 1.0 - ties / (n * k * (k * k - 1))
    if correction <= 0.0:
        return StatTestResult("friedman", 0.0, k - 1, 1.0)
    statistic = classic / correction
    if statistic <= 0.0:
        return StatTestResult("friedman", max(statistic, 0.0), k - 1, 1.0)
    return StatTestResult("friedman", statistic, k - 1, tails.chi2_sf(statistic, k - 1))


def benjamini_hochberg(p_values) -> list[float]:
    """Step-up false-discovery-rate adjustment, order preserved."""
    ps = [float(p) for p in p_values]
    if any(p < 0.0 or p > 1.0 for p in ps):
        raise StatsError("p-values must lie in [0, 1]")
    m = len(ps)
    if m == 0:
        return []
    order = sorted(range(m), key=lambda i: ps[i])
    adjusted = [0.0] * m
    running = 1.0
    for rank in range(m, 0, -1):
        idx = order[rank - 1]
        running = min(running, min(1.0, m * ps[idx] / rank))
        adjusted[idx] = running
    return adjusted


def bonferroni(p_values) -> list[float]:
    ps = [float(p) for p in p_values]
    if any(p < 0.0 or p > 1.0 for p in ps):
        raise StatsError("p-values must lie in [0, 1]")
    return [min(1.0, len(ps) * p) for p in ps]


def dunn_posthoc(
    means,
    correction: str = BENJAMINI_HOCHBERG,
    treatment_ids: list[str] | None = None,
) -> list[PairwiseComparison]:
    """All-pairs Dunn z-tests on mean within-block ranks.

    mean_difference reports the difference of raw metric means for the
    pair, which is what the summary tables quote.
    """
    grid = np.asarray(means, dtype=float)
    n, k = grid.shape
    if treatment_ids is None:
        treatment_ids = [f"t{i + 1}" for i in range(k)]
    mean_ranks = _block_ranks(grid).mean(axis=0)
    col_means = grid.mean(axis=0)
    scale = math.sqrt(k * (k + 1) / (6.0 * n))
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    zs = [(mean_ranks[i] - mean_ranks[j]) / scale for i, j in pairs]
    raw = [2.0 * tails.normal_sf(abs(z)) for z in zs]
    if correction == BENJAMINI_HOCHBERG:
        adjusted = benjamini_hochberg(raw)
    elif correction == BONFERRONI:
        adjusted = bonferroni(raw)
    elif correction == NO_CORRECTION:
        adjusted = list(raw)
    else:
        raise StatsError(f"unknown correction {correction!r}")
    return [
        PairwiseComparison(
            treatment_a=treatment_ids[i],
            treatment_b=treatment_ids[j],
            z=z,
            raw_p=p,
            adjusted_p=adj,
            mean_difference=float(col_means[i] - col_means[j]),
        )
        for (i, j), z, p, adj in zip(pairs, zs, raw, adjusted)
    ]


def spearman(x, y) -> tuple[float, float]:
    """Rank correlation with the t-approximation p-value (df = n - 2)."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys):
        raise StatsError("inputs must have equal length")
    n = len(xs)
    if n < 3:
        raise StatsError("spearman needs at least 3 points")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        raise StatsError("constant input: rho undefined")
    rx = np.array(rank_with_ties(xs))
    ry = np.array(rank_with_ties(ys))
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float(rx @ ry / math.sqrt((rx @ rx) * (ry @ ry)))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, 2.0 * tails.t_sf(abs(t), n - 2)


@dataclass(frozen=True)
class CorrelationEntry:
    series_a: str
    series_b: str
    rho: float
    raw_p: float
    adjusted_p: float


def spearman_battery(series: dict, correction: str = BENJAMINI_HOCHBERG) -> list[CorrelationEntry]:
    """Spearman over every unordered pair of named series, jointly adjusted."""
    names = list(series)
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    results = [spearman(series[a], series[b]) for a, b in pairs]
    raw = [p for _, p in results]
    if correction == BENJAMINI_HOCHBERG:
        adjusted = benjamini_hochberg(raw)
    elif correction == BONFERRONI:
        adjusted = bonferroni(raw)
    else:
        adjusted = list(raw)
    return [
        CorrelationEntry(a, b, rho, p, adj)
        for (a, b), (rho, p), adj in zip(pairs, results, adjusted)
    ]


# Shapiro-Wilk W via the Royston AS R94 approximation.
_SW_C1 = (0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


def _sw_poly(coeffs, u: float) -> float:
    return sum(c * u ** (i + 1) for i, c in enumerate(coeffs))


def shapiro_wilk(sample) -> StatTestResult:
    xs = sorted(float(v) for v in sample)
    n = len(xs)
    if n < 3 or n > 5000:
        raise StatsError("shapiro_wilk supports 3 <= n <= 5000")
    if xs[0] == xs[-1]:
        raise StatsError("zero variance sample")

    m = np.array([tails.normal_ppf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    msq = float(m @ m)
    u = 1.0 / math.sqrt(n)
    weights = m / math.sqrt(msq)
    a_n = weights[-1] + _sw_poly(_SW_C1, u)
    if n > 5:
        a_n1 = weights[-2] + _sw_poly(_SW_C2, u)
        phi = (msq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (1.0 - 2.0 * a_n ** 2 - 2.0 * a_n1 ** 2)
        a = m / math.sqrt(phi)
        a[-1], a[-2] = a_n, a_n1
        a[0], a[1] = -a_n, -a_n1
    elif n > 3:
        phi = (msq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n ** 2)
        a = m / math.sqrt(phi)
        a[-1] = a_n
        a[0] = -a_n
    else:
        a = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])

    arr = np.array(xs)
    numerator = float(a @ arr) ** 2
    denominator = float(((arr - arr.mean()) ** 2).sum())
    w = numerator / denominator

    if n == 3:
        p = 1.90985931710274 * (math.asin(math.sqrt(w)) - 1.04719755119660)
        p = min(1.0, max(0.0, p))
        return StatTestResult("shapiro_wilk", w, None, p)
    if n <= 11:
        g = -2.273 + 0.459 * n
        y = -math.log(g - math.log1p(-w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n ** 2 - 0.0006714 * n ** 3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n ** 2 - 0.0020322 * n ** 3)
    else:
        ln_n = math.log(n)
        y = math.log1p(-w)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n ** 2 + 0.0038915 * ln_n ** 3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n ** 2)
    z = (y - mu) / sigma
    return StatTestResult("shapiro_wilk", w, None, tails.normal_sf(z))


def levene(groups) -> StatTestResult:
    """Brown-Forsythe variant: one-way F on median-centered absolute deviations."""
    data = [np.asarray(g, dtype=float) for g in groups]
    k = len(data)
    if k < 2:
        raise StatsError("levene needs at least 2 groups")
    if any(g.size < 2 for g in data):
        raise StatsError("every group needs at least 2 values")
    devs = [np.abs(g - np.median(g)) for g in data]
    sizes = np.array([d.size for d in devs])
    total = int(sizes.sum())
    group_means = np.array([d.mean() for d in devs])
    grand = float(np.concatenate(devs).mean())
    ss_between = float((sizes * (group_means - grand) ** 2).sum())
    ss_within = float(sum(((d - d.mean()) ** 2).sum() for d in devs))
    df = (k - 1, total - k)
    if ss_within == 0.0:
        if ss_between == 0.0:
            return StatTestResult("levene", 0.0, df, 1.0)
        return StatTestResult("levene", math.inf, df, 0.0)
    statistic = (ss_between / df[0]) / (ss_within / df[1])
    return StatTestResult("levene", statistic, df, tails.f_sf(statistic, *df))


@dataclass(frozen=True)
class DescriptiveStats:
    count: int
    mean: float
    std: float
    minimum: float
    q25: float
    median: float
    q75: float
    maximum: float

    def as_dict(self) -> dict:
        return {
            "count": self.count, "mean": self.mean, "std": self.std,
            "min": self.minimum, "q25": self.q25, "median": self.median,
            "q75": self.q75, "max": self.maximum,
        }


def descriptive_stats(values) -> DescriptiveStats:
    """Sample statistics with n-1 std and linearly interpolated quartiles.

    A single value reports std 0.0; count == 1 flags the convention.
    Accumulation uses exact summation so results are bit-identical under
    any permutation of the observations.
    """
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise StatsError("empty input")
    n = int(arr.size)
    mean = math.fsum(arr) / n
    if n > 1:
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in arr) / (n - 1))
    else:
        std = 0.0
    ordered = np.sort(arr)

    def quantile(p: float) -> float:
        pos = (n - 1) * p
        lo = int(math.floor(pos))
        hi = int(math.ceil(pos))
        return float(ordered[lo] + (pos - lo) * (ordered[hi] - ordered[lo]))

    return DescriptiveStats(
        count=n,
        mean=mean,
        std=std,
        minimum=float(ordered[0]),
        q25=quantile(0.25),
        median=quantile(0.50),
        q75=quantile(0.75),
        maximum=float(ordered[-1]),
    )


@dataclass
class MetricBattery:
    """Friedman + conditional Dunn post-hoc for one metric's score matrix."""

    metric: str
    friedman: StatTestResult
    alpha: float
    correction: str
    audit: list[str] = field(default_factory=list)

    @property
    def significant_pairs(self) -> list[PairwiseComparison]:
        if self.friedman.pairwise is None:
            return []
        return [p for p in self.friedman.pairwise if p.adjusted_p < self.alpha]

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "alpha": self.alpha,
            "correction": self.correction,
            "friedman": self.friedman.to_dict(),
            "audit": list(self.audit),
        }


def run_metric_battery(
    matrix: ScoreMatrix,
    alpha: float = DEFAULT_ALPHA,
    correction: str = BENJAMINI_HOCHBERG,
    missing_policy: str = IMPUTE,
) -> MetricBattery:
    """The omnibus-then-posthoc procedure for one metric."""
    grid, _, audit = prepare_cell_means(matrix, missing_policy)
    result = friedman(grid)
    if result.p_value < alpha:
        result.pairwise = dunn_posthoc(grid, correction, list(matrix.treatment_ids))
    else:
        result.pairwise = []
    return MetricBattery(matrix.metric, result, alpha, correction, audit)
