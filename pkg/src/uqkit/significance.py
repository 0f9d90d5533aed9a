"""Almost-stochastic-order (ASO) comparison and classical one-sided tests.

All tests answer the one-sided question "does sample `a` tend larger than
sample `b`?". The ASO routine returns the violation ratio together with its
bootstrap-based upper confidence bound eps_min; the classical tests return a
plain (statistic, p-value) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtri

from .empirical import as_sample, quantile_function

CLASSIC_TEST_KINDS = ("student_t", "bootstrap", "permutation", "wilcoxon", "mann_whitney")

# Exact Mann-Whitney enumeration is used up to this per-group size (no ties).
_MW_EXACT_LIMIT = 12


@dataclass(frozen=True)
class AsoResult:
    """Outcome of the ASO comparison of two score samples."""

    eps_min: float
    violation_ratio: float
    sigma_hat: float
    reject: bool


@dataclass(frozen=True)
class TestResult:
    """Statistic and one-sided p-value of a classical significance test."""

    statistic: float
    p_value: float


def violation_ratio(a, b, dt: float = 0.005) -> float:
    """Fraction of squared quantile-difference mass where `a`'s quantiles fall below `b`'s.

    Integrates (F^-1(t) - G^-1(t))^2 on the grid t = dt, 2*dt, ... < 1; the
    numerator keeps only grid points in the violation set {t : F^-1(t) < G^-1(t)},
    the denominator (the squared 1-D 2-Wasserstein distance) uses all of them.
    Returns 0.5 by convention when the quantile functions coincide on the grid,
    so identical samples signal "no dominance either way".
    """
    if not 0.0 < dt < 1.0:
        raise ValueError("dt must lie in (0, 1)")
    grid = np.arange(dt, 1.0, dt)
    f = quantile_function(a)(grid)
    g = quantile_function(b)(grid)
    sq = (g - f) ** 2 * dt
    denominator = float(sq.sum())
    if denominator == 0.0:
        return 0.5
    numerator = float(sq[f < g].sum())
    return numerator / denominator


def _bootstrap_quantile_grids(sample: np.ndarray, grid_idx: np.ndarray,
                              num_bootstrap: int, rng: np.random.Generator) -> np.ndarray:
    """Quantile-grid evaluations of `num_bootstrap` inverse-transform resamples.

    Each row is F*^-1 evaluated on the integration grid, where F* is the
    empirical CDF of one resample of the same size as the input.
    """
    srt = np.sort(sample, kind="stable")
    n = srt.size
    draw_idx = np.ceil(n * rng.random((num_bootstrap, n))).astype(np.int64)
    resamples = srt[np.clip(draw_idx - 1, 0, n - 1)]
    resamples.sort(axis=1)
    return resamples[:, grid_idx]


def aso(a, b, alpha: float = 0.05, num_bootstrap: int = 1000, dt: float = 0.005,
        rng: np.random.Generator | None = None, threshold: float = 0.2) -> AsoResult:
    """ASO test: violation ratio, bootstrap sigma, and the eps_min bound.

    eps_min = eps - sqrt((N+M)/(N*M)) * sigma_hat * Phi^-1(alpha), clamped into
    [0, 1], where sigma_hat is the standard deviation of the rescaled bootstrap
    violation ratios sqrt(N*M/(N+M)) * (eps* - eps). The null "a is not almost
    stochastically larger than b" is rejected when eps_min < threshold.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if num_bootstrap < 1:
        raise ValueError("num_bootstrap must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    arr_a = as_sample(a)
    arr_b = as_sample(b)
    n, m = arr_a.size, arr_b.size

    eps = violation_ratio(arr_a, arr_b, dt)

    grid = np.arange(dt, 1.0, dt)
    idx_a = np.clip(np.ceil(n * grid).astype(np.int64) - 1, 0, n - 1)
    idx_b = np.clip(np.ceil(m * grid).astype(np.int64) - 1, 0, m - 1)
    f_star = _bootstrap_quantile_grids(arr_a, idx_a, num_bootstrap, rng)
    g_star = _bootstrap_quantile_grids(arr_b, idx_b, num_bootstrap, rng)

    sq = (g_star - f_star) ** 2 * dt
    denominator = sq.sum(axis=1)
    numerator = np.where(f_star < g_star, sq, 0.0).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        eps_star = np.where(denominator == 0.0, 0.5, numerator / denominator)

    scale = math.sqrt(n * m / (n + m))
    sigma_hat = float(np.std(scale * (eps_star - eps), ddof=1)) if num_bootstrap > 1 else 0.0
    eps_min = eps - math.sqrt((n + m) / (n * m)) * sigma_hat * float(ndtri(alpha))
    eps_min = min(max(eps_min, 0.0), 1.0)
    return AsoResult(eps_min=eps_min, violation_ratio=eps, sigma_hat=sigma_hat,
                     reject=eps_min < threshold)


def bonferroni(alpha: float, num_comparisons: int) -> float:
    """Family-wise corrected significance level alpha / num_comparisons."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if num_comparisons < 1:
        raise ValueError("num_comparisons must be >= 1")
    return alpha / num_comparisons


def _student_t(a: np.ndarray, b: np.ndarray) -> TestResult:
    """One-sided pooled-variance two-sample t-test for H1: mean(a) > mean(b)."""
    n, m = a.size, b.size
    if n < 2 or m < 2:
        raise ValueError("t-test needs at least two observations per sample")
    pooled_var = ((n - 1) * a.var(ddof=1) + (m - 1) * b.var(ddof=1)) / (n + m - 2)
    if pooled_var == 0.0:
        raise ValueError("degenerate variance")
    t_stat = (a.mean() - b.mean()) / math.sqrt(pooled_var * (1.0 / n + 1.0 / m))
    return TestResult(statistic=float(t_stat), p_value=float(stats.t.sf(t_stat, df=n + m - 2)))


def _bootstrap_test(a: np.ndarray, b: np.ndarray, resamples: int,
                    rng: np.random.Generator) -> TestResult:
    """Bootstrap test on the mean difference, resampling under the shifted null."""
    observed = a.mean() - b.mean()
    pooled_mean = np.concatenate([a, b]).mean()
    a_null = a - a.mean() + pooled_mean
    b_null = b - b.mean() + pooled_mean
    a_star = a_null[rng.integers(0, a.size, size=(resamples, a.size))].mean(axis=1)
    b_star = b_null[rng.integers(0, b.size, size=(resamples, b.size))].mean(axis=1)
    exceed = int(np.count_nonzero(a_star - b_star >= observed))
    return TestResult(statistic=float(observed), p_value=(exceed + 1) / (resamples + 1))


def _permutation_test(a: np.ndarray, b: np.ndarray, resamples: int,
                      rng: np.random.Generator) -> TestResult:
    """Permutation-randomization test on the mean difference."""
    observed = a.mean() - b.mean()
    pooled = np.concatenate([a, b])
    # argsort of uniforms = one random permutation per row
    perms = pooled[np.argsort(rng.random((resamples, pooled.size)), axis=1)]
    diffs = perms[:, :a.size].mean(axis=1) - perms[:, a.size:].mean(axis=1)
    exceed = int(np.count_nonzero(diffs >= observed))
    return TestResult(statistic=float(observed), p_value=(exceed + 1) / (resamples + 1))


def _wilcoxon(a: np.ndarray, b: np.ndarray) -> TestResult:
    """Paired Wilcoxon signed-rank test; zero differences dropped, ties mid-ranked."""
    if a.size != b.size:
        raise ValueError("Wilcoxon signed-rank test requires paired samples of equal length")
    if np.all(a == b):
        # Every difference is zero: no evidence in either direction.
        return TestResult(statistic=0.0, p_value=1.0)
    res = stats.wilcoxon(a, b, zero_method="wilcox", alternative="greater")
    return TestResult(statistic=float(res.statistic), p_value=float(res.pvalue))


def _mann_whitney_exact_p(n: int, m: int, u_obs: float) -> float:
    """P(U >= u_obs) under the null by exact counting of rank arrangements.

    Uses the recurrence N(u; n, m) = N(u - m; n - 1, m) + N(u; n, m - 1)
    obtained by conditioning on whether the largest pooled value belongs to
    the first or the second sample. Valid only without ties.
    """
    max_u = n * m
    f = np.zeros((n + 1, m + 1, max_u + 1), dtype=np.int64)
    f[0, :, 0] = 1
    f[:, 0, 0] = 1
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            f[i, j, :] = f[i, j - 1, :]
            f[i, j, j:] += f[i - 1, j, : max_u + 1 - j]
    dist = f[n, m, :]
    threshold = math.ceil(u_obs - 1e-9)
    return float(dist[threshold:].sum() / dist.sum())


def _mann_whitney(a: np.ndarray, b: np.ndarray) -> TestResult:
    """One-sided Mann-Whitney U test for H1: `a` tends larger than `b`.

    Exact enumeration when both groups have at most 12 observations and no
    ties are present; otherwise the normal approximation with tie correction
    and continuity correction.
    """
    n, m = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = stats.rankdata(pooled)
    u_stat = ranks[:n].sum() - n * (n + 1) / 2.0

    has_ties = np.unique(pooled).size < pooled.size
    if not has_ties and max(n, m) <= _MW_EXACT_LIMIT:
        return TestResult(statistic=float(u_stat), p_value=_mann_whitney_exact_p(n, m, u_stat))

    mean_u = n * m / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts ** 3) - tie_counts).sum())
    total = n + m
    var_u = n * m / 12.0 * (total + 1 - tie_term / (total * (total - 1)))
    if var_u == 0.0:
        return TestResult(statistic=float(u_stat), p_value=1.0)
    z = (u_stat - mean_u - 0.5) / math.sqrt(var_u)
    return TestResult(statistic=float(u_stat), p_value=float(stats.norm.sf(z)))


def classic_test(kind: str, a, b, resamples: int = 1000,
                 rng: np.random.Generator | None = None) -> TestResult:
    """Run one of the classical tests; see CLASSIC_TEST_KINDS for valid kinds."""
    arr_a = as_sample(a)
    arr_b = as_sample(b)
    if kind in ("bootstrap", "permutation"):
        if resamples < 1:
            raise ValueError("resamples must be >= 1")
        if rng is None:
            rng = np.random.default_rng()
    if kind == "student_t":
        return _student_t(arr_a, arr_b)
    if kind == "bootstrap":
        return _bootstrap_test(arr_a, arr_b, resamples, rng)
    if kind == "permutation":
        return _permutation_test(arr_a, arr_b, resamples, rng)
    if kind == "wilcoxon":
        return _wilcoxon(arr_a, arr_b)
    if kind == "mann_whitney":
        return _mann_whitney(arr_a, arr_b)
    raise ValueError(f"unknown test kind: {kind!r}")
