"""Distribution samplers and the Type I / Type II error-rate Monte Carlo harness.

Each trial draws fresh score samples, runs one configured test, and records the
rejection decision. Per-trial RNG streams are derived by hashing (master seed,
trial index), so rates are bit-identical regardless of worker count and adding
trials never reshuffles earlier ones. The worker count is capped by the
UQKIT_THREADS environment variable.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .seeds import derive_rng
from .significance import CLASSIC_TEST_KINDS, aso, classic_test


@dataclass(frozen=True)
class Normal:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError("std must be positive")

    def label(self) -> str:
        return f"normal:{self.mean:g}:{self.std:g}"


@dataclass(frozen=True)
class NormalMixture:
    components: tuple[tuple[float, float], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.components) != len(self.weights) or not self.components:
            raise ValueError("components and weights must be non-empty and equal-length")
        if any(std <= 0 for _, std in self.components):
            raise ValueError("std must be positive")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    def label(self) -> str:
        parts = ":".join(f"{m:g}:{s:g}:{w:g}" for (m, s), w in zip(self.components, self.weights))
        return f"mixture:{parts}"


@dataclass(frozen=True)
class Laplace:
    loc: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def label(self) -> str:
        return f"laplace:{self.loc:g}:{self.scale:g}"


@dataclass(frozen=True)
class Rayleigh:
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def label(self) -> str:
        return f"rayleigh:{self.scale:g}"


DistSpec = Normal | NormalMixture | Laplace | Rayleigh


def sample_dist(spec: DistSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from the specified distribution."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(spec, Normal):
        return rng.normal(spec.mean, spec.std, size=n)
    if isinstance(spec, NormalMixture):
        weights = np.asarray(spec.weights)
        choice = rng.choice(len(spec.components), size=n, p=weights / weights.sum())
        means = np.asarray([m for m, _ in spec.components])
        stds = np.asarray([s for _, s in spec.components])
        return rng.normal(means[choice], stds[choice])
    if isinstance(spec, Laplace):
        return rng.laplace(spec.loc, spec.scale, size=n)
    if isinstance(spec, Rayleigh):
        return rng.rayleigh(spec.scale, size=n)
    raise ValueError(f"unknown distribution spec: {spec!r}")


@dataclass(frozen=True)
class TestSpec:
    """A test plus its decision threshold.

    For kind "aso" the threshold is the eps_min cutoff tau; for the classical
    tests it is the p-value cutoff.
    """

    __test__ = False  # not a pytest class despite the name

    kind: str
    threshold: float
    alpha: float = 0.05          # ASO confidence level
    num_bootstrap: int = 1000    # ASO bootstrap iterations
    dt: float = 0.005            # ASO integration step
    resamples: int = 1000        # bootstrap/permutation test resamples

    def __post_init__(self):
        if self.kind != "aso" and self.kind not in CLASSIC_TEST_KINDS:
            raise ValueError(f"unknown test kind: {self.kind!r}")

    def rejects(self, a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> bool:
        if self.kind == "aso":
            result = aso(a, b, alpha=self.alpha, num_bootstrap=self.num_bootstrap,
                         dt=self.dt, rng=rng, threshold=self.threshold)
            return result.reject
        result = classic_test(self.kind, a, b, resamples=self.resamples, rng=rng)
        return result.p_value < self.threshold


@dataclass(frozen=True)
class ErrorRateReport:
    """Aggregated rejection (Type I) or non-rejection (Type II) rate."""

    test: str
    dist: str
    n: int
    threshold: float
    trials: int
    rate: float
    se: float
    seed: int
    error_kind: str = "type1"
    dist_b: str = field(default="")


def worker_count() -> int:
    cap = os.environ.get("UQKIT_THREADS")
    if cap:
        return max(1, int(cap))
    return 1


def _run_trials(decide, trials: int, seed: int) -> np.ndarray:
    workers = worker_count()
    if workers == 1:
        return np.array([decide(t) for t in range(trials)], dtype=bool)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(decide, range(trials))), dtype=bool)


def type1_rate(test: TestSpec, dist: DistSpec, n: int, trials: int, seed: int) -> ErrorRateReport:
    """Fraction of rejections when both samples come from the same distribution."""
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def decide(trial: int) -> bool:
        rng = derive_rng(seed, trial)
        a = sample_dist(dist, n, rng)
        b = sample_dist(dist, n, rng)
        return test.rejects(a, b, rng)

    rejections = _run_trials(decide, trials, seed)
    rate = float(rejections.mean())
    return ErrorRateReport(test=test.kind, dist=dist.label(), n=n, threshold=test.threshold,
                           trials=trials, rate=rate, se=float(np.sqrt(rate * (1 - rate) / trials)),
                           seed=seed, error_kind="type1")


def type2_rate(test: TestSpec, dist_a: DistSpec, dist_b: DistSpec, n: int, trials: int,
               seed: int) -> ErrorRateReport:
    """Fraction of non-rejections when dist_a stochastically dominates dist_b."""
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def decide(trial: int) -> bool:
        rng = derive_rng(seed, trial)
        a = sample_dist(dist_a, n, rng)
        b = sample_dist(dist_b, n, rng)
        return not test.rejects(a, b, rng)

    misses = _run_trials(decide, trials, seed)
    rate = float(misses.mean())
    return ErrorRateReport(test=test.kind, dist=dist_a.label(), n=n, threshold=test.threshold,
                           trials=trials, rate=rate, se=float(np.sqrt(rate * (1 - rate) / trials)),
                           seed=seed, error_kind="type2", dist_b=dist_b.label())
