"""Calibration, coverage, discrimination, and predictive-uncertainty metrics.

Binning conventions (shared by ECE and the set-size coverage report): bins are
equal-width with left-inclusive edges, the top bin additionally includes the
right endpoint, and empty bins are skipped. All entropies use the natural
logarithm with 0*log(0) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .conformal import PredictionSet, as_prob_vector


def _bin_index(values: np.ndarray, upper: float, num_bins: int) -> np.ndarray:
    """Equal-width bin of each value over [0, upper]; the last bin is right-inclusive."""
    edges = np.arange(num_bins + 1) * (upper / num_bins)
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.clip(idx, 0, num_bins - 1)


@dataclass(frozen=True)
class BinReport:
    """Per-bin counts and means behind a scalar calibration/coverage metric."""

    value: float
    counts: np.ndarray
    confidence: np.ndarray  # mean confidence (ECE) or bin coverage (coverage report)
    accuracy: np.ndarray


def ece(confidences, correct, num_bins: int = 10) -> BinReport:
    """Expected calibration error over equal-width confidence bins."""
    conf = np.asarray(confidences, dtype=float).ravel()
    hits = np.asarray(correct, dtype=float).ravel()
    if conf.size == 0:
        raise ValueError("empty input")
    if conf.size != hits.size:
        raise ValueError("confidences and correctness flags must have equal length")
    if np.any(conf < 0.0) or np.any(conf > 1.0):
        raise ValueError("confidences must lie in [0, 1]")
    idx = _bin_index(conf, 1.0, num_bins)
    counts = np.bincount(idx, minlength=num_bins)
    sum_conf = np.bincount(idx, weights=conf, minlength=num_bins)
    sum_hits = np.bincount(idx, weights=hits, minlength=num_bins)
    with np.errstate(invalid="ignore"):
        mean_conf = np.where(counts > 0, sum_conf / np.maximum(counts, 1), 0.0)
        mean_acc = np.where(counts > 0, sum_hits / np.maximum(counts, 1), 0.0)
    value = float((counts / conf.size * np.abs(mean_acc - mean_conf)).sum())
    return BinReport(value=value, counts=counts, confidence=mean_conf, accuracy=mean_acc)


@dataclass(frozen=True)
class CoverageReport:
    """Marginal coverage plus size-stratified diagnostics of prediction sets."""

    coverage: float
    mean_width_fraction: float
    ssc: float
    ecg: float
    bin_counts: np.ndarray
    bin_coverage: np.ndarray


def coverage_report(sets: list[PredictionSet], labels, alpha: float,
                    num_size_bins: int = 75, vocab_size: int | None = None) -> CoverageReport:
    """Coverage, mean width fraction, worst-bin coverage (SSC), and coverage gap (ECG).

    Sets are binned by their size into equal-width bins over [0, vocab_size];
    ECG sums (bin weight) * max(1 - alpha - bin coverage, 0), so overcoverage
    is not penalized, and SSC is the minimum coverage over non-empty bins.
    """
    labels_arr = np.asarray(labels).ravel()
    if len(sets) != labels_arr.size or not sets:
        raise ValueError("sets and labels must be non-empty and equal-length")
    sizes = np.array([len(s) for s in sets], dtype=float)
    if vocab_size is None:
        vocab_size = int(sizes.max())
    if vocab_size < sizes.max():
        raise ValueError("vocab_size smaller than the largest prediction set")
    covered = np.array([int(label) in s for s, label in zip(sets, labels_arr)], dtype=float)

    idx = _bin_index(sizes, float(vocab_size), num_size_bins)
    counts = np.bincount(idx, minlength=num_size_bins)
    cov_sum = np.bincount(idx, weights=covered, minlength=num_size_bins)
    with np.errstate(invalid="ignore"):
        bin_cov = np.where(counts > 0, cov_sum / np.maximum(counts, 1), 0.0)
    nonempty = counts > 0
    ecg_val = float((counts[nonempty] / covered.size *
                     np.maximum(1.0 - alpha - bin_cov[nonempty], 0.0)).sum())
    return CoverageReport(
        coverage=float(covered.mean()),
        mean_width_fraction=float(sizes.mean() / vocab_size),
        ssc=float(bin_cov[nonempty].min()),
        ecg=ecg_val,
        bin_counts=counts,
        bin_coverage=bin_cov,
    )


def brier(confidences, correct) -> float:
    """Mean squared gap between confidence and the correctness indicator."""
    conf = np.asarray(confidences, dtype=float).ravel()
    hits = np.asarray(correct, dtype=float).ravel()
    if conf.size == 0 or conf.size != hits.size:
        raise ValueError("inputs must be non-empty and equal-length")
    return float(((conf - hits) ** 2).mean())


def auroc(scores, labels) -> float:
    """Area under the ROC curve via mid-rank statistics (ties count half)."""
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("undefined: labels contain a single class")
    ranks = stats.rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def aupr(scores, labels) -> float:
    """Area under the precision-recall curve by step integration over thresholds."""
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise ValueError("undefined: labels contain a single class")
    order = np.argsort(-s, kind="stable")
    sorted_scores = s[order]
    sorted_hits = y[order].astype(float)
    # Evaluate precision/recall only where the threshold actually drops.
    cum_tp = np.cumsum(sorted_hits)
    distinct = np.nonzero(np.diff(sorted_scores, append=-np.inf) != 0.0)[0]
    tp = cum_tp[distinct]
    predicted = distinct + 1.0
    precision = tp / predicted
    recall = tp / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(((recall - prev_recall) * precision).sum())


def kendall_tau(x, y) -> float:
    """Kendall's tau-b rank correlation (tie-corrected)."""
    xa = np.asarray(x, dtype=float).ravel()
    ya = np.asarray(y, dtype=float).ravel()
    if xa.size != ya.size or xa.size < 2:
        raise ValueError("inputs must be equal-length with at least two elements")
    tau = stats.kendalltau(xa, ya, variant="b").statistic
    if not math.isfinite(tau):
        raise ValueError("undefined: a list is entirely tied")
    return float(tau)


# -- predictive-uncertainty metrics -----------------------------------------


def max_prob(probs) -> float:
    """Highest class probability (its complement is the uncertainty score)."""
    return float(as_prob_vector(probs).max())


def predictive_entropy(probs) -> float:
    """Shannon entropy of a categorical distribution in nats."""
    p = as_prob_vector(probs)
    nonzero = p[p > 0.0]
    return float(-(nonzero * np.log(nonzero)).sum())


def softmax_gap(probs) -> float:
    """Difference between the two largest class probabilities."""
    p = np.sort(as_prob_vector(probs))
    return float(p[-1] - p[-2])


def dempster_shafer(logits) -> float:
    """Evidence-style uncertainty K / (K + sum(exp(logits)))."""
    z = np.asarray(logits, dtype=float).ravel()
    if z.size < 2:
        raise ValueError("need at least two classes")
    k = z.size
    log_evidence = float(logsumexp(z))
    if log_evidence > 700.0:  # exp overflow: evidence dwarfs K
        return 0.0
    return float(k / (k + np.exp(log_evidence)))


def _as_prediction_matrix(matrix) -> np.ndarray:
    rows = np.asarray(matrix, dtype=float)
    if rows.ndim != 2 or rows.shape[1] < 2:
        raise ValueError("expected a B x K matrix with K >= 2")
    for row in rows:
        as_prob_vector(row)
    return rows


def variation_ratio(predicted_labels) -> float:
    """One minus the relative frequency of the modal predicted label."""
    labels = np.asarray(predicted_labels).ravel()
    if labels.size == 0:
        raise ValueError("empty input")
    _, counts = np.unique(labels, return_counts=True)
    return float(1.0 - counts.max() / labels.size)


def class_variance(matrix) -> float:
    """Mean over classes of the across-pass variance of predicted probabilities."""
    rows = _as_prediction_matrix(matrix)
    return float(rows.var(axis=0, ddof=0).mean())


def bma_mutual_information(matrix) -> float:
    """Entropy of the averaged prediction minus the average per-pass entropy."""
    rows = _as_prediction_matrix(matrix)
    mean_row = rows.mean(axis=0)
    mean_entropy = float(np.mean([predictive_entropy(r) for r in rows]))
    return predictive_entropy(mean_row) - mean_entropy
