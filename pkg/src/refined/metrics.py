"""Evaluation metrics and comparison statistics.

Regression quality is reported relative to the mean predictor (NRMSE, NMAE)
plus correlation and a residual-trend angle.  Comparison helpers cover
paired significance (McNemar), bootstrap win fractions, a two-means gap
against a null predictor, and simple interval estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import binom, chi2, rankdata

from .errors import ConfigError, DataError, NumericError

__all__ = [
    "RegressionEval",
    "ClassificationEval",
    "McNemarResult",
    "regression_eval",
    "classification_eval",
    "auroc",
    "bias_correct",
    "mcnemar",
    "robustness",
    "gap_statistic",
    "two_means_1d",
    "bootstrap_ci",
    "binomial_ci",
]

# lower-is-better flags for named regression metrics
_METRIC_DIRECTIONS = {"nrmse": True, "nmae": True, "bias": True, "pcc": False}


@dataclass
class RegressionEval:
    nrmse: float
    nmae: float
    pcc: float
    bias_angle_deg: float


@dataclass
class ClassificationEval:
    accuracy: float
    precision: float
    recall: float
    f1: float
    fpr: float
    auroc: float
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass
class McNemarResult:
    p_value: float
    b: int  # first model right, second wrong
    c: int  # second model right, first wrong
    no_discordance: bool


def _paired(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise DataError("paired vectors must be 1-D and equal length")
    if y.size < 2:
        raise DataError(f"need at least 2 observations, got {y.size}")
    if not (np.isfinite(y).all() and np.isfinite(yhat).all()):
        raise NumericError("non-finite values in inputs")
    return y, yhat


def _bias_angle(y: np.ndarray, residual: np.ndarray) -> float:
    """Absolute angle, in degrees, of the residual trend against the truth.

    The mean predictor leaves residual = mean - y, slope -1, angle 45.
    """
    slope = np.cov(y, residual, bias=True)[0, 1] / np.var(y)
    return abs(math.degrees(math.atan(slope)))


def regression_eval(y, yhat) -> RegressionEval:
    """Errors normalized against the mean predictor.

    nrmse = sqrt(sum (y - yhat)^2 / sum (y - mean)^2) and nmae the same
    with absolute sums; both are exactly 1 for the mean predictor.  pcc is
    0 when either side is constant.  Constant truth raises: the
    normalizing denominator vanishes.
    """
    y, yhat = _paired(y, yhat)
    center = y - y.mean()
    ss = float(center @ center)
    if ss == 0:
        raise NumericError("constant truth: normalized errors are undefined")
    err = y - yhat
    nrmse = math.sqrt(float(err @ err) / ss)
    nmae = float(np.abs(err).sum() / np.abs(center).sum())
    if np.std(yhat) == 0 or np.std(y) == 0:
        pcc = 0.0
    else:
        pcc = float(np.corrcoef(y, yhat)[0, 1])
    return RegressionEval(nrmse, nmae, pcc, _bias_angle(y, yhat - y))


def auroc(labels, scores) -> float:
    """Rank-based area under the ROC curve, mid-ranks for ties."""
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=float)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise DataError("labels and scores must be 1-D and equal length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("auroc needs both classes present")
    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def classification_eval(labels, scores, threshold: float = 0.5) -> ClassificationEval:
    """Confusion-matrix metrics at a score threshold plus AUROC.

    Predictions are score >= threshold.  Ratios with empty denominators
    report 0.  With a single observed class, auroc is NaN (use auroc()
    directly for a hard error) and the other fields still come back.
    """
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=float)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise DataError("labels and scores must be 1-D and equal length")
    if labels.size == 0:
        raise DataError("empty inputs")
    pred = scores >= threshold
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    tn = int(np.sum(~pred & ~labels))
    fn = int(np.sum(~pred & labels))

    def ratio(num, den):
        return num / den if den else 0.0

    try:
        area = auroc(labels, scores)
    except DataError:
        area = math.nan
    return ClassificationEval(
        accuracy=(tp + tn) / labels.size,
        precision=ratio(tp, tp + fp),
        recall=ratio(tp, tp + fn),
        f1=ratio(2 * tp, 2 * tp + fp + fn),
        fpr=ratio(fp, fp + tn),
        auroc=area,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def bias_correct(y_valid, yhat_valid, yhat_test) -> np.ndarray:
    """Remove the linear residual trend learned on validation predictions.

    Fits residual = a + b * yhat on the validation pairs and subtracts the
    fitted line from the test predictions.
    """
    y_valid, yhat_valid = _paired(y_valid, yhat_valid)
    yhat_test = np.asarray(yhat_test, dtype=float)
    var = np.var(yhat_valid)
    if var == 0:
        raise NumericError("constant validation predictions: trend is undefined")
    residual = yhat_valid - y_valid
    slope = np.cov(yhat_valid, residual, bias=True)[0, 1] / var
    intercept = residual.mean() - slope * yhat_valid.mean()
    return yhat_test - (intercept + slope * yhat_test)


def mcnemar(correct_a, correct_b, method: str = "exact") -> McNemarResult:
    """Paired test on per-sample correctness of two models.

    exact: two-sided binomial, p = min(1, 2 * P(X <= min(b, c))) with
    X ~ Bin(b + c, 1/2).  chi2: continuity-corrected chi-square.  With no
    discordant pairs p is 1 and the flag is set.
    """
    a = np.asarray(correct_a).astype(bool)
    bv = np.asarray(correct_b).astype(bool)
    if a.shape != bv.shape or a.ndim != 1:
        raise DataError("correctness vectors must be 1-D and equal length")
    b = int(np.sum(a & ~bv))
    c = int(np.sum(~a & bv))
    n = b + c
    if n == 0:
        return McNemarResult(1.0, b, c, True)
    if method == "exact":
        p = min(1.0, 2.0 * float(binom.cdf(min(b, c), n, 0.5)))
    elif method == "chi2":
        stat = (abs(b - c) - 1) ** 2 / n
        p = float(chi2.sf(stat, df=1))
    else:
        raise ConfigError(f"unknown method {method!r}")
    return McNemarResult(p, b, c, False)


def _named_metric(metric: str):
    if metric not in _METRIC_DIRECTIONS:
        raise ConfigError(
            f"unknown metric {metric!r}; choose from {sorted(_METRIC_DIRECTIONS)}"
        )
    lower_better = _METRIC_DIRECTIONS[metric]

    def compute(y, yhat):
        ev = regression_eval(y, yhat)
        return {
            "nrmse": ev.nrmse,
            "nmae": ev.nmae,
            "pcc": ev.pcc,
            "bias": ev.bias_angle_deg,
        }[metric]

    return compute, lower_better


def robustness(
    y, yhat_a, yhat_b, metric: str = "nrmse", iterations: int = 1000, seed: int = 0
) -> float:
    """Fraction of bootstrap resamples where the first model strictly beats
    the second on the named metric.

    Ties and resamples where the metric is undefined (constant resampled
    truth) count as non-wins.
    """
    y, yhat_a = _paired(y, yhat_a)
    _, yhat_b = _paired(y, yhat_b)
    if iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {iterations}")
    compute, lower_better = _named_metric(metric)
    rng = np.random.default_rng(seed)
    wins = 0
    for _ in range(iterations):
        idx = rng.integers(0, y.size, size=y.size)
        try:
            va = compute(y[idx], yhat_a[idx])
            vb = compute(y[idx], yhat_b[idx])
        except NumericError:
            continue
        if (va < vb) if lower_better else (va > vb):
            wins += 1
    return wins / iterations


def two_means_1d(values) -> tuple[float, float]:
    """Exact two-cluster k-means on a 1-D sample via the sorted-split
    sweep; returns the centroids in ascending order."""
    v = np.sort(np.asarray(values, dtype=float))
    m = v.size
    if m < 2:
        raise DataError(f"need at least 2 values, got {m}")
    csum = np.cumsum(v)
    csq = np.cumsum(v * v)
    best_cost, best_split = math.inf, 1
    for s in range(1, m):
        left = csq[s - 1] - csum[s - 1] ** 2 / s
        right = (csq[-1] - csq[s - 1]) - (csum[-1] - csum[s - 1]) ** 2 / (m - s)
        cost = left + right
        if cost < best_cost:
            best_cost, best_split = cost, s
    c1 = csum[best_split - 1] / best_split
    c2 = (csum[-1] - csum[best_split - 1]) / (m - best_split)
    return float(c1), float(c2)


def gap_statistic(
    y,
    yhat,
    train_y,
    metric: str = "nrmse",
    iterations: int = 1000,
    seed: int = 0,
) -> float:
    """Separation between the model's bootstrap metric distribution and a
    null predictor drawing from the training targets.

    Each iteration resamples (y, yhat) pairs and draws a same-size null
    prediction from train_y; the pooled metric values are split by exact
    1-D 2-means and the gap is the centroid distance.  Near-zero gaps mean
    the model is indistinguishable from the null.
    """
    y, yhat = _paired(y, yhat)
    train_y = np.asarray(train_y, dtype=float)
    if train_y.ndim != 1 or train_y.size == 0:
        raise DataError("train_y must be a non-empty 1-D vector")
    if iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {iterations}")
    compute, _ = _named_metric(metric)
    rng = np.random.default_rng(seed)
    pooled: list[float] = []
    for _ in range(iterations):
        idx = rng.integers(0, y.size, size=y.size)
        null = train_y[rng.integers(0, train_y.size, size=y.size)]
        try:
            pooled.append(compute(y[idx], yhat[idx]))
            pooled.append(compute(y[idx], null))
        except NumericError:
            continue
    if len(pooled) < 2:
        raise NumericError("metric undefined on every bootstrap resample")
    c1, c2 = two_means_1d(pooled)
    return abs(c2 - c1)


def bootstrap_ci(
    resampler, level: float = 0.95, iterations: int = 1000, seed: int = 0
) -> tuple[float, float]:
    """Percentile interval over iterations calls of resampler(rng).

    resampler receives a Generator and returns one bootstrap metric value;
    NaN returns are ignored.  A constant resampler yields a zero-width
    interval.
    """
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must be in (0, 1), got {level}")
    if iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {iterations}")
    rng = np.random.default_rng(seed)
    values = np.array([float(resampler(rng)) for _ in range(iterations)])
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise NumericError("resampler returned no finite values")
    alpha = (1.0 - level) / 2.0
    return (
        float(np.quantile(values, alpha)),
        float(np.quantile(values, 1.0 - alpha)),
    )


def binomial_ci(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Normal-approximation interval for a binomial proportion, clamped to
    [0, 1]."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if not 0 <= k <= n:
        raise ConfigError(f"k must be in [0, {n}], got {k}")
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must be in (0, 1), got {level}")
    phat = k / n
    z = float(ndtri((1.0 + level) / 2.0))
    half = z * math.sqrt(phat * (1.0 - phat) / n)
    return (max(0.0, phat - half), min(1.0, phat + half))
