"""
Scoring predictions: the metrics toolbox
========================================

Everything here operates on plain prediction/truth vectors, so the demo
fakes a model by corrupting the synthetic target with noise and a
deliberate scale bias.  Covers regression and classification scores,
validation-based bias correction, paired model comparison, bootstrap
intervals, resampling robustness, and the train/test gap statistic.

Run from the repository root:

    python3 demos/metrics_tour.py
"""

import numpy as np

from refined import (
    SynthSpec,
    bias_correct,
    binomial_ci,
    bootstrap_ci,
    classification_eval,
    gap_statistic,
    generate,
    mcnemar,
    regression_eval,
    robustness,
)

rng = np.random.default_rng(12)
table = generate(SynthSpec(n=400, p=30, gamma=0.7, seed=12))
y = table.target

# a "model" that gets the shape right but compresses the scale and adds noise
yhat = 0.6 * y + 0.18 + rng.normal(0.0, 0.05, size=y.size)

# ---- regression scores ------------------------------------------------------
# nrmse/nmae are normalized by the mean predictor, so 1.0 means "no better
# than predicting the average" and smaller is better.  The bias angle is
# the tilt of the residual trend: 0 for an unbiased model.
ev = regression_eval(y, yhat)
print(f"nrmse {ev.nrmse:.3f}  nmae {ev.nmae:.3f}  pcc {ev.pcc:.3f}  "
      f"bias {ev.bias_angle_deg:.1f} deg")

# ---- bias correction --------------------------------------------------------
# Fit the residual trend on a validation split, subtract it on test.
half = y.size // 2
corrected = bias_correct(y[:half], yhat[:half], yhat[half:])
after = regression_eval(y[half:], corrected)
print(f"after bias correction: nrmse {after.nrmse:.3f}  "
      f"bias {after.bias_angle_deg:.1f} deg")

# ---- bootstrap intervals ----------------------------------------------------
# bootstrap_ci just drives a resampler you supply, so any metric works.
y_test = y[half:]


def nrmse_resample(lrng):
    idx = lrng.integers(0, y_test.size, y_test.size)
    if np.all(y_test[idx] == y_test[idx[0]]):
        return float("nan")
    return regression_eval(y_test[idx], corrected[idx]).nrmse


lo, hi = bootstrap_ci(nrmse_resample, iterations=2000, seed=0)
print(f"nrmse 95% bootstrap interval: [{lo:.3f}, {hi:.3f}]")

# ---- classification scores --------------------------------------------------
labels = (y > np.median(y)).astype(int)
scores = 1.0 / (1.0 + np.exp(-6.0 * (yhat - np.median(y))))
cls = classification_eval(labels, scores)
print(f"\nclassifier: accuracy {cls.accuracy:.3f}  f1 {cls.f1:.3f}  "
      f"auroc {cls.auroc:.3f}")
k = int(cls.accuracy * labels.size)
lo, hi = binomial_ci(k, labels.size)
print(f"accuracy 95% binomial interval: [{lo:.3f}, {hi:.3f}]")

# ---- comparing two models ---------------------------------------------------
# McNemar looks only at samples where the models disagree; here model B is
# model A with some predictions deliberately broken.
pred_a = scores > 0.5
flip = rng.random(labels.size) < 0.08
pred_b = np.where(flip, ~pred_a, pred_a)
res = mcnemar(pred_a == labels.astype(bool), pred_b == labels.astype(bool))
print(f"\nmcnemar: b {res.b}  c {res.c}  p {res.p_value:.4f}")

# ---- robustness and generalization gap --------------------------------------
# robustness: fraction of paired bootstrap resamples where the first model
# strictly beats the second.  gap_statistic: separation between a model's
# bootstrap scores and a null that just draws predictions from the
# training targets (near 0 = indistinguishable from the null).
rob = robustness(y, 0.6 * y + 0.18, yhat, metric="nrmse", iterations=500, seed=1)
print(f"\nnoiseless core beats the noisy model in {100 * rob:.0f}% of resamples")
train_y = y[:half]
gap_real = gap_statistic(y_test, corrected, train_y, seed=2)
gap_null = gap_statistic(y_test, rng.permutation(y_test), train_y, seed=2)
print(f"gap statistic: real model {gap_real:.2f}, shuffled predictions {gap_null:.2f}")
