/**
 * Evaluation metrics matching the refined package's definitions, so the
 * CSV this harness writes is directly comparable with `refined eval`
 * reports. Cross-checked against a fixture generated by that package.
 */

export interface RegressionReport {
  nrmse: number;
  nmae: number;
  pcc: number;
  bias: number;
}

export interface ClassificationReport {
  accuracy: number;
  precision: number;
  recall: number;
  f1: number;
  fpr: number;
  auroc: number;
}

function mean(x: ArrayLike<number>): number {
  let s = 0;
  for (let i = 0; i < x.length; i++) s += x[i];
  return s / x.length;
}

/** Pearson correlation; 0 when either side is constant. */
export function pcc(y: ArrayLike<number>, yhat: ArrayLike<number>): number {
  const my = mean(y);
  const mp = mean(yhat);
  let sy = 0;
  let sp = 0;
  let cross = 0;
  for (let i = 0; i < y.length; i++) {
    const a = y[i] - my;
    const b = yhat[i] - mp;
    sy += a * a;
    sp += b * b;
    cross += a * b;
  }
  if (sy === 0 || sp === 0) return 0;
  return cross / Math.sqrt(sy * sp);
}

/**
 * Errors normalized against the mean predictor: nrmse is the root of a
 * sum-of-squares ratio, nmae the same with absolute sums; both are 1
 * for a model that always predicts the average. bias is the absolute
 * angle (degrees) of the residual trend against the truth.
 */
export function regressionReport(
  y: ArrayLike<number>,
  yhat: ArrayLike<number>
): RegressionReport {
  if (y.length !== yhat.length || y.length < 2) {
    throw new Error(`paired vectors required, got ${y.length}/${yhat.length}`);
  }
  const my = mean(y);
  let ss = 0;
  let sa = 0;
  let se2 = 0;
  let sea = 0;
  for (let i = 0; i < y.length; i++) {
    const c = y[i] - my;
    const e = y[i] - yhat[i];
    ss += c * c;
    sa += Math.abs(c);
    se2 += e * e;
    sea += Math.abs(e);
  }
  if (ss === 0) {
    throw new Error('constant truth: normalized errors are undefined');
  }
  // residual trend slope: biased cov(y, yhat - y) / var(y)
  let cross = 0;
  const mr = mean(yhat) - my;
  for (let i = 0; i < y.length; i++) {
    cross += (y[i] - my) * (yhat[i] - y[i] - mr);
  }
  const slope = cross / ss;
  return {
    nrmse: Math.sqrt(se2 / ss),
    nmae: sea / sa,
    pcc: pcc(y, yhat),
    bias: Math.abs((Math.atan(slope) * 180) / Math.PI),
  };
}

/** Rank-based area under the ROC curve, mid-ranks for ties. */
export function auroc(labels: ArrayLike<number>, scores: ArrayLike<number>): number {
  const order = Array.from({ length: scores.length }, (_, i) => i).sort(
    (a, b) => scores[a] - scores[b]
  );
  const ranks = new Float64Array(scores.length);
  let i = 0;
  while (i < order.length) {
    let j = i;
    while (j + 1 < order.length && scores[order[j + 1]] === scores[order[i]]) j++;
    const mid = (i + j) / 2 + 1; // 1-based mid-rank of the tie block
    for (let k = i; k <= j; k++) ranks[order[k]] = mid;
    i = j + 1;
  }
  let nPos = 0;
  let posRanks = 0;
  for (let k = 0; k < labels.length; k++) {
    if (labels[k] >= 0.5) {
      nPos++;
      posRanks += ranks[k];
    }
  }
  const nNeg = labels.length - nPos;
  if (nPos === 0 || nNeg === 0) return NaN;
  return (posRanks - (nPos * (nPos + 1)) / 2) / (nPos * nNeg);
}

/**
 * Confusion-matrix metrics at a score threshold (prediction is
 * score >= threshold) plus AUROC. Ratios with empty denominators are 0.
 */
export function classificationReport(
  labels: ArrayLike<number>,
  scores: ArrayLike<number>,
  threshold = 0.5
): ClassificationReport {
  let tp = 0;
  let fp = 0;
  let tn = 0;
  let fn = 0;
  for (let i = 0; i < labels.length; i++) {
    const truth = labels[i] >= 0.5;
    const pred = scores[i] >= threshold;
    if (pred && truth) tp++;
    else if (pred && !truth) fp++;
    else if (!pred && !truth) tn++;
    else fn++;
  }
  const ratio = (num: number, den: number) => (den ? num / den : 0);
  return {
    accuracy: (tp + tn) / labels.length,
    precision: ratio(tp, tp + fp),
    recall: ratio(tp, tp + fn),
    f1: ratio(2 * tp, 2 * tp + fp + fn),
    fpr: ratio(fp, fp + tn),
    auroc: auroc(labels, scores),
  };
}

/** Formats a report as `metric,value,ci_low,ci_high` CSV text. */
export function reportCsv(report: Record<string, number>): string {
  const lines = ['metric,value,ci_low,ci_high'];
  for (const [name, value] of Object.entries(report)) {
    lines.push(`${name},${value},,`);
  }
  return lines.join('\n') + '\n';
}
