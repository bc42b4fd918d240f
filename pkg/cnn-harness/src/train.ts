import * as tf from '@tensorflow/tfjs';
import { buildModel, Task } from './model';
import {
  classificationReport,
  regressionReport,
  reportCsv,
} from './metrics';
import { readTargetsCsv } from './targetsCsv';
import { readTensorFile } from './tensorFile';

export interface TrainSpec {
  tensorPath: string;
  targetCsv: string;
  task: Task;
  epochs: number;
  batchSize: number;
  learningRate: number;
  seed: number;
  /** Optional second tensor for the two-arm variant. */
  tensorPath2?: string;
}

export interface TrainResult {
  report: Record<string, number>;
  csv: string;
  testLoss: number;
}

/** Deterministic PRNG (mulberry32) so the split is reproducible. */
function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffledIndex(n: number, seed: number): number[] {
  const idx = Array.from({ length: n }, (_, i) => i);
  const rand = rng(seed);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [idx[i], idx[j]] = [idx[j], idx[i]];
  }
  return idx;
}

function gather(pixels: Float32Array, g: number, idx: number[]): tf.Tensor4D {
  const size = g * g;
  const out = new Float32Array(idx.length * size);
  idx.forEach((sample, row) => {
    out.set(pixels.subarray(sample * size, (sample + 1) * size), row * size);
  });
  return tf.tensor4d(out, [idx.length, g, g, 1]);
}

/**
 * Trains the stack on a tensor + target pair with a fixed, seeded
 * 80/10/10 train/validation/test split and returns test metrics in the
 * same shape (and CSV format) the refined package's eval command emits.
 */
export async function trainEval(spec: TrainSpec): Promise<TrainResult> {
  if (spec.epochs < 1 || spec.batchSize < 1) {
    throw new Error('epochs and batch size must be at least 1');
  }
  const tensors = [readTensorFile(spec.tensorPath)];
  if (spec.tensorPath2) {
    tensors.push(readTensorFile(spec.tensorPath2));
  }
  const targets = readTargetsCsv(spec.targetCsv);
  for (const t of tensors) {
    if (t.n !== targets.values.length) {
      throw new Error(
        `${t.n} images but ${targets.values.length} targets; files do not pair`
      );
    }
  }

  const n = targets.values.length;
  const idx = shuffledIndex(n, spec.seed);
  const nTrain = Math.floor(0.8 * n);
  const nValid = Math.floor(0.1 * n);
  const split = {
    train: idx.slice(0, nTrain),
    valid: idx.slice(nTrain, nTrain + nValid),
    test: idx.slice(nTrain + nValid),
  };
  if (split.test.length < 2) {
    throw new Error(`need at least 20 samples for a usable split, got ${n}`);
  }

  const pick = (rows: number[]) => tensors.map((t) => gather(t.pixels, t.g, rows));
  const yOf = (rows: number[]) =>
    tf.tensor2d(rows.map((i) => targets.values[i]), [rows.length, 1]);

  const model = buildModel(spec.task, tensors.map((t) => t.g), spec.seed);
  model.compile({
    optimizer: tf.train.adam(spec.learningRate),
    loss: spec.task === 'regression' ? 'meanSquaredError' : 'binaryCrossentropy',
  });

  const xTrain = pick(split.train);
  const xValid = pick(split.valid);
  const xTest = pick(split.test);
  const yTrain = yOf(split.train);
  const yValid = yOf(split.valid);
  const yTest = yOf(split.test);
  try {
    let badLoss: number | undefined;
    const history = await model.fit(
      xTrain.length === 1 ? xTrain[0] : xTrain,
      yTrain,
      {
        epochs: spec.epochs,
        batchSize: spec.batchSize,
        shuffle: false,
        verbose: 0,
        validationData: [xValid.length === 1 ? xValid[0] : xValid, yValid],
        callbacks: {
          onBatchEnd: async (_batch, logs) => {
            if (logs && !Number.isFinite(logs.loss)) {
              badLoss = logs.loss;
            }
          },
        },
      }
    );
    const epochLosses = history.history.loss as number[];
    if (badLoss !== undefined || epochLosses.some((l) => !Number.isFinite(l))) {
      throw new Error(`training diverged: loss ${badLoss ?? NaN}`);
    }

    const predTensor = model.predict(
      xTest.length === 1 ? xTest[0] : xTest
    ) as tf.Tensor;
    const yhat = (await predTensor.data()) as Float32Array;
    const yTrue = (await yTest.data()) as Float32Array;
    const testLoss = (tf.tidy(() =>
      tf.losses.meanSquaredError(yTest, predTensor)
    ).dataSync() as Float32Array)[0];
    predTensor.dispose();

    let report: Record<string, number>;
    if (spec.task === 'regression') {
      const r = regressionReport(yTrue, yhat);
      // row names follow the eval-report CSV convention
      report = { nrmse: r.nrmse, nmae: r.nmae, pcc: r.pcc, bias_angle_deg: r.bias };
    } else {
      report = { ...classificationReport(yTrue, yhat) };
    }
    return { report, csv: reportCsv(report), testLoss };
  } finally {
    [...xTrain, ...xValid, ...xTest, yTrain, yValid, yTest].forEach((t) =>
      t.dispose()
    );
  }
}
