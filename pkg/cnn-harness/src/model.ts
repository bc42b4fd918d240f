import * as tf from '@tensorflow/tfjs';

export type Task = 'regression' | 'classification';

/**
 * Kernel side for a g-pixel image: 7 at the reference size of 26,
 * scaled down proportionally for smaller grids, never below 2 or
 * above g.
 */
export function kernelSize(g: number): number {
  const k = Math.round((7 * g) / 26);
  return Math.max(2, Math.min(g, k));
}

function convArm(g: number, filters: number, seed: number): {
  input: tf.SymbolicTensor;
  features: tf.SymbolicTensor;
} {
  const input = tf.input({ shape: [g, g, 1] });
  let x = tf.layers
    .conv2d({
      filters,
      kernelSize: kernelSize(g),
      strides: 2,
      padding: 'valid',
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
      biasInitializer: 'zeros',
    })
    .apply(input) as tf.SymbolicTensor;
  // momentum low enough that inference stats settle within a few epochs
  x = tf.layers.batchNormalization({ momentum: 0.9 }).apply(x) as tf.SymbolicTensor;
  x = tf.layers.reLU().apply(x) as tf.SymbolicTensor;
  x = tf.layers.flatten().apply(x) as tf.SymbolicTensor;
  return { input, features: x };
}

/**
 * The compact stack: conv (64 kernels for regression, 16 for
 * classification) -> batch norm -> ReLU -> dense 256 -> dense 64 ->
 * dropout keeping 70% -> one output unit (linear or sigmoid).
 *
 * With two grid sides the model grows a second convolutional arm and
 * the flattened features are concatenated before the dense head.
 */
export function buildModel(task: Task, gridSides: number[], seed: number): tf.LayersModel {
  const filters = task === 'regression' ? 64 : 16;
  const arms = gridSides.map((g, i) => convArm(g, filters, seed + i));
  let x =
    arms.length === 1
      ? arms[0].features
      : (tf.layers.concatenate().apply(arms.map((a) => a.features)) as tf.SymbolicTensor);
  x = tf.layers
    .dense({
      units: 256,
      activation: 'relu',
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 101 }),
    })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .dense({
      units: 64,
      activation: 'relu',
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 102 }),
    })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers.dropout({ rate: 0.3, seed: seed + 103 }).apply(x) as tf.SymbolicTensor;
  const output = tf.layers
    .dense({
      units: 1,
      activation: task === 'regression' ? 'linear' : 'sigmoid',
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 104 }),
    })
    .apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: arms.map((a) => a.input), outputs: output });
}
