import { describe, expect, it } from 'vitest';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { trainEval } from '../src/train';

const FIXTURES = path.join(__dirname, 'fixtures');
const TENSOR = path.join(FIXTURES, 'small.tensor');
const TARGETS = path.join(FIXTURES, 'small_targets.csv');

/** Writes 60 iid noise targets with no tie to the fixture images. */
function noiseTargets(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'train-'));
  const file = path.join(dir, 'noise.csv');
  const rand = (() => {
    let a = 99;
    return () => {
      a = (a + 0x6d2b79f5) >>> 0;
      let t = Math.imul(a ^ (a >>> 15), 1 | a);
      t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
      return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
  })();
  const lines = ['id,y'];
  for (let i = 0; i < 60; i++) {
    // sum of 4 uniforms, centered: roughly normal, mean 0
    lines.push(`${i + 1},${rand() + rand() + rand() + rand() - 2}`);
  }
  fs.writeFileSync(file, lines.join('\n') + '\n');
  return file;
}

describe('trainEval', () => {
  it('one-epoch regression run emits every metric field', async () => {
    const result = await trainEval({
      tensorPath: TENSOR,
      targetCsv: TARGETS,
      task: 'regression',
      epochs: 1,
      batchSize: 16,
      learningRate: 1e-3,
      seed: 0,
    });
    for (const key of ['nrmse', 'nmae', 'pcc', 'bias_angle_deg']) {
      expect(result.report).toHaveProperty(key);
      expect(Number.isFinite(result.report[key])).toBe(true);
      expect(result.csv).toContain(`\n${key},`);
    }
    expect(Number.isFinite(result.testLoss)).toBe(true);
  }, 60000);

  it('one-epoch classification run emits every metric field', async () => {
    const result = await trainEval({
      tensorPath: TENSOR,
      targetCsv: TARGETS,
      task: 'classification',
      epochs: 1,
      batchSize: 16,
      learningRate: 1e-3,
      seed: 1,
    });
    for (const key of ['accuracy', 'precision', 'recall', 'f1', 'fpr', 'auroc']) {
      expect(result.report).toHaveProperty(key);
      expect(result.csv).toContain(`\n${key},`);
    }
    expect(Number.isFinite(result.report.accuracy)).toBe(true);
  }, 60000);

  it('targets holding no signal train to NRMSE near 1', async () => {
    const result = await trainEval({
      tensorPath: TENSOR,
      targetCsv: noiseTargets(),
      task: 'regression',
      epochs: 30,
      batchSize: 16,
      learningRate: 1e-3,
      seed: 2,
    });
    expect(result.report.nrmse).toBeGreaterThan(0.7);
    expect(result.report.nrmse).toBeLessThan(1.45);
  }, 120000);

  it('two-tensor mode trains both arms concatenated', async () => {
    const result = await trainEval({
      tensorPath: TENSOR,
      tensorPath2: TENSOR,
      targetCsv: TARGETS,
      task: 'regression',
      epochs: 1,
      batchSize: 16,
      learningRate: 1e-3,
      seed: 3,
    });
    expect(Number.isFinite(result.report.nrmse)).toBe(true);
  }, 60000);

  it('rejects bad epoch and batch settings', async () => {
    const spec = {
      tensorPath: TENSOR,
      targetCsv: TARGETS,
      task: 'regression' as const,
      epochs: 0,
      batchSize: 16,
      learningRate: 1e-3,
      seed: 0,
    };
    await expect(trainEval(spec)).rejects.toThrow(/epochs/);
    await expect(trainEval({ ...spec, epochs: 1, batchSize: 0 })).rejects.toThrow(/batch/);
  });

  it('rejects a target count that disagrees with the tensor', async () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'train-'));
    const file = path.join(dir, 'short.csv');
    fs.writeFileSync(file, 'id,y\n1,0.5\n2,0.25\n');
    await expect(
      trainEval({
        tensorPath: TENSOR,
        targetCsv: file,
        task: 'regression',
        epochs: 1,
        batchSize: 16,
        learningRate: 1e-3,
        seed: 0,
      })
    ).rejects.toThrow(/60/);
  });

  it('propagates tensor format errors', async () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'train-'));
    const file = path.join(dir, 'bad.tensor');
    fs.writeFileSync(file, 'REFINED-TENSOR v9 1 2 2\n\0\0\0\0');
    await expect(
      trainEval({
        tensorPath: file,
        targetCsv: TARGETS,
        task: 'regression',
        epochs: 1,
        batchSize: 16,
        learningRate: 1e-3,
        seed: 0,
      })
    ).rejects.toThrow(/header/);
  });
});
