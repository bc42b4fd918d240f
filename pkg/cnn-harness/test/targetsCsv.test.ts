import { describe, expect, it } from 'vitest';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { readTargetsCsv } from '../src/targetsCsv';

const FIXTURE = path.join(__dirname, 'fixtures', 'small_targets.csv');

function writeTemp(text: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'targets-'));
  const file = path.join(dir, 't.csv');
  fs.writeFileSync(file, text);
  return file;
}

describe('readTargetsCsv', () => {
  it('parses the committed fixture in row order', () => {
    const t = readTargetsCsv(FIXTURE);
    expect(t.ids.length).toBe(60);
    expect(t.values.length).toBe(60);
    expect(t.ids[0]).toBe('1');
    expect(t.values[0]).toBeCloseTo(0.4180914597400242, 6);
  });

  it('rejects a non-numeric target value', () => {
    expect(() => readTargetsCsv(writeTemp('id,y\na,1.0\nb,oops\n'))).toThrow(/bad target/);
  });

  it('rejects a file without data rows', () => {
    expect(() => readTargetsCsv(writeTemp('id,y\n'))).toThrow(/header/);
  });
});
