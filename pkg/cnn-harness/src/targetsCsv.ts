import * as fs from 'fs';
import Papa from 'papaparse';

/** Per-sample targets in file order, as written next to a tensor file. */
export interface Targets {
  ids: string[];
  values: Float32Array;
}

/**
 * Reads an `id,<target>` CSV. Row order is significant: row i labels
 * image i of the tensor file it accompanies.
 */
export function readTargetsCsv(path: string): Targets {
  const text = fs.readFileSync(path, 'utf-8');
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length < 2 || rows[0].length < 2) {
    throw new Error(`${path}: expected a header row and id,value rows`);
  }
  const ids: string[] = [];
  const values = new Float32Array(rows.length - 1);
  for (let i = 1; i < rows.length; i++) {
    const [id, raw] = rows[i];
    const value = Number(raw);
    if (!Number.isFinite(value)) {
      throw new Error(`${path} row ${i + 1}: bad target ${JSON.stringify(raw)}`);
    }
    ids.push(id);
    values[i - 1] = value;
  }
  return { ids, values };
}
