import * as fs from 'fs';

/** A parsed REFINED-TENSOR v1 file: n square grayscale images of side g. */
export interface TensorFile {
  n: number;
  g: number;
  /** Row-major pixels, image-by-image; length n * g * g, values in [0, 1]. */
  pixels: Float32Array;
}

/**
 * Reads a REFINED-TENSOR v1 file.
 *
 * Layout: ASCII header `REFINED-TENSOR v1 <n> <g> <g>\n` followed by
 * n * g * g little-endian float32 values.
 */
export function readTensorFile(path: string): TensorFile {
  const blob = fs.readFileSync(path);
  const newline = blob.indexOf(0x0a);
  if (newline < 0) {
    throw new Error(`${path}: missing tensor header line`);
  }
  const header = blob.subarray(0, newline).toString('utf-8');
  const m = header.match(/^REFINED-TENSOR v1 (\d+) (\d+) (\d+)$/);
  if (!m) {
    throw new Error(`${path}: bad tensor header: ${JSON.stringify(header)}`);
  }
  const n = parseInt(m[1], 10);
  const rows = parseInt(m[2], 10);
  const cols = parseInt(m[3], 10);
  if (rows !== cols) {
    throw new Error(`${path}: images must be square, got ${rows}x${cols}`);
  }
  const body = blob.subarray(newline + 1);
  const expected = n * rows * cols * 4;
  if (body.length !== expected) {
    throw new Error(
      `${path}: expected ${expected} data bytes, found ${body.length}`
    );
  }
  const pixels = new Float32Array(n * rows * cols);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = body.readFloatLE(i * 4);
  }
  return { n, g: rows, pixels };
}
