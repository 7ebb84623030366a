/**
 * Reader/writer for the engine's raw matrix interchange format.
 *
 * Little-endian layout: magic "BHTM", one u8 dtype tag (0 = f64,
 * 1 = f32), u64 row count, u64 column count, then the values row-major.
 */

import { readFileSync, writeFileSync } from "node:fs";

export type Precision = "f32" | "f64";

export interface Matrix {
  rows: number;
  cols: number;
  precision: Precision;
  /** Row-major values; Float64Array or Float32Array matching `precision`. */
  data: Float64Array | Float32Array;
}

const MAGIC = "BHTM";
const HEADER_BYTES = 4 + 1 + 8 + 8;

export function writeMatrix(path: string, m: Matrix): void {
  const elemBytes = m.precision === "f64" ? 8 : 4;
  const buf = Buffer.alloc(HEADER_BYTES + m.rows * m.cols * elemBytes);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt8(m.precision === "f64" ? 0 : 1, 4);
  buf.writeBigUInt64LE(BigInt(m.rows), 5);
  buf.writeBigUInt64LE(BigInt(m.cols), 13);
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  for (let i = 0; i < m.data.length; i++) {
    if (m.precision === "f64") {
      view.setFloat64(i * 8, m.data[i], true);
    } else {
      view.setFloat32(i * 4, m.data[i], true);
    }
  }
  writeFileSync(path, buf);
}

export function readMatrix(path: string): Matrix {
  const buf = readFileSync(path);
  if (buf.length < HEADER_BYTES || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error(`${path}: not a BHTM matrix file`);
  }
  const tag = buf.readUInt8(4);
  if (tag !== 0 && tag !== 1) {
    throw new Error(`${path}: unknown dtype tag ${tag}`);
  }
  const precision: Precision = tag === 0 ? "f64" : "f32";
  const rows = Number(buf.readBigUInt64LE(5));
  const cols = Number(buf.readBigUInt64LE(13));
  const count = rows * cols;
  const elemBytes = tag === 0 ? 8 : 4;
  if (buf.length !== HEADER_BYTES + count * elemBytes) {
    throw new Error(`${path}: truncated payload`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  const data = tag === 0 ? new Float64Array(count) : new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = tag === 0
      ? view.getFloat64(i * 8, true)
      : view.getFloat32(i * 4, true);
  }
  return { rows, cols, precision, data };
}
