import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { readMatrix, writeMatrix } from "../src/binary.js";

const workdir = mkdtempSync(join(tmpdir(), "bhtsne-binary-"));
afterAll(() => rmSync(workdir, { recursive: true, force: true }));

describe("BHTM codec", () => {
  it("round-trips f64 bitwise", () => {
    const data = new Float64Array([1.5, -2.25, Math.PI, 1e-300, 0, 42]);
    const path = join(workdir, "f64.bhtm");
    writeMatrix(path, { rows: 3, cols: 2, precision: "f64", data });
    const back = readMatrix(path);
    expect(back.rows).toBe(3);
    expect(back.cols).toBe(2);
    expect(back.precision).toBe("f64");
    expect(new Uint8Array(back.data.buffer)).toEqual(
      new Uint8Array(data.buffer));
  });

  it("round-trips f32 bitwise", () => {
    const data = new Float32Array([0.5, -7.125, 3.25, 9.75]);
    const path = join(workdir, "f32.bhtm");
    writeMatrix(path, { rows: 2, cols: 2, precision: "f32", data });
    const back = readMatrix(path);
    expect(back.precision).toBe("f32");
    expect(new Uint8Array(back.data.buffer)).toEqual(
      new Uint8Array(data.buffer));
  });

  it("rejects files without the magic", () => {
    const bad = join(workdir, "bad.bin");
    writeFileSync(bad, "definitely,not,binary\n");
    expect(() => readMatrix(bad)).toThrow(/not a BHTM/);
  });
});
