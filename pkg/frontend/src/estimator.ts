/**
 * Fit-transform estimator over the native engine.
 *
 * The wrapper adds no numeric behavior: the input matrix is handed to the
 * engine CLI in its binary interchange format, and the embedding, KL
 * divergence and per-stage timings are read back from the CLI's outputs,
 * so results are bit-for-bit those of `bhtsne embed` with equal
 * configuration and seed.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { readMatrix, writeMatrix, type Matrix } from "./binary.js";
import {
  cliFlags,
  resolveConfig,
  type ResolvedConfig,
  type TsneOptions,
} from "./config.js";

export interface StageTiming {
  total_s: number;
  per_iter_mean_s: number;
  calls: number;
}

export interface RunManifest {
  tool: string;
  version: string;
  seed: number;
  precision: string;
  kl: number;
  wall_s: number;
  [key: string]: unknown;
}

export class BarnesHutTSNE {
  readonly config: ResolvedConfig;

  /** Exact KL divergence of the last fitted embedding. */
  klDivergence_: number | undefined;
  /** Per-stage wall times of the last run. */
  timings_: Record<string, StageTiming> | undefined;
  /** Full run manifest of the last run. */
  manifest_: RunManifest | undefined;

  private running = false;

  constructor(options: TsneOptions = {}) {
    this.config = resolveConfig(options);
  }

  /** Embed an N x D matrix into N x 2; one run per handle at a time. */
  fitTransform(x: number[][]): number[][] {
    const matrix = this.validateInput(x);
    if (this.running) {
      throw new Error("this estimator is already running a fit");
    }
    this.running = true;
    const workdir = mkdtempSync(join(tmpdir(), "bhtsne-"));
    try {
      const inputPath = join(workdir, "input.bhtm");
      const outPath = join(workdir, "embedding.bhtm");
      writeMatrix(inputPath, matrix);

      const [cmd, ...prefix] = this.config.cli;
      const args = [...prefix, "embed", "--input", inputPath,
                    "--out", outPath, ...cliFlags(this.config)];
      const proc = spawnSync(cmd, args, { encoding: "utf-8" });
      if (proc.error) {
        throw new Error(`failed to launch ${cmd}: ${proc.error.message}`);
      }
      if (proc.status !== 0) {
        const detail = (proc.stderr || proc.stdout || "").trim();
        throw new Error(`engine exited with status ${proc.status}: ${detail}`);
      }

      const embedding = readMatrix(outPath);
      this.manifest_ = JSON.parse(
        readFileSync(`${outPath}.manifest.json`, "utf-8")) as RunManifest;
      this.timings_ = JSON.parse(
        readFileSync(`${outPath}.timings.json`, "utf-8"),
      ) as Record<string, StageTiming>;
      this.klDivergence_ = this.manifest_.kl;

      const out: number[][] = [];
      for (let i = 0; i < embedding.rows; i++) {
        out.push([embedding.data[2 * i], embedding.data[2 * i + 1]]);
      }
      return out;
    } finally {
      this.running = false;
      rmSync(workdir, { recursive: true, force: true });
    }
  }

  private validateInput(x: number[][]): Matrix {
    if (!Array.isArray(x) || x.length < 2 || !Array.isArray(x[0])) {
      throw new TypeError("input must be a 2-D array with at least 2 rows");
    }
    const rows = x.length;
    const cols = x[0].length;
    if (cols < 1) {
      throw new TypeError("input must have at least 1 column");
    }
    const data = this.config.precision === "f64"
      ? new Float64Array(rows * cols)
      : new Float32Array(rows * cols);
    for (let i = 0; i < rows; i++) {
      const row = x[i];
      if (!Array.isArray(row) || row.length !== cols) {
        throw new TypeError(
          `row ${i} has ${Array.isArray(row) ? row.length : "no"} columns, expected ${cols}`);
      }
      for (let j = 0; j < cols; j++) {
        const v = row[j];
        if (typeof v !== "number" || !Number.isFinite(v)) {
          throw new TypeError(`non-finite value at row ${i}, column ${j}`);
        }
        data[i * cols + j] = v;
      }
    }
    return { rows, cols, precision: this.config.precision, data };
  }
}

/** Version string reported by the engine CLI. */
export function coreVersion(cli?: string[]): string {
  const command = cli ?? resolveConfig({}).cli;
  const [cmd, ...prefix] = command;
  const proc = spawnSync(cmd, [...prefix, "--version"], { encoding: "utf-8" });
  if (proc.error || proc.status !== 0) {
    throw new Error(`failed to query ${cmd} --version`);
  }
  return proc.stdout.trim();
}
