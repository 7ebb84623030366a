/**
 * Run configuration mirroring the engine's parameter rules, validated up
 * front so misconfiguration fails before a process is spawned.
 */

import type { Precision } from "./binary.js";

export interface TsneOptions {
  perplexity?: number;
  theta?: number;
  nIter?: number;
  earlyExaggeration?: number;
  exaggerationIters?: number;
  learningRate?: number;
  seed?: number;
  threads?: number;
  precision?: Precision;
  klEvery?: number;
  /** Command used to invoke the engine CLI; BHTSNE_CLI env overrides. */
  cli?: string[];
}

export interface ResolvedConfig {
  perplexity: number;
  theta: number;
  nIter: number;
  earlyExaggeration: number;
  exaggerationIters: number;
  learningRate: number;
  seed: number;
  threads: number | null;
  precision: Precision;
  klEvery: number;
  cli: string[];
}

function defaultCli(): string[] {
  const env = process.env.BHTSNE_CLI;
  if (env && env.trim().length > 0) {
    return env.trim().split(/\s+/);
  }
  return ["bhtsne"];
}

export function resolveConfig(options: TsneOptions = {}): ResolvedConfig {
  const cfg: ResolvedConfig = {
    perplexity: options.perplexity ?? 30.0,
    theta: options.theta ?? 0.5,
    nIter: options.nIter ?? 1000,
    earlyExaggeration: options.earlyExaggeration ?? 12.0,
    exaggerationIters: options.exaggerationIters ?? 250,
    learningRate: options.learningRate ?? 200.0,
    seed: options.seed ?? 0,
    threads: options.threads ?? null,
    precision: options.precision ?? "f64",
    klEvery: options.klEvery ?? 0,
    cli: options.cli ?? defaultCli(),
  };
  if (!(cfg.perplexity > 1)) {
    throw new RangeError(`perplexity must be > 1, got ${cfg.perplexity}`);
  }
  if (!(cfg.theta >= 0)) {
    throw new RangeError(`theta must be >= 0, got ${cfg.theta}`);
  }
  if (!(cfg.learningRate > 0)) {
    throw new RangeError(`learning rate must be > 0, got ${cfg.learningRate}`);
  }
  if (!Number.isInteger(cfg.nIter) || cfg.nIter < 0) {
    throw new RangeError(`nIter must be a non-negative integer, got ${cfg.nIter}`);
  }
  if (!Number.isInteger(cfg.exaggerationIters) || cfg.exaggerationIters < 0) {
    throw new RangeError(
      `exaggerationIters must be a non-negative integer, got ${cfg.exaggerationIters}`);
  }
  if (cfg.nIter < cfg.exaggerationIters) {
    throw new RangeError(
      `nIter (${cfg.nIter}) must cover the exaggeration phase (${cfg.exaggerationIters})`);
  }
  if (!(cfg.earlyExaggeration > 0)) {
    throw new RangeError(
      `early exaggeration must be > 0, got ${cfg.earlyExaggeration}`);
  }
  if (!Number.isInteger(cfg.seed)) {
    throw new RangeError(`seed must be an integer, got ${cfg.seed}`);
  }
  if (cfg.threads !== null && (!Number.isInteger(cfg.threads) || cfg.threads < 1)) {
    throw new RangeError(`threads must be >= 1, got ${cfg.threads}`);
  }
  if (cfg.precision !== "f32" && cfg.precision !== "f64") {
    throw new RangeError(`precision must be "f32" or "f64", got ${cfg.precision}`);
  }
  if (!Number.isInteger(cfg.klEvery) || cfg.klEvery < 0) {
    throw new RangeError(`klEvery must be a non-negative integer, got ${cfg.klEvery}`);
  }
  return cfg;
}

export function cliFlags(cfg: ResolvedConfig): string[] {
  const flags = [
    "--perplexity", String(cfg.perplexity),
    "--theta", String(cfg.theta),
    "--iters", String(cfg.nIter),
    "--exaggeration", String(cfg.earlyExaggeration),
    "--exaggeration-iters", String(cfg.exaggerationIters),
    "--learning-rate", String(cfg.learningRate),
    "--seed", String(cfg.seed),
    "--precision", cfg.precision,
  ];
  if (cfg.threads !== null) {
    flags.push("--threads", String(cfg.threads));
  }
  if (cfg.klEvery > 0) {
    flags.push("--kl-every", String(cfg.klEvery));
  }
  return flags;
}
