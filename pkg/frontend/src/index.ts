export { BarnesHutTSNE, coreVersion } from "./estimator.js";
export type { RunManifest, StageTiming } from "./estimator.js";
export { readMatrix, writeMatrix } from "./binary.js";
export type { Matrix, Precision } from "./binary.js";
export { resolveConfig } from "./config.js";
export type { TsneOptions, ResolvedConfig } from "./config.js";

export const VERSION = "0.1.0";
