/**
 * Array-in / array-out wrappers over the morigeo toolkit.
 *
 * Every function validates its typed-array inputs, marshals them through
 * the toolkit's on-disk formats (16-bit PGM grids, MGF1 float fields),
 * drives the CLI, and returns the results in fresh caller-owned buffers.
 * Outputs are therefore bit-identical to what the CLI itself produces for
 * the same inputs.
 */

import { join } from "node:path";

import { decodeMgf, decodePgm, encodeMgf, encodePgm, Field } from "./formats.js";
import { readFile, runCli, withWorkDir, writeFile } from "./runner.js";

export { FormatError, decodeMgf, decodePgm, encodeMgf, encodePgm } from "./formats.js";
export type { Field, Grid } from "./formats.js";
export { CliFailure, cliBinary } from "./runner.js";

export interface GenTargetsOptions {
  alpha?: number;
  epsilon?: number;
  bandWidth?: number;
  seShape?: "square" | "diamond";
}

export interface SplitOptions {
  seedThreshold?: number;
  minSeedArea?: number;
  minInstanceArea?: number;
  boundarySuppression?: number;
  openingRadius?: number;
  connectivity?: "four" | "eight";
}

export interface LossResult {
  value: number;
  /** Gradient w.r.t. the differentiated input, same layout as that input. */
  grad: Float32Array;
}

function checkGrid(name: string, data: unknown, height: number, width: number): Uint16Array {
  if (!(data instanceof Uint16Array)) {
    throw new TypeError(`${name} must be a Uint16Array`);
  }
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 1 || width < 1) {
    throw new RangeError(`${name} dimensions must be positive integers`);
  }
  if (data.length !== height * width) {
    throw new RangeError(`${name} length ${data.length} != ${height}x${width}`);
  }
  return data;
}

function checkField(
  name: string,
  data: unknown,
  height: number,
  width: number,
  channels = 1,
): Float32Array {
  if (!(data instanceof Float32Array)) {
    throw new TypeError(`${name} must be a Float32Array`);
  }
  if (data.length !== height * width * channels) {
    throw new RangeError(
      `${name} length ${data.length} != ${height}x${width}x${channels}`,
    );
  }
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new RangeError(`${name} contains a non-finite value at index ${i}`);
    }
  }
  return data;
}

function lossValue(stdout: string): number {
  const doc = JSON.parse(stdout) as { value: number };
  if (typeof doc.value !== "number" || !Number.isFinite(doc.value)) {
    throw new TypeError("loss value missing from CLI output");
  }
  return doc.value;
}

/** Distance and boundary-band training targets for an instance grid. */
export function genTargets(
  inst: Uint16Array,
  height: number,
  width: number,
  options: GenTargetsOptions = {},
): { dist: Float32Array; bnd: Float32Array } {
  checkGrid("inst", inst, height, width);
  return withWorkDir((dir) => {
    const instPath = writeFile(dir, "inst.pgm", encodePgm({ height, width, data: inst }));
    const distPath = join(dir, "dist.mgf");
    const bndPath = join(dir, "bnd.mgf");
    const args = ["gen-targets", "--in", instPath, "--out-dist", distPath, "--out-bnd", bndPath];
    if (options.alpha !== undefined) args.push("--alpha", String(options.alpha));
    if (options.epsilon !== undefined) args.push("--epsilon", String(options.epsilon));
    if (options.bandWidth !== undefined) args.push("--band-width", String(options.bandWidth));
    if (options.seShape !== undefined) args.push("--se", options.seShape);
    runCli(args);
    return {
      dist: decodeMgf(readFile(distPath)).data,
      bnd: decodeMgf(readFile(bndPath)).data,
    };
  });
}

function runLoss(
  loss: "dist" | "boundary" | "disentangle",
  dir: string,
  args: string[],
): LossResult {
  const gradPath = join(dir, "grad.mgf");
  const stdout = runCli(["loss", "--loss", loss, ...args, "--out-grad", gradPath]);
  return { value: lossValue(stdout), grad: decodeMgf(readFile(gradPath)).data };
}

/** Balanced foreground/background MSE between a predicted and target field. */
export function balWmse(
  pred: Float32Array,
  target: Float32Array,
  inst: Uint16Array,
  height: number,
  width: number,
): LossResult {
  checkField("pred", pred, height, width);
  checkField("target", target, height, width);
  checkGrid("inst", inst, height, width);
  return withWorkDir((dir) => {
    const predPath = writeFile(dir, "pred.mgf", encodeMgf(asField(pred, height, width)));
    const targetPath = writeFile(dir, "target.mgf", encodeMgf(asField(target, height, width)));
    const instPath = writeFile(dir, "inst.pgm", encodePgm({ height, width, data: inst }));
    return runLoss("dist", dir, [
      "--pred", predPath,
      "--target", targetPath,
      "--inst", instPath,
    ]);
  });
}

/** Reweighted binary cross-entropy on logits; omit posWeight for the auto ratio. */
export function boundaryBce(
  logits: Float32Array,
  target: Float32Array,
  height: number,
  width: number,
  posWeight?: number,
): LossResult {
  checkField("logits", logits, height, width);
  checkField("target", target, height, width);
  return withWorkDir((dir) => {
    const logitsPath = writeFile(dir, "logits.mgf", encodeMgf(asField(logits, height, width)));
    const targetPath = writeFile(dir, "target.mgf", encodeMgf(asField(target, height, width)));
    const args = ["--logits", logitsPath, "--target", targetPath];
    if (posWeight !== undefined) args.push("--pos-weight", String(posWeight));
    return runLoss("boundary", dir, args);
  });
}

export interface DisentangleOptions {
  neighborDistance?: number;
  lambdaSep?: number;
}

/** Prototype pull plus neighbor-orthogonality penalty over raw embeddings. */
export function disentangleLoss(
  embeddings: Float32Array,
  height: number,
  width: number,
  dim: number,
  inst: Uint16Array,
  options: DisentangleOptions = {},
): LossResult {
  if (!Number.isInteger(dim) || dim < 2) {
    throw new RangeError("embeddings channel count must be an integer >= 2");
  }
  checkField("embeddings", embeddings, height, width, dim);
  checkGrid("inst", inst, height, width);
  return withWorkDir((dir) => {
    const embPath = writeFile(
      dir,
      "emb.mgf",
      encodeMgf({ height, width, channels: dim, data: embeddings }),
    );
    const instPath = writeFile(dir, "inst.pgm", encodePgm({ height, width, data: inst }));
    const args = ["--embeddings", embPath, "--inst", instPath];
    if (options.neighborDistance !== undefined) {
      args.push("--neighbor-distance", String(options.neighborDistance));
    }
    if (options.lambdaSep !== undefined) args.push("--lambda-sep", String(options.lambdaSep));
    return runLoss("disentangle", dir, args);
  });
}

/** Field-guided decomposition of one class of a semantic mask into instances. */
export function geometrySplit(
  sem: Uint16Array,
  height: number,
  width: number,
  classId: number,
  dist: Float32Array,
  bnd: Float32Array,
  options: SplitOptions = {},
): { ids: Uint16Array; numInstances: number } {
  checkGrid("sem", sem, height, width);
  checkField("dist", dist, height, width);
  checkField("bnd", bnd, height, width);
  if (!Number.isInteger(classId) || classId < 1 || classId > 65535) {
    throw new RangeError("classId must be an integer in [1, 65535]");
  }
  return withWorkDir((dir) => {
    const semPath = writeFile(dir, "sem.pgm", encodePgm({ height, width, data: sem }));
    const distPath = writeFile(dir, "dist.mgf", encodeMgf(asField(dist, height, width)));
    const bndPath = writeFile(dir, "bnd.mgf", encodeMgf(asField(bnd, height, width)));
    const outPath = join(dir, "inst.pgm");
    const args = [
      "split",
      "--method", "geometry",
      "--in", semPath,
      "--class", String(classId),
      "--dist", distPath,
      "--bnd", bndPath,
      "--out", outPath,
    ];
    if (options.seedThreshold !== undefined) {
      args.push("--seed-threshold", String(options.seedThreshold));
    }
    if (options.minSeedArea !== undefined) {
      args.push("--min-seed-area", String(options.minSeedArea));
    }
    if (options.minInstanceArea !== undefined) {
      args.push("--min-instance-area", String(options.minInstanceArea));
    }
    if (options.boundarySuppression !== undefined) {
      args.push("--boundary-suppression", String(options.boundarySuppression));
    }
    if (options.openingRadius !== undefined) {
      args.push("--opening-radius", String(options.openingRadius));
    }
    if (options.connectivity !== undefined) {
      args.push("--connectivity", options.connectivity);
    }
    runCli(args);
    const grid = decodePgm(readFile(outPath));
    let max = 0;
    for (const v of grid.data) if (v > max) max = v;
    return { ids: grid.data, numInstances: max };
  });
}

function asField(data: Float32Array, height: number, width: number): Field {
  return { height, width, channels: 1, data };
}
