/**
 * Cross-path equality: every exposed function must reproduce, bit for bit,
 * what a direct CLI invocation yields for the same inputs (10 randomized
 * cases per function), plus the hand-case and error contracts.
 */
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  balWmse,
  boundaryBce,
  decodeMgf,
  decodePgm,
  disentangleLoss,
  encodeMgf,
  encodePgm,
  genTargets,
  geometrySplit,
} from "../src/index.js";
import { readFile, runCli, withWorkDir, writeFile } from "../src/runner.js";

const CASES = 10;
const LONG = 180_000;

/** Small deterministic PRNG so every run sees the same random cases. */
function prng(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (s + 0x6d2b79f5) >>> 0;
    let t = s;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

interface Layout {
  height: number;
  width: number;
  inst: Uint16Array;
}

/** Disjoint rectangles with ids in raster order; gapped or touching pairs. */
function randomInstances(rand: () => number, touching: boolean): Layout {
  const height = 10 + Math.floor(rand() * 8);
  const width = 24 + Math.floor(rand() * 8);
  const inst = new Uint16Array(height * width);
  const top = 2 + Math.floor(rand() * 3);
  const bh = 4 + Math.floor(rand() * (height - top - 5));
  const bw = 5 + Math.floor(rand() * 4);
  const gap = touching ? 0 : 2 + Math.floor(rand() * 2);
  let x = 1 + Math.floor(rand() * 2);
  let id = 1;
  while (x + bw + 1 < width && id <= 3) {
    for (let y = top; y < top + bh; y++) {
      for (let dx = 0; dx < bw; dx++) inst[y * width + x + dx] = id;
    }
    id++;
    x += bw + gap;
  }
  return { height, width, inst };
}

function randomField(
  rand: () => number,
  n: number,
  lo: number,
  hi: number,
): Float32Array {
  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) out[i] = Math.fround(lo + rand() * (hi - lo));
  return out;
}

function expectBytesEqual(a: Uint8Array, b: Uint8Array): void {
  expect(a.length).toBe(b.length);
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) {
      throw new Error(`byte mismatch at ${i}: ${a[i]} != ${b[i]}`);
    }
  }
}

function f32Bytes(data: Float32Array): Uint8Array {
  return new Uint8Array(data.buffer, data.byteOffset, data.byteLength);
}

describe("cross-path equality against direct CLI runs", () => {
  it(
    "genTargets matches gen-targets output byte for byte",
    () => {
      for (let k = 0; k < CASES; k++) {
        const rand = prng(1000 + k);
        const { height, width, inst } = randomInstances(rand, k % 2 === 0);
        const viaBindings = genTargets(inst, height, width, {
          alpha: 3,
          bandWidth: 2,
        });
        const manual = withWorkDir((dir) => {
          const instPath = writeFile(dir, "i.pgm", encodePgm({ height, width, data: inst }));
          runCli([
            "gen-targets", "--in", instPath, "--alpha", "3", "--band-width", "2",
            "--out-dist", join(dir, "d.mgf"), "--out-bnd", join(dir, "b.mgf"),
          ]);
          return {
            dist: readFile(join(dir, "d.mgf")),
            bnd: readFile(join(dir, "b.mgf")),
          };
        });
        expectBytesEqual(f32Bytes(viaBindings.dist), f32Bytes(decodeMgf(manual.dist).data));
        expectBytesEqual(f32Bytes(viaBindings.bnd), f32Bytes(decodeMgf(manual.bnd).data));
      }
    },
    LONG,
  );

  it(
    "balWmse matches the loss subcommand",
    () => {
      for (let k = 0; k < CASES; k++) {
        const rand = prng(2000 + k);
        const { height, width, inst } = randomInstances(rand, false);
        const pred = randomField(rand, height * width, -0.2, 1.2);
        const target = randomField(rand, height * width, 0, 1);
        const viaBindings = balWmse(pred, target, inst, height, width);
        const manual = withWorkDir((dir) => {
          const predPath = writeFile(
            dir, "p.mgf", encodeMgf({ height, width, channels: 1, data: pred }),
          );
          const targetPath = writeFile(
            dir, "t.mgf", encodeMgf({ height, width, channels: 1, data: target }),
          );
          const instPath = writeFile(dir, "i.pgm", encodePgm({ height, width, data: inst }));
          const stdout = runCli([
            "loss", "--loss", "dist", "--pred", predPath, "--target", targetPath,
            "--inst", instPath, "--out-grad", join(dir, "g.mgf"),
          ]);
          return { stdout, grad: readFile(join(dir, "g.mgf")) };
        });
        expect(viaBindings.value).toBe(JSON.parse(manual.stdout).value);
        expectBytesEqual(f32Bytes(viaBindings.grad), f32Bytes(decodeMgf(manual.grad).data));
      }
    },
    LONG,
  );

  it(
    "boundaryBce matches the loss subcommand",
    () => {
      for (let k = 0; k < CASES; k++) {
        const rand = prng(3000 + k);
        const height = 6 + Math.floor(rand() * 8);
        const width = 6 + Math.floor(rand() * 8);
        const logits = randomField(rand, height * width, -3, 3);
        const target = new Float32Array(height * width);
        for (let i = 0; i < target.length; i++) target[i] = rand() < 0.3 ? 1 : 0;
        const viaBindings = boundaryBce(logits, target, height, width);
        const manual = withWorkDir((dir) => {
          const logitsPath = writeFile(
            dir, "z.mgf", encodeMgf({ height, width, channels: 1, data: logits }),
          );
          const targetPath = writeFile(
            dir, "y.mgf", encodeMgf({ height, width, channels: 1, data: target }),
          );
          const stdout = runCli([
            "loss", "--loss", "boundary", "--logits", logitsPath,
            "--target", targetPath, "--out-grad", join(dir, "g.mgf"),
          ]);
          return { stdout, grad: readFile(join(dir, "g.mgf")) };
        });
        expect(viaBindings.value).toBe(JSON.parse(manual.stdout).value);
        expectBytesEqual(f32Bytes(viaBindings.grad), f32Bytes(decodeMgf(manual.grad).data));
      }
    },
    LONG,
  );

  it(
    "disentangleLoss matches the loss subcommand",
    () => {
      for (let k = 0; k < CASES; k++) {
        const rand = prng(4000 + k);
        const { height, width, inst } = randomInstances(rand, k % 2 === 1);
        const dim = 2 + Math.floor(rand() * 3);
        const emb = new Float32Array(height * width * dim);
        for (let p = 0; p < height * width; p++) {
          emb[p * dim] = Math.fround(0.5 + rand() * 2.0); // keeps norms bounded away from zero
          for (let c = 1; c < dim; c++) emb[p * dim + c] = Math.fround(rand() * 2 - 1);
        }
        const viaBindings = disentangleLoss(emb, height, width, dim, inst, {
          neighborDistance: 6,
          lambdaSep: 1.25,
        });
        const manual = withWorkDir((dir) => {
          const embPath = writeFile(
            dir, "e.mgf", encodeMgf({ height, width, channels: dim, data: emb }),
          );
          const instPath = writeFile(dir, "i.pgm", encodePgm({ height, width, data: inst }));
          const stdout = runCli([
            "loss", "--loss", "disentangle", "--embeddings", embPath, "--inst", instPath,
            "--neighbor-distance", "6", "--lambda-sep", "1.25",
            "--out-grad", join(dir, "g.mgf"),
          ]);
          return { stdout, grad: readFile(join(dir, "g.mgf")) };
        });
        expect(viaBindings.value).toBe(JSON.parse(manual.stdout).value);
        expectBytesEqual(f32Bytes(viaBindings.grad), f32Bytes(decodeMgf(manual.grad).data));
      }
    },
    LONG,
  );

  it(
    "geometrySplit matches the split subcommand",
    () => {
      for (let k = 0; k < CASES; k++) {
        const rand = prng(5000 + k);
        const { height, width, inst } = randomInstances(rand, true);
        const sem = new Uint16Array(inst.length);
        for (let i = 0; i < inst.length; i++) sem[i] = inst[i] > 0 ? 1 : 0;
        const { dist, bnd } = genTargets(inst, height, width);
        const viaBindings = geometrySplit(sem, height, width, 1, dist, bnd);
        const manual = withWorkDir((dir) => {
          const semPath = writeFile(dir, "s.pgm", encodePgm({ height, width, data: sem }));
          const distPath = writeFile(
            dir, "d.mgf", encodeMgf({ height, width, channels: 1, data: dist }),
          );
          const bndPath = writeFile(
            dir, "b.mgf", encodeMgf({ height, width, channels: 1, data: bnd }),
          );
          runCli([
            "split", "--method", "geometry", "--in", semPath, "--class", "1",
            "--dist", distPath, "--bnd", bndPath, "--out", join(dir, "o.pgm"),
          ]);
          return readFile(join(dir, "o.pgm"));
        });
        const manualGrid = decodePgm(manual);
        expect(Array.from(viaBindings.ids)).toEqual(Array.from(manualGrid.data));
        let max = 0;
        for (const v of manualGrid.data) if (v > max) max = v;
        expect(viaBindings.numInstances).toBe(max);
      }
    },
    LONG,
  );
});

describe("hand cases and error contracts", () => {
  it(
    "single-pixel instance yields an all-zero distance field",
    () => {
      const height = 5;
      const width = 5;
      const inst = new Uint16Array(height * width);
      inst[2 * width + 2] = 1;
      const { dist, bnd } = genTargets(inst, height, width);
      expect(Math.max(...dist)).toBe(0);
      expect(bnd.some((v) => v === 1)).toBe(true);
    },
    LONG,
  );

  it(
    "perfect distance prediction gives zero value and zero gradient",
    () => {
      const { height, width, inst } = randomInstances(prng(9), false);
      const target = randomField(prng(10), height * width, 0, 1);
      const result = balWmse(target.slice(), target, inst, height, width);
      expect(result.value).toBe(0);
      expect(result.grad.every((v) => v === 0)).toBe(true);
    },
    LONG,
  );

  it("wrong dtype raises an exception naming the argument", () => {
    const bad = new Float32Array(25);
    expect(() =>
      genTargets(bad as unknown as Uint16Array, 5, 5),
    ).toThrow(/inst/);
  });

  it("NaN input raises before any CLI call and never yields a NaN result", () => {
    const logits = new Float32Array(16);
    logits[3] = Number.NaN;
    const target = new Float32Array(16);
    expect(() => boundaryBce(logits, target, 4, 4)).toThrow(/logits.*non-finite/);
  });

  it("shape mismatch raises with the argument name", () => {
    const inst = new Uint16Array(12);
    expect(() => genTargets(inst, 5, 5)).toThrow(/inst length/);
  });
});
