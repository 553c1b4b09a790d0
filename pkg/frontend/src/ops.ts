/**
 * Array-in/array-out numerical operations: losses and evaluation metrics.
 *
 * These are computed locally (double precision accumulation over the
 * float32 inputs) and match the companion library's definitions:
 * full-connectivity boundaries with image borders counting as boundary,
 * nearest-rank percentiles, cross-entropy over annotated voxels only.
 */

import { elementCount, makeArray, type NdArray } from "./npy.js";

export interface SignedMap {
  classId: number;
  map: NdArray;
}

function assertSameShape(a: number[], b: number[], what: string) {
  if (a.length !== b.length || a.some((d, i) => d !== b[i])) {
    throw new Error(`${what}: shape [${a}] does not match [${b}]`);
  }
}

function gridShape(probs: NdArray): number[] {
  return probs.shape.slice(1);
}

function checkFinite(map: NdArray) {
  for (const v of map.data) {
    if (!Number.isFinite(v)) {
      throw new Error("signed map contains non-finite values");
    }
  }
}

/** Sum over classes and voxels of probability times signed distance. */
export function boundaryLoss(probs: NdArray, maps: SignedMap[]): number {
  const dims = gridShape(probs);
  const numClasses = probs.shape[0];
  const ids = new Set(maps.map((m) => m.classId));
  if (
    ids.size !== maps.length ||
    maps.length !== numClasses - 1 ||
    [...ids].some((k) => k < 1 || k >= numClasses)
  ) {
    throw new Error("signed map class ids do not cover the expected classes");
  }
  const n = elementCount(dims);
  let total = 0;
  for (const { classId, map } of maps) {
    assertSameShape(map.shape, dims, "signed map");
    checkFinite(map);
    const p = probs.data;
    const base = classId * n;
    for (let i = 0; i < n; i++) total += p[base + i] * map.data[i];
  }
  return total;
}

/** Gradient w.r.t. the probabilities: the maps themselves, stacked. */
export function boundaryLossGrad(maps: SignedMap[]): NdArray {
  if (maps.length === 0) throw new Error("need at least one signed map");
  const dims = maps[0].map.shape;
  const n = elementCount(dims);
  const out = makeArray("float32", [maps.length, ...dims]);
  maps.forEach(({ map }, i) => {
    assertSameShape(map.shape, dims, "signed map");
    checkFinite(map);
    (out.data as Float32Array).set(map.data as Float32Array, i * n);
  });
  return out;
}

export interface CrossEntropyOptions {
  foregroundOnly?: boolean;
  clampEps?: number;
}

/** Cross-entropy over annotated voxels only; unannotated contribute 0. */
export function partialCrossEntropy(
  probs: NdArray,
  labels: NdArray,
  opts: CrossEntropyOptions = {},
): number {
  const { foregroundOnly = true, clampEps = 1e-10 } = opts;
  assertSameShape(labels.shape, gridShape(probs), "labels");
  const numClasses = probs.shape[0];
  const n = elementCount(labels.shape);
  const first = foregroundOnly ? 1 : 0;
  let total = 0;
  for (let i = 0; i < n; i++) {
    const k = labels.data[i];
    if (k >= numClasses) throw new Error(`label ${k} out of range`);
    if (k < first) continue;
    total += -Math.log(Math.max(probs.data[k * n + i], clampEps));
  }
  return total;
}

/** 2|G∩S| / (|G|+|S|); 1.0 when both sets are empty. */
export function dice(gt: NdArray, pred: NdArray, classId: number): number {
  assertSameShape(gt.shape, pred.shape, "prediction");
  let g = 0;
  let s = 0;
  let inter = 0;
  for (let i = 0; i < gt.data.length; i++) {
    const a = gt.data[i] === classId;
    const b = pred.data[i] === classId;
    if (a) g++;
    if (b) s++;
    if (a && b) inter++;
  }
  return g + s === 0 ? 1.0 : (2 * inter) / (g + s);
}

/** All 3^d-1 offsets of the full neighborhood. */
function fullOffsets(ndim: number): number[][] {
  const out: number[][] = [];
  const off = new Array(ndim).fill(-1);
  for (;;) {
    if (off.some((v) => v !== 0)) out.push([...off]);
    let a = ndim - 1;
    while (a >= 0 && off[a] === 1) off[a--] = -1;
    if (a < 0) break;
    off[a]++;
  }
  return out;
}

/**
 * Voxels of a class adjacent (full connectivity) to any other class;
 * class voxels on the image border always count as boundary.
 */
export function boundaryOf(
  labels: NdArray,
  classId: number,
): number[][] {
  const dims = labels.shape;
  const ndim = dims.length;
  const strides = new Array(ndim).fill(1);
  for (let a = ndim - 2; a >= 0; a--) strides[a] = strides[a + 1] * dims[a + 1];
  const offs = fullOffsets(ndim);
  const out: number[][] = [];
  const idx = new Array(ndim).fill(0);
  const n = elementCount(dims);
  for (let flat = 0; flat < n; flat++) {
    if (labels.data[flat] === classId) {
      let isBoundary = false;
      for (const off of offs) {
        let nb = flat;
        let inBounds = true;
        for (let a = 0; a < ndim; a++) {
          const c = idx[a] + off[a];
          if (c < 0 || c >= dims[a]) {
            inBounds = false;
            break;
          }
          nb += off[a] * strides[a];
        }
        if (!inBounds || labels.data[nb] !== classId) {
          isBoundary = true;
          break;
        }
      }
      if (isBoundary) out.push([...idx]);
    }
    let a = ndim - 1;
    while (a >= 0 && ++idx[a] === dims[a]) idx[a--] = 0;
  }
  return out;
}

function nearestRank(sorted: number[], q: number): number {
  const rank = Math.ceil((q / 100) * sorted.length);
  return sorted[Math.max(rank - 1, 0)];
}

function directedNearest(from: number[][], to: number[][], spacing: number[]) {
  return from.map((p) => {
    let best = Infinity;
    for (const q of to) {
      let d2 = 0;
      for (let a = 0; a < p.length; a++) {
        const d = (p[a] - q[a]) * spacing[a];
        d2 += d * d;
      }
      if (d2 < best) best = d2;
    }
    return Math.sqrt(best);
  });
}

/**
 * Max of the two directed 95th-percentile surface distances in physical
 * units; NaN when either boundary set is empty.
 */
export function hd95(
  gt: NdArray,
  pred: NdArray,
  classId: number,
  spacing: number[],
): number {
  assertSameShape(gt.shape, pred.shape, "prediction");
  const bg = boundaryOf(gt, classId);
  const bs = boundaryOf(pred, classId);
  if (bg.length === 0 || bs.length === 0) return NaN;
  const gToS = directedNearest(bg, bs, spacing).sort((a, b) => a - b);
  const sToG = directedNearest(bs, bg, spacing).sort((a, b) => a - b);
  return Math.max(nearestRank(gToS, 95), nearestRank(sToG, 95));
}
