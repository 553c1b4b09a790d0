/**
 * Bindings for the wsdist toolkit.
 *
 * Losses and metrics are evaluated locally on typed arrays; the distance
 * transforms and point-annotation synthesis run through the `wsdist`
 * command line tool, crossing the boundary via strict NPY v1.0 files with
 * JSON sidecars.  No state is retained between calls.
 */

import { readdirSync } from "node:fs";
import { join } from "node:path";

import {
  AXIS_NAMES,
  readNpyFile,
  readSidecar,
  withTempDir,
  writeNpyFile,
} from "./io.js";
import type { NdArray } from "./npy.js";
import type { SignedMap } from "./ops.js";
import { runCli } from "./runner.js";

export {
  decodeNpy,
  encodeNpy,
  makeArray,
  NpyParseError,
  type Dtype,
  type NdArray,
} from "./npy.js";
export { readNpyFile, readSidecar, writeNpyFile } from "./io.js";
export {
  boundaryLoss,
  boundaryLossGrad,
  boundaryOf,
  dice,
  hd95,
  partialCrossEntropy,
  type SignedMap,
} from "./ops.js";

export type DistanceKind = "euc" | "geo" | "int" | "mbd";

export interface SignedMapOptions {
  spacing: number[];
  numClasses: number;
  kind?: DistanceKind;
  /** Intensity mix in [0, 1]; defaults to the kind's own value. */
  mix?: number;
  engine?: "exact" | "raster";
  connectivity?: "faces" | "full";
  /** Per-slice 2D maps or one volumetric map. */
  dims?: "2d" | "3d";
  /** Map for classes absent from the labels: zeros | ones | const:<v>. */
  absent?: string;
  rescale?: boolean;
  channel?: number;
}

function checkSpacing(spacing: number[], shape: number[]) {
  if (spacing.length !== shape.length) {
    throw new Error(
      `spacing has ${spacing.length} entries for a ${shape.length}D grid`,
    );
  }
}

/**
 * One signed distance map per foreground class, from weak point labels.
 */
export function signedMapsForAllClasses(
  image: NdArray,
  labels: NdArray,
  opts: SignedMapOptions,
): SignedMap[] {
  if (image.dtype !== "float32") throw new Error("image must be float32");
  if (labels.dtype !== "int32") throw new Error("labels must be int32");
  checkSpacing(opts.spacing, labels.shape);
  return withTempDir((dir) => {
    const img = join(dir, "image.npy");
    const lab = join(dir, "labels.npy");
    const out = join(dir, "maps");
    // the image may carry a leading channel axis; the grid axes come
    // from the label volume
    const axes = [...AXIS_NAMES.slice(0, labels.shape.length)];
    writeNpyFile(img, image, { spacing: opts.spacing, axes });
    writeNpyFile(lab, labels, {
      spacing: opts.spacing,
      axes,
      num_classes: opts.numClasses,
    });
    const args = ["distmap", img, lab, "--out", out];
    args.push("--kind", opts.kind ?? "geo");
    if (opts.mix !== undefined) args.push("--mix", String(opts.mix));
    if (opts.engine) args.push("--engine", opts.engine);
    if (opts.connectivity) args.push("--connectivity", opts.connectivity);
    if (opts.dims) args.push("--dims", opts.dims);
    if (opts.absent) args.push("--absent", opts.absent);
    if (opts.channel !== undefined) args.push("--channel", String(opts.channel));
    if (opts.rescale === false) args.push("--no-rescale");
    runCli(args);
    const maps: SignedMap[] = [];
    for (const name of readdirSync(out).sort()) {
      const m = name.match(/^sdm_class(\d+)\.npy$/);
      if (!m) continue;
      const path = join(out, name);
      const sidecar = readSidecar(path);
      maps.push({
        classId: Number(sidecar.class_id ?? m[1]),
        map: readNpyFile(path),
      });
    }
    maps.sort((a, b) => a.classId - b.classId);
    return maps;
  });
}

export interface GeneratePointsOptions {
  spacing: number[];
  numClasses: number;
  seed?: number;
  /** Ellipse semi-axes in pixels, (cols, rows). */
  ellipseSemiAxes?: [number, number];
}

/**
 * Synthesize weak point annotations from a full label volume.
 */
export function generatePoints(
  labels: NdArray,
  opts: GeneratePointsOptions,
): NdArray {
  if (labels.dtype !== "int32") throw new Error("labels must be int32");
  checkSpacing(opts.spacing, labels.shape);
  return withTempDir((dir) => {
    const lab = join(dir, "labels.npy");
    const out = join(dir, "weak.npy");
    writeNpyFile(lab, labels, {
      spacing: opts.spacing,
      num_classes: opts.numClasses,
    });
    const args = ["points", lab, "--out", out, "--seed", String(opts.seed ?? 0)];
    if (opts.ellipseSemiAxes) {
      args.push("--axes", opts.ellipseSemiAxes.join(","));
    }
    runCli(args);
    return readNpyFile(out);
  });
}
