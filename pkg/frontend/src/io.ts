/** File-level IO: NPY arrays with their JSON sidecars. */

import { mkdtempSync, readFileSync, renameSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { decodeNpy, encodeNpy, type NdArray } from "./npy.js";

export const AXIS_NAMES = ["row", "col", "slab"] as const;

export interface Sidecar {
  spacing: number[];
  axes: string[];
  [key: string]: unknown;
}

function sidecarPath(npyPath: string): string {
  return npyPath.replace(/\.npy$/, ".json");
}

export function readNpyFile(path: string): NdArray {
  return decodeNpy(readFileSync(path));
}

export function readSidecar(npyPath: string): Sidecar {
  const raw = JSON.parse(readFileSync(sidecarPath(npyPath), "utf8"));
  for (const key of ["spacing", "axes"]) {
    if (!(key in raw)) {
      throw new Error(`sidecar for ${npyPath} missing required key '${key}'`);
    }
  }
  return raw as Sidecar;
}

function atomicWrite(path: string, payload: Buffer | string) {
  const tmp = `${path}.${process.pid}.${Math.random().toString(36).slice(2)}`;
  writeFileSync(tmp, payload);
  renameSync(tmp, path);
}

export function writeNpyFile(
  path: string,
  arr: NdArray,
  sidecar: Omit<Sidecar, "axes"> & { axes?: string[] },
) {
  atomicWrite(path, encodeNpy(arr));
  const full: Sidecar = {
    axes: sidecar.axes ?? AXIS_NAMES.slice(0, arr.shape.length) as unknown as string[],
    ...sidecar,
  } as Sidecar;
  atomicWrite(
    sidecarPath(path),
    JSON.stringify(full, Object.keys(full).sort(), 2) + "\n",
  );
}

/** Run `fn` inside a fresh temp directory that is removed afterwards. */
export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "wsdist-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
