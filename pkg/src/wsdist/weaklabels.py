"""Synthetic point annotations and the absent-class map policy.

Point annotations are produced per 2D slice: for every foreground class
present in a slice, one center is drawn uniformly over the class mask and a
small axis-aligned ellipse around it is intersected with the mask.  The RNG
is numpy's PCG64; per-(slice, class) streams are derived from the seed via
``numpy.random.SeedSequence`` so results do not depend on scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import label as cc_label

from .grid import GridShape, LabelVolume, SignedDistanceMap


@dataclass(frozen=True)
class PointAnnotationConfig:
    # semi-axes in pixels: (cols, rows), long axis along cols
    ellipse_semi_axes: tuple[float, float] = (4.0, 2.0)
    rng_seed: int = 0
    per_slice: bool = True

    def __post_init__(self):
        a, b = self.ellipse_semi_axes
        if not (a > 0 and b > 0):
            raise ValueError("ellipse semi-axes must be > 0")


@dataclass(frozen=True)
class AbsentClassPolicy:
    """Constant map substituted when a class has no annotation."""

    mode: str = "ones"  # zeros | ones | constant
    value: float = 1.0

    def __post_init__(self):
        if self.mode not in ("zeros", "ones", "constant"):
            raise ValueError(f"unknown absent-class mode {self.mode!r}")
        if self.mode == "constant" and not (
            np.isfinite(self.value) and self.value >= 0
        ):
            raise ValueError("constant value must be finite and >= 0")

    @property
    def fill(self) -> float:
        return {"zeros": 0.0, "ones": 1.0, "constant": float(self.value)}[self.mode]

    @classmethod
    def parse(cls, text: str) -> "AbsentClassPolicy":
        if text in ("zeros", "ones"):
            return cls(mode=text)
        if text.startswith("const:"):
            return cls(mode="constant", value=float(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse absent-class policy {text!r}")


def absent_class_map(
    shape: GridShape, policy: AbsentClassPolicy, class_id: int = 0
) -> SignedDistanceMap:
    """Constant (positive) map for a class with no annotated voxels."""
    data = np.full(shape.dims, policy.fill)
    return SignedDistanceMap(shape, class_id, data)


def ellipse_offsets(semi_axes: tuple[float, float]) -> np.ndarray:
    """Lattice offsets (drow, dcol) inside the ellipse, long axis along cols."""
    a, b = float(semi_axes[0]), float(semi_axes[1])  # a: cols, b: rows
    rr = int(np.floor(b))
    cc = int(np.floor(a))
    offs = []
    for dr in range(-rr, rr + 1):
        for dc in range(-cc, cc + 1):
            if (dc / a) ** 2 + (dr / b) ** 2 <= 1.0:
                offs.append((dr, dc))
    return np.array(offs, dtype=np.int64)


def _stamp(mask: np.ndarray, out_slice: np.ndarray, k: int, r0: int, c0: int, offs):
    """Rasterize the clipped ellipse at (r0, c0), intersect with the class
    mask and keep the component containing the center so every annotation is
    a single connected blob even on fragmented masks."""
    h, w = mask.shape
    rr = r0 + offs[:, 0]
    cc = c0 + offs[:, 1]
    keep = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    rr, cc = rr[keep], cc[keep]
    dot = np.zeros_like(mask)
    dot[rr, cc] = True
    dot &= mask
    comp, _ = cc_label(dot, structure=np.ones((3, 3), dtype=int))
    dot = comp == comp[r0, c0]
    out_slice[dot] = k


def _annotate_slice(slice_labels, out_slice, num_classes, offs, seed_key):
    """Place one clipped-ellipse annotation per present foreground class."""
    for k in range(1, num_classes):
        mask = slice_labels == k
        voxels = np.argwhere(mask)
        if voxels.size == 0:
            continue
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed_key + [k]))
        )
        r0, c0 = voxels[rng.integers(len(voxels))]
        _stamp(mask, out_slice, k, int(r0), int(c0), offs)


def generate_points(
    full_labels: LabelVolume, cfg: PointAnnotationConfig
) -> LabelVolume:
    """Synthesize point annotations from full labels; output is a subset of
    the input class masks and deterministic given the seed."""
    if full_labels.num_classes < 2:
        raise ValueError("need at least one foreground class")
    offs = ellipse_offsets(cfg.ellipse_semi_axes)
    seed = int(cfg.rng_seed) & 0xFFFFFFFFFFFFFFFF
    out = np.zeros(full_labels.shape.dims, dtype=np.int32)
    if full_labels.shape.ndim == 2:
        _annotate_slice(
            full_labels.data, out, full_labels.num_classes, offs, [seed, 0]
        )
    elif cfg.per_slice:
        for z in range(full_labels.shape.dims[2]):
            _annotate_slice(
                full_labels.data[:, :, z],
                out[:, :, z],
                full_labels.num_classes,
                offs,
                [seed, z],
            )
    else:
        # one annotation per class for the whole volume, placed in the
        # slice of the sampled center
        for k in range(1, full_labels.num_classes):
            voxels = np.argwhere(full_labels.data == k)
            if voxels.size == 0:
                continue
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence([seed, k]))
            )
            r0, c0, z0 = (int(v) for v in voxels[rng.integers(len(voxels))])
            mask = full_labels.data[:, :, z0] == k
            _stamp(mask, out[:, :, z0], k, r0, c0, offs)
    return LabelVolume(full_labels.shape, full_labels.num_classes, out)
