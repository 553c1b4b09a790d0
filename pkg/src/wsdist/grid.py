"""Core grid data model: shapes, volumes, label maps and distance maps.

Conventions:
  * coordinates are (row, col) in 2D and (row, col, slab) in 3D, where the
    slab axis is the foot-head direction;
  * spacing is the physical step length (mm) per voxel along each axis;
  * all container types are immutable after construction and safe to share
    across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

PROB_SUM_TOL = 1e-6


class ConnectivityKind(enum.Enum):
    """Neighborhood used when walking the pixel/voxel graph."""

    FACES = "faces"  # 4-neighborhood in 2D, 6 in 3D
    FULL = "full"  # 8-neighborhood in 2D, 26 in 3D


@dataclass(frozen=True)
class GridShape:
    """Voxel counts plus physical spacing of a 2D or 3D grid."""

    dims: tuple[int, ...]
    spacing: tuple[float, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(s) for s in self.spacing)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        if len(dims) not in (2, 3):
            raise ValueError(f"grid must be 2D or 3D, got {len(dims)} dims")
        if len(spacing) != len(dims):
            raise ValueError("dims and spacing must have the same length")
        if any(d < 1 for d in dims):
            raise ValueError("every dim must be >= 1")
        if any(not (s > 0) for s in spacing):
            raise ValueError("every spacing must be > 0")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def nvox(self) -> int:
        return int(np.prod(self.dims))

    def contains(self, index) -> bool:
        return len(index) == self.ndim and all(
            0 <= c < d for c, d in zip(index, self.dims)
        )


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScalarVolume:
    """M-channel intensity grid, stored channel-major as (M, *dims)."""

    shape: GridShape
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == self.shape.ndim:
            data = data[np.newaxis]
        if data.ndim != self.shape.ndim + 1 or data.shape[1:] != self.shape.dims:
            raise ValueError(
                f"data shape {data.shape} incompatible with grid {self.shape.dims}"
            )
        if data.shape[0] < 1:
            raise ValueError("need at least one channel")
        if not np.all(np.isfinite(data)):
            raise ValueError("intensity values must be finite")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    def channel(self, c: int) -> np.ndarray:
        if not 0 <= c < self.channels:
            raise ValueError(f"channel {c} out of range [0, {self.channels})")
        return self.data[c]


@dataclass(frozen=True)
class LabelVolume:
    """Integer class map over a grid; class 0 is background."""

    shape: GridShape
    num_classes: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.integer):
            raise ValueError("labels must be integer-valued")
        data = data.astype(np.int32, copy=False)
        if data.shape != self.shape.dims:
            raise ValueError(
                f"label shape {data.shape} != grid {self.shape.dims}"
            )
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if data.size and (data.min() < 0 or data.max() >= self.num_classes):
            raise ValueError(
                f"labels must lie in [0, {self.num_classes - 1}]"
            )
        object.__setattr__(self, "data", _freeze(data))

    def mask(self, class_id: int) -> np.ndarray:
        return self.data == class_id

    def present_classes(self) -> list[int]:
        return sorted(int(k) for k in np.unique(self.data))


@dataclass(frozen=True)
class ProbabilityVolume:
    """Per-class probability grid, class-major (K+1, *dims), rows sum to 1."""

    shape: GridShape
    num_classes: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        expected = (self.num_classes,) + self.shape.dims
        if data.shape != expected:
            raise ValueError(f"prob shape {data.shape} != {expected}")
        if data.size and (data.min() < -0.0 or data.max() > 1.0 + PROB_SUM_TOL):
            raise ValueError("probabilities must lie in [0, 1]")
        sums = data.sum(axis=0)
        if not np.allclose(sums, 1.0, atol=PROB_SUM_TOL, rtol=0):
            raise ValueError("per-voxel probabilities must sum to 1")
        object.__setattr__(self, "data", _freeze(data))


@dataclass(frozen=True)
class DistanceMap:
    """Nonnegative distance from a source set; +inf marks unreachable."""

    shape: GridShape
    class_id: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != self.shape.dims:
            raise ValueError(f"map shape {data.shape} != grid {self.shape.dims}")
        finite = data[np.isfinite(data)]
        if np.any(np.isnan(data)) or (finite.size and finite.min() < 0):
            raise ValueError("distances must be >= 0 (or +inf)")
        object.__setattr__(self, "data", _freeze(data))


@dataclass(frozen=True)
class SignedDistanceMap:
    """Distance map negated inside the source label region."""

    shape: GridShape
    class_id: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != self.shape.dims:
            raise ValueError(f"map shape {data.shape} != grid {self.shape.dims}")
        if np.any(np.isnan(data)):
            raise ValueError("signed distances must not be NaN")
        object.__setattr__(self, "data", _freeze(data))


def neighbor_offsets(ndim: int, connectivity: ConnectivityKind) -> np.ndarray:
    """All neighbor offsets for the given connectivity, shape (n_off, ndim)."""
    if connectivity is ConnectivityKind.FACES:
        offs = []
        for a in range(ndim):
            for sign in (-1, 1):
                o = [0] * ndim
                o[a] = sign
                offs.append(o)
        return np.array(offs, dtype=np.int64)
    grids = np.meshgrid(*([[-1, 0, 1]] * ndim), indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    return offs[np.any(offs != 0, axis=1)].astype(np.int64)


def step_lengths(shape: GridShape, offsets: np.ndarray) -> np.ndarray:
    """Physical length of each offset: sqrt(sum (delta_a * spacing_a)^2)."""
    sp = np.asarray(shape.spacing, dtype=np.float64)
    return np.sqrt(((offsets * sp) ** 2).sum(axis=1))


def neighbors(index, shape: GridShape, connectivity: ConnectivityKind):
    """In-bounds neighbors of a voxel with their physical step lengths."""
    if not shape.contains(index):
        raise ValueError(f"index {tuple(index)} outside grid {shape.dims}")
    offs = neighbor_offsets(shape.ndim, connectivity)
    lens = step_lengths(shape, offs)
    out = []
    for o, ln in zip(offs, lens):
        nb = tuple(int(c + d) for c, d in zip(index, o))
        if shape.contains(nb):
            out.append((nb, float(ln)))
    return out


def boundary_of(
    labels: LabelVolume, class_id: int, connectivity: ConnectivityKind
) -> set[tuple[int, ...]]:
    """Voxels of class ``class_id`` adjacent to any voxel of another class.

    Voxels of the class lying on the image border always count as boundary
    (outside the image is treated as not belonging to the class).
    """
    if not 0 <= class_id < labels.num_classes:
        raise ValueError(f"class_id {class_id} out of range")
    mask = labels.mask(class_id)
    if not mask.any():
        return set()
    offs = neighbor_offsets(labels.shape.ndim, connectivity)
    boundary = np.zeros_like(mask)
    for o in offs:
        # shift mask by -o; out-of-range area counts as outside the class
        shifted = np.zeros_like(mask)
        src = tuple(
            slice(max(d, 0), dim + min(d, 0)) for d, dim in zip(o, mask.shape)
        )
        dst = tuple(
            slice(max(-d, 0), dim + min(-d, 0)) for d, dim in zip(o, mask.shape)
        )
        shifted[dst] = mask[src]
        boundary |= mask & ~shifted
    return {tuple(int(c) for c in idx) for idx in np.argwhere(boundary)}


def boundary_mask(
    labels: LabelVolume, class_id: int, connectivity: ConnectivityKind
) -> np.ndarray:
    """Same as :func:`boundary_of` but returned as a boolean array."""
    mask = np.zeros(labels.shape.dims, dtype=bool)
    for idx in boundary_of(labels, class_id, connectivity):
        mask[idx] = True
    return mask


def euclidean_offset_length(index_a, index_b, spacing) -> float:
    """Physical distance between two voxel centers."""
    return math.sqrt(
        sum(((a - b) * s) ** 2 for a, b, s in zip(index_a, index_b, spacing))
    )
