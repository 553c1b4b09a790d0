"""Distance map engines and signed-map construction.

Three engines:
  * exact best-first (Dijkstra) for the additive kinds (euclidean, geodesic,
    intensity), delegated to ``scipy.sparse.csgraph`` on an explicitly built
    voxel graph;
  * iterated directional raster sweeps for the same additive kinds (numba
    kernel), converging to the exact values at fixed point;
  * best-first interval propagation for the minimum barrier distance, an
    upper-bound approximation that settles one (min, max) interval per voxel.

Engines consume intensities as given; the 0-255 rescale is applied by the
per-class pipeline when the config asks for it.
"""

from __future__ import annotations

import enum
import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .grid import (
    ConnectivityKind,
    DistanceMap,
    GridShape,
    LabelVolume,
    ScalarVolume,
    SignedDistanceMap,
    boundary_of,
    neighbor_offsets,
    step_lengths,
)
from .weaklabels import AbsentClassPolicy, absent_class_map


class DistanceKind(enum.Enum):
    EUCLIDEAN = "euclidean"
    GEODESIC = "geodesic"
    INTENSITY = "intensity"
    MBD = "mbd"


ADDITIVE_KINDS = (
    DistanceKind.EUCLIDEAN,
    DistanceKind.GEODESIC,
    DistanceKind.INTENSITY,
)

_DEFAULT_MIX = {
    DistanceKind.EUCLIDEAN: 0.0,
    DistanceKind.GEODESIC: 0.5,
    DistanceKind.INTENSITY: 1.0,
    DistanceKind.MBD: 0.0,
}


@dataclass(frozen=True)
class TransformConfig:
    """Which distance to compute and how to mix intensity vs space."""

    kind: DistanceKind = DistanceKind.GEODESIC
    intensity_mix: float | None = None
    connectivity: ConnectivityKind = ConnectivityKind.FULL
    channel: int = 0
    rescale_to_255: bool = True

    def __post_init__(self):
        mix = self.intensity_mix
        if mix is None:
            mix = _DEFAULT_MIX[self.kind]
        mix = float(mix)
        if not 0.0 <= mix <= 1.0:
            raise ValueError("intensity_mix must lie in [0, 1]")
        if self.kind is DistanceKind.EUCLIDEAN and mix != 0.0:
            raise ValueError("euclidean kind requires intensity_mix == 0")
        if self.kind is DistanceKind.INTENSITY and mix != 1.0:
            raise ValueError("intensity kind requires intensity_mix == 1")
        if self.channel < 0:
            raise ValueError("channel must be >= 0")
        object.__setattr__(self, "intensity_mix", mix)


@dataclass(frozen=True)
class RasterConfig:
    """Sweep iteration budget for the raster engine."""

    max_passes: int = 4
    convergence_tol: float = 0.0

    def __post_init__(self):
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be >= 0")


def step_cost(intensity_a: float, intensity_b: float, step_length: float, mix: float) -> float:
    """Weighted-L1 step cost: mix*|dI| + (1-mix)*step_length."""
    if step_length <= 0:
        raise ValueError("step_length must be > 0")
    if not 0.0 <= mix <= 1.0:
        raise ValueError("mix must lie in [0, 1]")
    return mix * abs(intensity_a - intensity_b) + (1.0 - mix) * step_length


def _neighbor_table(shape: GridShape, connectivity: ConnectivityKind):
    """Flat neighbor indices per voxel, (n, K) with -1 for out of bounds."""
    offs = neighbor_offsets(shape.ndim, connectivity)
    steps = step_lengths(shape, offs)
    dims = np.array(shape.dims, dtype=np.int64)
    n = shape.nvox
    coords = np.stack(
        np.unravel_index(np.arange(n), shape.dims), axis=1
    ).astype(np.int64)
    nbr = np.full((n, len(offs)), -1, dtype=np.int64)
    for k, o in enumerate(offs):
        c = coords + o
        valid = np.all((c >= 0) & (c < dims), axis=1)
        nbr[valid, k] = np.ravel_multi_index(
            tuple(c[valid].T), shape.dims
        )
    return nbr, steps


def _check_engine_inputs(image: ScalarVolume, sources, cfg: TransformConfig):
    if not sources:
        raise ValueError("no sources")
    if cfg.channel >= image.channels:
        raise ValueError(f"channel {cfg.channel} out of range")
    intens = image.channel(cfg.channel)
    if not np.all(np.isfinite(intens)):
        raise ValueError("image contains non-finite intensities")
    for s in sources:
        if not image.shape.contains(s):
            raise ValueError(f"source {s} outside grid")
    return intens


def _source_flats(shape: GridShape, sources) -> np.ndarray:
    flats = [np.ravel_multi_index(tuple(s), shape.dims) for s in sources]
    return np.array(sorted(int(f) for f in flats), dtype=np.int64)


def distance_map_exact(
    image: ScalarVolume, sources, cfg: TransformConfig, class_id: int = 0
) -> DistanceMap:
    """Exact multi-source distance map under the configured cost model."""
    intens = _check_engine_inputs(image, sources, cfg)
    srcs = _source_flats(image.shape, sources)
    if cfg.kind is DistanceKind.MBD:
        dist = _mbd_interval_engine(intens.ravel(), image.shape, cfg.connectivity, srcs)
    else:
        dist = _dijkstra_engine(
            intens.ravel(), image.shape, cfg.connectivity, srcs, cfg.intensity_mix
        )
    return DistanceMap(image.shape, class_id, dist.reshape(image.shape.dims))


def _dijkstra_engine(
    img_flat: np.ndarray,
    shape: GridShape,
    connectivity: ConnectivityKind,
    srcs: np.ndarray,
    mix: float,
) -> np.ndarray:
    nbr, steps = _neighbor_table(shape, connectivity)
    n = img_flat.size
    rows, cols, wts = [], [], []
    for k in range(nbr.shape[1]):
        j = nbr[:, k]
        valid = j >= 0
        i = np.nonzero(valid)[0]
        jj = j[valid]
        w = mix * np.abs(img_flat[i] - img_flat[jj]) + (1.0 - mix) * steps[k]
        rows.append(i)
        cols.append(jj)
        wts.append(w)
    graph = csr_matrix(
        (np.concatenate(wts), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    dist = dijkstra(graph, directed=True, indices=srcs, min_only=True)
    dist[srcs] = 0.0
    return np.asarray(dist, dtype=np.float64)


def _mbd_interval_engine(
    img_flat: np.ndarray,
    shape: GridShape,
    connectivity: ConnectivityKind,
    srcs: np.ndarray,
) -> np.ndarray:
    nbr, _ = _neighbor_table(shape, connectivity)
    n = img_flat.size
    dist = np.full(n, np.inf)
    settled = np.zeros(n, dtype=bool)
    heap = [(0.0, int(i), float(img_flat[i]), float(img_flat[i])) for i in srcs]
    heapq.heapify(heap)
    nbr_list = nbr  # (n, K)
    K = nbr.shape[1]
    while heap:
        width, i, lo, hi = heapq.heappop(heap)
        if settled[i]:
            continue
        settled[i] = True
        dist[i] = width
        row = nbr_list[i]
        for k in range(K):
            j = row[k]
            if j >= 0 and not settled[j]:
                v = img_flat[j]
                nlo = lo if v >= lo else v
                nhi = hi if v <= hi else v
                heapq.heappush(heap, (nhi - nlo, int(j), nlo, nhi))
    return dist


@njit(cache=True)
def _raster_sweeps(dist, img, orders, nbr, steps, mix):
    """One full pass of directional sweeps; returns the largest decrease."""
    n_sweeps = orders.shape[0]
    n = orders.shape[1]
    n_off = nbr.shape[1]
    maxdrop = 0.0
    for s in range(n_sweeps):
        for t in range(n):
            i = orders[s, t]
            best = dist[i]
            for k in range(n_off):
                j = nbr[i, k]
                if j >= 0:
                    v = dist[j] + mix * abs(img[i] - img[j]) + (1.0 - mix) * steps[k]
                    if v < best:
                        best = v
            if best < dist[i]:
                drop = dist[i] - best
                if drop > maxdrop:
                    maxdrop = drop
                dist[i] = best
    return maxdrop


def _sweep_orders(shape: GridShape) -> np.ndarray:
    """Directional visit orders: 4 sweeps in 2D, 6 in 3D."""
    flat = np.arange(shape.nvox, dtype=np.int64).reshape(shape.dims)
    if shape.ndim == 2:
        perms = [(0, 1), (1, 0)]
    else:
        perms = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
    orders = []
    for p in perms:
        fwd = flat.transpose(p).ravel()
        orders.append(fwd)
        orders.append(fwd[::-1])
    return np.stack(orders)


def distance_map_raster(
    image: ScalarVolume,
    sources,
    cfg: TransformConfig,
    rcfg: RasterConfig | None = None,
    class_id: int = 0,
) -> DistanceMap:
    """Raster-sweep approximation of the additive distances.

    Values never fall below the exact map and are non-increasing in the
    number of passes; at fixed point they equal the exact engine.
    """
    if cfg.kind is DistanceKind.MBD:
        raise ValueError("raster engine does not support the mbd kind")
    rcfg = rcfg or RasterConfig()
    intens = _check_engine_inputs(image, sources, cfg)
    srcs = _source_flats(image.shape, sources)
    nbr, steps = _neighbor_table(image.shape, cfg.connectivity)
    orders = _sweep_orders(image.shape)
    dist = np.full(image.shape.nvox, np.inf)
    dist[srcs] = 0.0
    img_flat = np.ascontiguousarray(intens.ravel())
    for _ in range(rcfg.max_passes):
        drop = _raster_sweeps(
            dist, img_flat, orders, nbr, steps, float(cfg.intensity_mix)
        )
        if drop <= rcfg.convergence_tol:
            break
    return DistanceMap(image.shape, class_id, dist.reshape(image.shape.dims))


def make_signed_map(dist: DistanceMap, labels: LabelVolume) -> SignedDistanceMap:
    """Negate the distance inside the source class region (zero on boundary)."""
    if dist.shape != labels.shape:
        raise ValueError("distance map and labels live on different grids")
    inside = labels.mask(dist.class_id)
    signed = np.where(inside, -dist.data, dist.data)
    return SignedDistanceMap(dist.shape, dist.class_id, signed)


def rescale_intensities(image: ScalarVolume, channel: int) -> ScalarVolume:
    """Affinely map one channel to [0, 255]; other channels untouched."""
    chan = image.channel(channel)
    lo, hi = float(chan.min()), float(chan.max())
    if hi <= lo:
        raise ValueError("degenerate intensity range")
    data = np.array(image.data)
    data[channel] = (chan - lo) * (255.0 / (hi - lo))
    return ScalarVolume(image.shape, data)


def _one_signed_map(image, weak_labels, cfg, absent_policy, engine, rcfg, k):
    sources = boundary_of(weak_labels, k, cfg.connectivity)
    if not sources:
        return absent_class_map(weak_labels.shape, absent_policy, class_id=k)
    if engine == "raster":
        dist = distance_map_raster(image, sources, cfg, rcfg, class_id=k)
    elif engine == "exact":
        dist = distance_map_exact(image, sources, cfg, class_id=k)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return make_signed_map(dist, weak_labels)


def signed_maps_for_all_classes(
    image: ScalarVolume,
    weak_labels: LabelVolume,
    cfg: TransformConfig,
    absent_policy: AbsentClassPolicy,
    engine: str = "exact",
    rcfg: RasterConfig | None = None,
    max_workers: int | None = None,
) -> list[SignedDistanceMap]:
    """One signed map per foreground class, absent classes per policy."""
    if weak_labels.num_classes < 2:
        raise ValueError("need at least one foreground class")
    if image.shape != weak_labels.shape:
        raise ValueError("image and labels live on different grids")
    uses_intensity = cfg.kind is DistanceKind.MBD or cfg.intensity_mix > 0
    if cfg.rescale_to_255 and uses_intensity:
        image = rescale_intensities(image, cfg.channel)
    ks = range(1, weak_labels.num_classes)
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(
                pool.map(
                    lambda k: _one_signed_map(
                        image, weak_labels, cfg, absent_policy, engine, rcfg, k
                    ),
                    ks,
                )
            )
    return [
        _one_signed_map(image, weak_labels, cfg, absent_policy, engine, rcfg, k)
        for k in ks
    ]


def signed_maps_2d_stack(
    image: ScalarVolume,
    weak_labels: LabelVolume,
    cfg: TransformConfig,
    absent_policy: AbsentClassPolicy,
    engine: str = "exact",
    rcfg: RasterConfig | None = None,
    max_workers: int | None = None,
) -> list[SignedDistanceMap]:
    """Per-slice 2D maps of a 3D volume, concatenated along the slab axis."""
    if image.shape.ndim != 3:
        raise ValueError("2D-stack mode needs a 3D volume")
    dims = image.shape.dims
    slice_shape = GridShape(dims[:2], image.shape.spacing[:2])
    n_fg = weak_labels.num_classes - 1
    out = [np.empty(dims) for _ in range(n_fg)]
    for z in range(dims[2]):
        img_z = ScalarVolume(slice_shape, image.data[:, :, :, z])
        lab_z = LabelVolume(
            slice_shape, weak_labels.num_classes, weak_labels.data[:, :, z]
        )
        maps = signed_maps_for_all_classes(
            img_z, lab_z, cfg, absent_policy, engine, rcfg, max_workers
        )
        for m in maps:
            out[m.class_id - 1][:, :, z] = m.data
    return [
        SignedDistanceMap(image.shape, k + 1, out[k]) for k in range(n_fg)
    ]
