#!/usr/bin/env python3
"""Generate the pinned parity corpus for the frontend binding tests.

Twenty seeded instances are written under ``frontend/corpus``.  Inputs
(image, full labels, probabilities, prediction) and expected outputs
(weak labels, signed maps, loss values, metric values) are produced with
direct library calls, so the binding tests exercise the CLI/file route
against an independent in-process route.
"""

import json
import math
from pathlib import Path

import numpy as np

from wsdist import io as wsio
from wsdist.grid import GridShape, LabelVolume, ProbabilityVolume, ScalarVolume
from wsdist.loss import boundary_loss, partial_cross_entropy
from wsdist.metrics import dice, hd95
from wsdist.transforms import (
    DistanceKind,
    TransformConfig,
    signed_maps_for_all_classes,
)
from wsdist.weaklabels import (
    AbsentClassPolicy,
    PointAnnotationConfig,
    generate_points,
)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
KINDS = ["euc", "geo", "int", "mbd"]
KIND_ENUM = {
    "euc": DistanceKind.EUCLIDEAN,
    "geo": DistanceKind.GEODESIC,
    "int": DistanceKind.INTENSITY,
    "mbd": DistanceKind.MBD,
}


def random_labels(rng, dims, num_classes, drop_last):
    arr = np.zeros(dims, dtype=np.int32)
    last = num_classes - 1 if drop_last else num_classes
    for k in range(1, last):
        for _ in range(int(rng.integers(1, 3))):
            lo = [int(rng.integers(0, max(d - 3, 1))) for d in dims]
            hi = [
                min(int(l + rng.integers(3, 7)), d) for l, d in zip(lo, dims)
            ]
            arr[tuple(slice(l, h) for l, h in zip(lo, hi))] = k
    if not np.any(arr == 1):  # always keep class 1 present
        arr[tuple(slice(0, min(3, d)) for d in dims)] = 1
    return arr


def build_case(i: int, root: Path):
    rng = np.random.default_rng(7000 + i)
    is_3d = i % 4 == 3
    if is_3d:
        dims = (int(rng.integers(8, 13)), int(rng.integers(8, 13)), 3)
        spacing = (1.0, 1.0, 4.0)
    else:
        dims = (int(rng.integers(10, 21)), int(rng.integers(10, 21)))
        spacing = (1.0, 1.0)
    num_classes = 4 if i % 5 == 4 else 3  # every fifth case has an absent class
    shape = GridShape(dims, spacing)
    kind = KINDS[i % 4]
    seed = 1000 + i

    image = ScalarVolume(shape, rng.random(dims) * 100)
    labels = LabelVolume(
        shape, num_classes, random_labels(rng, dims, num_classes, i % 5 == 4)
    )
    flips = rng.random(dims) < 0.1
    pred_arr = np.where(
        flips, rng.integers(0, num_classes, dims).astype(np.int32), labels.data
    )
    pred = LabelVolume(shape, num_classes, pred_arr)

    raw = rng.random((num_classes, *dims)).astype(np.float32)
    raw /= raw.sum(axis=0)
    raw = (raw / raw.sum(axis=0)).astype(np.float32)  # renormalize in f32
    probs = ProbabilityVolume(shape, num_classes, raw.astype(np.float64))

    root.mkdir(parents=True, exist_ok=True)
    wsio.write_volume(image, root / "image.npy")
    wsio.write_volume(labels, root / "labels.npy")
    wsio.write_volume(pred, root / "pred.npy")
    wsio.write_volume(probs, root / "probs.npy")

    # recompute everything from the serialized float32 artifacts so both
    # routes see bit-identical inputs
    image_rb = wsio.read_volume(root / "image.npy")
    labels_rb = wsio.read_volume(root / "labels.npy")
    pred_rb = wsio.read_volume(root / "pred.npy")
    probs_rb = wsio.read_probability(root / "probs.npy")

    weak = generate_points(labels_rb, PointAnnotationConfig(rng_seed=seed))
    wsio.write_volume(weak, root / "weak_expected.npy", seed=seed)
    weak_rb = wsio.read_volume(root / "weak_expected.npy")

    cfg = TransformConfig(kind=KIND_ENUM[kind])
    maps = signed_maps_for_all_classes(
        image_rb, weak_rb, cfg, AbsentClassPolicy(mode="ones"), engine="exact"
    )
    mapdir = root / "maps_expected"
    mapdir.mkdir(exist_ok=True)
    for m in maps:
        wsio.write_volume(m, mapdir / f"sdm_class{m.class_id}.npy")
    maps_rb = [
        wsio.read_signed_map(p) for p in sorted(mapdir.glob("sdm_class*.npy"))
    ]

    hd = {
        k: hd95(labels_rb, pred_rb, k) for k in range(1, num_classes)
    }
    meta = {
        "kind": kind,
        "seed": seed,
        "num_classes": num_classes,
        "spacing": list(spacing),
        "dims": list(dims),
        "boundary_loss": boundary_loss(probs_rb, maps_rb),
        "partial_ce": partial_cross_entropy(probs_rb, weak_rb),
        "dice": {
            str(k): dice(labels_rb, pred_rb, k) for k in range(1, num_classes)
        },
        "hd95": {
            str(k): None if math.isnan(v) else v for k, v in hd.items()
        },
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def main():
    for i in range(20):
        build_case(i, CORPUS / f"case{i:02d}")
    print(f"wrote 20 cases under {CORPUS}")


if __name__ == "__main__":
    main()
