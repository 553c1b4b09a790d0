"""Command line front end: distmap, points, loss, metrics, bench.

Exit codes: 0 ok, 1 runtime error, 2 usage error.  All randomness flows
through --seed.  WSDIST_THREADS caps per-class parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as wsio
from .grid import ConnectivityKind, GridShape, LabelVolume, ScalarVolume
from .loss import LossConfig, combined_objective
from .metrics import evaluate
from .transforms import (
    DistanceKind,
    RasterConfig,
    TransformConfig,
    signed_maps_2d_stack,
    signed_maps_for_all_classes,
)
from .weaklabels import (
    AbsentClassPolicy,
    PointAnnotationConfig,
    generate_points,
)

_KIND_ALIASES = {
    "euc": DistanceKind.EUCLIDEAN,
    "geo": DistanceKind.GEODESIC,
    "int": DistanceKind.INTENSITY,
    "mbd": DistanceKind.MBD,
}


def _max_workers() -> int | None:
    raw = os.environ.get("WSDIST_THREADS")
    if raw is None:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wsdist",
        description="Distance maps, point annotations, losses and metrics "
        "for weakly supervised segmentation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("distmap", help="precompute signed distance maps")
    d.add_argument("image", help="intensity volume (.npy + .json)")
    d.add_argument("labels", help="weak label volume (.npy + .json)")
    d.add_argument("--out", required=True, help="output directory")
    d.add_argument("--kind", choices=sorted(_KIND_ALIASES), default="geo")
    d.add_argument("--mix", type=float, default=None, help="intensity mix in [0,1]")
    d.add_argument("--engine", choices=["exact", "raster"], default="exact")
    d.add_argument("--passes", type=int, default=4)
    d.add_argument("--connectivity", choices=["faces", "full"], default="full")
    d.add_argument("--dims", choices=["2d", "3d"], default=None,
                   help="per-slice 2D maps or one volumetric map (default: "
                   "match the volume)")
    d.add_argument("--absent", default="ones",
                   help="zeros | ones | const:<v> map for absent classes")
    d.add_argument("--channel", type=int, default=0)
    d.add_argument("--no-rescale", action="store_true",
                   help="skip the 0-255 intensity rescale")
    d.add_argument("--json", action="store_true")

    pt = sub.add_parser("points", help="synthesize point annotations")
    pt.add_argument("labels", help="full label volume (.npy + .json)")
    pt.add_argument("--out", required=True, help="output label file (.npy)")
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--axes", default="4,2",
                    help="ellipse semi-axes in pixels, cols,rows")
    pt.add_argument("--json", action="store_true")

    lo = sub.add_parser("loss", help="evaluate the combined objective")
    lo.add_argument("probs", help="probability volume (.npy + .json)")
    lo.add_argument("labels", help="weak label volume")
    lo.add_argument("maps", help="directory of signed maps (sdm_class*.npy)")
    lo.add_argument("--alpha", type=float, default=1.0)
    lo.add_argument("--json", action="store_true")

    me = sub.add_parser("metrics", help="DSC and HD95 reports")
    me.add_argument("--gt", required=True, help="label file or directory")
    me.add_argument("--pred", required=True, help="label file or directory")
    me.add_argument("--out", default=None, help="write JSON report here")
    me.add_argument("--json", action="store_true")

    be = sub.add_parser("bench", help="time the signed-map precomputation")
    be.add_argument("--size2d", default="256,256")
    be.add_argument("--size3d", default="64,64,32")
    be.add_argument("--spacing3d", default="1,1,4")
    be.add_argument("--reps", type=int, default=1)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--classes", type=int, default=3)
    be.add_argument("--json", action="store_true")
    return p


def _transform_config(args) -> TransformConfig:
    return TransformConfig(
        kind=_KIND_ALIASES[args.kind],
        intensity_mix=args.mix,
        connectivity=ConnectivityKind(args.connectivity),
        channel=args.channel,
        rescale_to_255=not args.no_rescale,
    )


def cmd_distmap(args) -> int:
    if args.kind == "mbd" and args.engine == "raster":
        print(
            "wsdist distmap: usage error: the raster engine does not "
            "support --kind mbd",
            file=sys.stderr,
        )
        return 2
    image = wsio.read_volume(args.image)
    labels = wsio.read_volume(args.labels)
    if isinstance(image, LabelVolume) or not isinstance(labels, LabelVolume):
        raise ValueError("distmap expects a scalar image and an integer label map")
    cfg = _transform_config(args)
    policy = AbsentClassPolicy.parse(args.absent)
    rcfg = RasterConfig(max_passes=args.passes)
    dims = args.dims or ("3d" if image.shape.ndim == 3 else "2d")
    if dims == "2d" and image.shape.ndim == 3:
        maps = signed_maps_2d_stack(
            image, labels, cfg, policy, args.engine, rcfg, _max_workers()
        )
    else:
        if dims == "3d" and image.shape.ndim == 2:
            raise ValueError("--dims 3d requires a 3D volume")
        maps = signed_maps_for_all_classes(
            image, labels, cfg, policy, args.engine, rcfg, _max_workers()
        )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for m in maps:
        path = outdir / f"sdm_class{m.class_id}.npy"
        wsio.write_volume(
            m,
            path,
            transform_config={
                "kind": cfg.kind.value,
                "intensity_mix": cfg.intensity_mix,
                "connectivity": cfg.connectivity.value,
                "channel": cfg.channel,
                "rescale_to_255": cfg.rescale_to_255,
                "engine": args.engine,
                "dims": dims,
            },
        )
        written.append(str(path))
    if args.json:
        print(json.dumps({"schema": 1, "written": written}))
    else:
        for w in written:
            print(w)
    return 0


def cmd_points(args) -> int:
    labels = wsio.read_volume(args.labels)
    if not isinstance(labels, LabelVolume):
        raise ValueError("points expects an integer label map")
    a, b = (float(x) for x in args.axes.split(","))
    cfg = PointAnnotationConfig(ellipse_semi_axes=(a, b), rng_seed=args.seed)
    weak = generate_points(labels, cfg)
    wsio.write_volume(weak, args.out, seed=args.seed)
    if args.json:
        print(
            json.dumps(
                {
                    "schema": 1,
                    "written": str(args.out),
                    "annotated_voxels": int(np.count_nonzero(weak.data)),
                }
            )
        )
    else:
        print(args.out)
    return 0


def cmd_loss(args) -> int:
    probs = wsio.read_probability(args.probs)
    labels = wsio.read_volume(args.labels)
    if not isinstance(labels, LabelVolume):
        raise ValueError("loss expects an integer label map")
    mapdir = Path(args.maps)
    paths = sorted(mapdir.glob("sdm_class*.npy"))
    if not paths:
        raise ValueError(f"no signed maps found in {mapdir}")
    maps = [wsio.read_signed_map(p) for p in paths]
    cfg = LossConfig(alpha=args.alpha)
    total, ce, bl = combined_objective(probs, labels, maps, cfg)
    out = {"schema": 1, "total": total, "ce_term": ce, "bl_term": bl,
           "alpha": args.alpha}
    if args.json:
        print(json.dumps(out))
    else:
        print(f"total={total:.9g} ce={ce:.9g} bl={bl:.9g} (alpha={args.alpha})")
    return 0


def _label_pairs(gt: str, pred: str):
    gt_p, pred_p = Path(gt), Path(pred)
    if gt_p.is_dir() != pred_p.is_dir():
        raise ValueError("--gt and --pred must both be files or both directories")
    if not gt_p.is_dir():
        return [(gt_p.stem, gt_p, pred_p)]
    pairs = []
    for g in sorted(gt_p.glob("*.npy")):
        p = pred_p / g.name
        if not p.exists():
            raise ValueError(f"missing prediction for {g.name}")
        pairs.append((g.stem, g, p))
    if not pairs:
        raise ValueError(f"no .npy label files in {gt_p}")
    return pairs


def cmd_metrics(args) -> int:
    reports = {}
    for name, g, p in _label_pairs(args.gt, args.pred):
        gt = wsio.read_volume(g)
        pred = wsio.read_volume(p)
        if not isinstance(gt, LabelVolume) or not isinstance(pred, LabelVolume):
            raise ValueError("metrics expects integer label maps")
        reports[name] = evaluate(gt, pred).to_json_dict()
    report = {"schema": 1, "cases": reports}
    if args.out:
        wsio.write_report(report, args.out)
    if args.json or not args.out:
        print(json.dumps(report, indent=None if args.json else 2))
    return 0


def _bench_phantom(dims, spacing, num_classes, seed):
    """Smooth random image plus a few blob classes with point annotations."""
    rng = np.random.Generator(np.random.PCG64(seed))
    shape = GridShape(dims, spacing)
    base = rng.random(dims)
    # cheap smoothing so intensity distances have structure
    for axis in range(len(dims)):
        base = (base + np.roll(base, 1, axis) + np.roll(base, -1, axis)) / 3.0
    labels = np.zeros(dims, dtype=np.int32)
    coords = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    for k in range(1, num_classes):
        center = [int(rng.integers(d // 4, 3 * d // 4)) for d in dims]
        radius = max(2, min(dims) // 6)
        dist2 = sum((c - cc) ** 2 for c, cc in zip(coords, center))
        labels[dist2 <= radius**2] = k
        base[dist2 <= radius**2] += 0.5 * k
    full = LabelVolume(shape, num_classes, labels)
    weak = generate_points(
        full, PointAnnotationConfig(rng_seed=seed)
    )
    return ScalarVolume(shape, base), weak


def cmd_bench(args) -> int:
    size2d = tuple(int(x) for x in args.size2d.split(","))
    size3d = tuple(int(x) for x in args.size3d.split(","))
    spacing3d = tuple(float(x) for x in args.spacing3d.split(","))
    phantoms = {
        "2D": _bench_phantom(size2d, (1.0,) * len(size2d), args.classes, args.seed),
        "3D": _bench_phantom(size3d, spacing3d, args.classes, args.seed + 1),
    }
    policy = AbsentClassPolicy(mode="ones")
    results: dict[str, dict[str, float]] = {}
    for kind_name, kind in _KIND_ALIASES.items():
        results[kind_name] = {}
        # additive kinds go through the fast raster engine, MBD through the
        # best-first interval engine, mirroring the precompute workflow
        engine = "exact" if kind is DistanceKind.MBD else "raster"
        cfg = TransformConfig(kind=kind)
        for tag, (image, weak) in phantoms.items():
            times = []
            for _ in range(max(1, args.reps)):
                t0 = time.perf_counter()
                signed_maps_for_all_classes(
                    image, weak, cfg, policy, engine=engine,
                    max_workers=_max_workers(),
                )
                times.append(time.perf_counter() - t0)
            results[kind_name][tag] = float(np.mean(times))
    report = {
        "schema": 1,
        "reps": max(1, args.reps),
        "sizes": {"2D": list(size2d), "3D": list(size3d)},
        "mean_seconds": results,
    }
    if args.json:
        print(json.dumps(report))
    else:
        print(f"mean seconds over {report['reps']} rep(s)")
        print(f"{'kind':<6}{'2D':>12}{'3D':>12}")
        for kind_name in sorted(_KIND_ALIASES):
            row = results[kind_name]
            print(f"{kind_name:<6}{row['2D']:>12.4f}{row['3D']:>12.4f}")
    return 0


_COMMANDS = {
    "distmap": cmd_distmap,
    "points": cmd_points,
    "loss": cmd_loss,
    "metrics": cmd_metrics,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, TypeError) as exc:
        print(f"wsdist {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
