"""Segmentation evaluation: Dice score and 95th-percentile Hausdorff distance.

HD95 works on the boundary voxel sets of ground truth and prediction, in
physical units.  It is undefined (NaN) when either surface is empty; such
classes are excluded from the aggregate and counted in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .grid import ConnectivityKind, LabelVolume, boundary_of


def dice(gt: LabelVolume, pred: LabelVolume, class_id: int) -> float:
    """2|G∩S| / (|G|+|S|); 1.0 when both sets are empty."""
    if gt.shape != pred.shape:
        raise ValueError("ground truth and prediction grids differ")
    g = gt.mask(class_id)
    s = pred.mask(class_id)
    denom = int(g.sum()) + int(s.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(g & s)) / denom


def _percentile_nearest_rank(sorted_vals: np.ndarray, q: float) -> float:
    rank = math.ceil(q / 100.0 * len(sorted_vals))
    return float(sorted_vals[max(rank - 1, 0)])


def hd95(
    gt: LabelVolume,
    pred: LabelVolume,
    class_id: int,
    spacing=None,
    connectivity: ConnectivityKind = ConnectivityKind.FULL,
) -> float:
    """Max of the two directed 95th-percentile surface distances (mm).

    Returns NaN when either boundary set is empty.
    """
    if gt.shape != pred.shape:
        raise ValueError("ground truth and prediction grids differ")
    spacing = np.asarray(spacing if spacing is not None else gt.shape.spacing)
    bg = boundary_of(gt, class_id, connectivity)
    bs = boundary_of(pred, class_id, connectivity)
    if not bg or not bs:
        return float("nan")
    pg = np.array(sorted(bg), dtype=np.float64) * spacing
    ps = np.array(sorted(bs), dtype=np.float64) * spacing
    d_g_to_s = cKDTree(ps).query(pg)[0]
    d_s_to_g = cKDTree(pg).query(ps)[0]
    return max(
        _percentile_nearest_rank(np.sort(d_g_to_s), 95.0),
        _percentile_nearest_rank(np.sort(d_s_to_g), 95.0),
    )


@dataclass(frozen=True)
class MetricReport:
    per_class: dict[int, tuple[float, float]]  # class id -> (dsc, hd95)
    overall: tuple[float, float]
    hd95_undefined: int = 0
    schema: int = field(default=1)

    def to_json_dict(self) -> dict:
        return {
            "schema": self.schema,
            "per_class": {
                str(k): {
                    "dsc": v[0],
                    "hd95": None if math.isnan(v[1]) else v[1],
                }
                for k, v in self.per_class.items()
            },
            "overall": {
                "dsc": self.overall[0],
                "hd95": None if math.isnan(self.overall[1]) else self.overall[1],
            },
            "hd95_undefined": self.hd95_undefined,
        }


def evaluate(
    gt: LabelVolume,
    pred: LabelVolume,
    spacing=None,
    connectivity: ConnectivityKind = ConnectivityKind.FULL,
) -> MetricReport:
    """Per-foreground-class DSC/HD95 plus their unweighted means."""
    if gt.num_classes != pred.num_classes:
        raise ValueError("class count mismatch")
    per_class: dict[int, tuple[float, float]] = {}
    undefined = 0
    for k in range(1, gt.num_classes):
        d = dice(gt, pred, k)
        h = hd95(gt, pred, k, spacing, connectivity)
        if math.isnan(h):
            undefined += 1
        per_class[k] = (d, h)
    dscs = [v[0] for v in per_class.values()]
    hds = [v[1] for v in per_class.values() if not math.isnan(v[1])]
    overall = (
        float(np.mean(dscs)) if dscs else float("nan"),
        float(np.mean(hds)) if hds else float("nan"),
    )
    return MetricReport(per_class, overall, undefined)
