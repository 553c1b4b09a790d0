"""Boundary loss, partial cross-entropy and the combined objective.

All functions are pure and operate on probabilities given as inputs; there
is no softmax here.  Double sums use numpy's pairwise reduction so large
volumes accumulate with bounded float error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import LabelVolume, ProbabilityVolume, SignedDistanceMap


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 1.0
    foreground_only: bool = True
    ce_clamp_eps: float = 1e-10

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0 < self.ce_clamp_eps < 1:
            raise ValueError("ce_clamp_eps must lie in (0, 1)")


def _check_maps(probs: ProbabilityVolume, signed_maps, cfg: LossConfig):
    expected = probs.num_classes - 1 if cfg.foreground_only else probs.num_classes
    if len(signed_maps) != expected:
        raise ValueError(
            f"expected {expected} signed maps, got {len(signed_maps)}"
        )
    first = 1 if cfg.foreground_only else 0
    if {m.class_id for m in signed_maps} != set(range(first, probs.num_classes)):
        raise ValueError("signed map class ids do not cover the expected classes")
    for m in signed_maps:
        if m.shape != probs.shape:
            raise ValueError("signed map grid does not match probabilities")
        if not np.all(np.isfinite(m.data)):
            raise ValueError(
                "signed map contains non-finite values; clamp or pick a "
                "finite absent-class policy upstream"
            )


def boundary_loss(
    probs: ProbabilityVolume,
    signed_maps: list[SignedDistanceMap],
    cfg: LossConfig | None = None,
) -> float:
    """Sum over classes and voxels of probability times signed distance."""
    cfg = cfg or LossConfig()
    _check_maps(probs, signed_maps, cfg)
    total = 0.0
    for m in signed_maps:
        total += float(np.sum(probs.data[m.class_id] * m.data))
    return total


def boundary_loss_grad(signed_maps: list[SignedDistanceMap]) -> np.ndarray:
    """Gradient of the boundary loss w.r.t. probabilities: the maps themselves."""
    for m in signed_maps:
        if not np.all(np.isfinite(m.data)):
            raise ValueError("signed map contains non-finite values")
    return np.stack([m.data for m in signed_maps])


def partial_cross_entropy(
    probs: ProbabilityVolume,
    weak_labels: LabelVolume,
    cfg: LossConfig | None = None,
) -> float:
    """Cross-entropy over annotated voxels only; unannotated contribute 0."""
    cfg = cfg or LossConfig()
    if probs.shape != weak_labels.shape:
        raise ValueError("probabilities and labels live on different grids")
    if probs.num_classes != weak_labels.num_classes:
        raise ValueError("class count mismatch")
    first = 1 if cfg.foreground_only else 0
    total = 0.0
    for k in range(first, weak_labels.num_classes):
        mask = weak_labels.mask(k)
        if not mask.any():
            continue
        s = np.clip(probs.data[k][mask], cfg.ce_clamp_eps, None)
        total += float(np.sum(-np.log(s)))
    return total


def combined_objective(
    probs: ProbabilityVolume,
    weak_labels: LabelVolume,
    signed_maps: list[SignedDistanceMap],
    cfg: LossConfig | None = None,
) -> tuple[float, float, float]:
    """Partial CE plus alpha times boundary loss; returns (total, ce, bl)."""
    cfg = cfg or LossConfig()
    ce = partial_cross_entropy(probs, weak_labels, cfg)
    bl = boundary_loss(probs, signed_maps, cfg)
    return ce + cfg.alpha * bl, ce, bl
