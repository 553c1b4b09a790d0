"""Scikit-learn style wrappers so the transforms compose with pipelines.

The estimators accept plain numpy arrays: images as (channels, *dims) or
(*dims,), labels as integer arrays.  ``get_params``/``set_params`` come from
``sklearn.base.BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .grid import ConnectivityKind, GridShape, LabelVolume, ScalarVolume
from .transforms import (
    DistanceKind,
    RasterConfig,
    TransformConfig,
    signed_maps_for_all_classes,
)
from .weaklabels import AbsentClassPolicy, PointAnnotationConfig, generate_points


def _as_image(X, spacing) -> ScalarVolume:
    X = np.asarray(X, dtype=np.float64)
    ndim = len(spacing)
    if X.ndim == ndim:
        X = X[np.newaxis]
    if X.ndim != ndim + 1:
        raise ValueError(
            f"image must have {ndim} or {ndim + 1} axes, got {X.ndim}"
        )
    return ScalarVolume(GridShape(X.shape[1:], spacing), X)


def _as_labels(y, spacing, num_classes=None) -> LabelVolume:
    y = np.asarray(y)
    if not np.issubdtype(y.dtype, np.integer):
        raise ValueError("labels must be an integer array")
    if num_classes is None:
        num_classes = int(y.max()) + 1 if y.size else 1
    return LabelVolume(GridShape(y.shape, spacing), num_classes, y)


class SignedDistanceMapper(TransformerMixin, BaseEstimator):
    """Computes per-class signed distance maps from weak labels.

    ``fit(X, y)`` takes the intensity image ``X`` and integer labels ``y``;
    ``transform(X)`` returns the stacked signed maps, shape
    ``(n_foreground_classes, *dims)``.
    """

    def __init__(
        self,
        kind="geodesic",
        intensity_mix=None,
        connectivity="full",
        channel=0,
        rescale_to_255=True,
        engine="exact",
        max_passes=4,
        absent_policy="ones",
        spacing=(1.0, 1.0),
    ):
        self.kind = kind
        self.intensity_mix = intensity_mix
        self.connectivity = connectivity
        self.channel = channel
        self.rescale_to_255 = rescale_to_255
        self.engine = engine
        self.max_passes = max_passes
        self.absent_policy = absent_policy
        self.spacing = spacing

    def _config(self) -> TransformConfig:
        return TransformConfig(
            kind=DistanceKind(self.kind),
            intensity_mix=self.intensity_mix,
            connectivity=ConnectivityKind(self.connectivity),
            channel=self.channel,
            rescale_to_255=self.rescale_to_255,
        )

    def fit(self, X, y):
        image = _as_image(X, tuple(self.spacing))
        labels = _as_labels(y, tuple(self.spacing))
        maps = signed_maps_for_all_classes(
            image,
            labels,
            self._config(),
            AbsentClassPolicy.parse(self.absent_policy),
            engine=self.engine,
            rcfg=RasterConfig(max_passes=self.max_passes),
        )
        self.maps_ = np.stack([m.data for m in maps])
        self.class_ids_ = [m.class_id for m in maps]
        return self

    def transform(self, X=None):
        check_is_fitted(self, "maps_")
        return self.maps_

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y).transform(X)


class PointAnnotator(TransformerMixin, BaseEstimator):
    """Shrinks full labels to synthetic per-slice point annotations."""

    def __init__(self, ellipse_semi_axes=(4.0, 2.0), rng_seed=0, per_slice=True,
                 spacing=(1.0, 1.0)):
        self.ellipse_semi_axes = ellipse_semi_axes
        self.rng_seed = rng_seed
        self.per_slice = per_slice
        self.spacing = spacing

    def fit(self, X=None, y=None):
        return self

    def transform(self, y) -> np.ndarray:
        labels = _as_labels(y, tuple(self.spacing))
        weak = generate_points(
            labels,
            PointAnnotationConfig(
                ellipse_semi_axes=tuple(self.ellipse_semi_axes),
                rng_seed=self.rng_seed,
                per_slice=self.per_slice,
            ),
        )
        return np.asarray(weak.data)
