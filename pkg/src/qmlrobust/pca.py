"""Principal component reduction with a deterministic sign convention.

Fitting records the per-component min/max of the training projection so
that transformed coordinates can be rescaled into [0,1] (the range the
downstream angle encoding expects). Evaluation rows falling outside the
training range are clipped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FeatureMatrix


@dataclass
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows, descending variance
    explained_variance: np.ndarray  # (k,), non-increasing
    proj_min: np.ndarray  # (k,) training projection range, drives the [0,1] rescale
    proj_max: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]


def fit_pca(data: FeatureMatrix, k: int) -> PcaModel:
    """Top-k principal directions of the sample covariance (ddof=1).

    Sign convention: the largest-magnitude entry of each component is
    made nonnegative, so the decomposition is unique up to eigenvalue ties.
    """
    X = data.values
    n, d = X.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} out of range for a {n}x{d} matrix")
    mean = X.mean(axis=0)
    centered = X - mean
    if not np.any(centered):
        raise ValueError("all rows identical: zero-variance data has no principal directions")

    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    components = _fix_signs(vt[:k].copy())
    explained = (svals[:k] ** 2) / (n - 1)

    proj = centered @ components.T
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=explained,
        proj_min=proj.min(axis=0),
        proj_max=proj.max(axis=0),
    )


def _fix_signs(components: np.ndarray) -> np.ndarray:
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return components


def project(model: PcaModel, values: np.ndarray) -> np.ndarray:
    """Raw principal coordinates (centered, unscaled): (X - mean) @ components.T."""
    if values.shape[1] != model.n_features:
        raise ValueError(
            f"data has {values.shape[1]} features, model expects {model.n_features}"
        )
    return (values - model.mean) @ model.components.T


def transform_pca(model: PcaModel, data: FeatureMatrix) -> FeatureMatrix:
    """Project, rescale each coordinate to [0,1] by training range, clip, keep labels."""
    proj = project(model, data.values)
    span = model.proj_max - model.proj_min
    scaled = np.zeros_like(proj)
    live = span > 0
    scaled[:, live] = (proj[:, live] - model.proj_min[live]) / span[live]
    return FeatureMatrix(values=np.clip(scaled, 0.0, 1.0), labels=data.labels.copy())
