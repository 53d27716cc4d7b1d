"""Multimodal fusion: PCA over concatenated textual+visual features,
reduced back to the original feature width so fused models stay
dimension-compatible with single-modality ones.

The PCA is meant to be fit on the union of source- and target-domain rows of
both entity kinds, so every fused anchor lives in one shared space and user
rows crossed with item rows keep their inner products; see
:mod:`xdomrec.pipeline` for the assembly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FLOAT_FMT
from .types import FeatureKind, FeatureMatrix

__all__ = ["PcaModel", "fit_pca", "fuse", "save_pca", "load_pca"]


@dataclass(frozen=True)
class PcaModel:
    """Centered linear projection onto the leading principal directions."""

    mean: np.ndarray            # (in_dim,)
    components: np.ndarray      # (out_dim, in_dim), orthonormal rows
    explained_variance: np.ndarray  # (out_dim,), descending

    def __post_init__(self):
        if self.components.ndim != 2 or self.mean.shape != (self.components.shape[1],):
            raise ValueError("mean length must equal the component row length")
        if self.explained_variance.shape != (self.components.shape[0],):
            raise ValueError("one explained variance per component required")
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(self.out_dim), atol=1e-6):
            raise ValueError("component rows must be orthonormal")
        if np.any(np.diff(self.explained_variance) > 1e-12) or np.any(self.explained_variance < -1e-12):
            raise ValueError("explained variances must be nonnegative and descending")

    @property
    def in_dim(self) -> int:
        return self.components.shape[1]

    @property
    def out_dim(self) -> int:
        return self.components.shape[0]

    def transform(self, data) -> np.ndarray:
        data = np.asarray(data, dtype=np.float64)
        return (data - self.mean) @ self.components.T


def fit_pca(data, out_dim) -> PcaModel:
    """Principal components of ``data`` via SVD of the centered matrix.

    The sign of each component is fixed so its largest-magnitude entry is
    positive, making the fit reproducible. Explained variances are the
    sample variances (ddof=1) along each component.

    Args:
        data: (n, in_dim) finite matrix.
        out_dim: number of components; must not exceed min(n, in_dim).
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    n, in_dim = data.shape
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite entries")
    if out_dim < 1 or out_dim > min(n, in_dim):
        raise ValueError(f"out_dim {out_dim} must be in [1, min(n={n}, dim={in_dim})]")
    mean = data.mean(axis=0)
    centered = data - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:out_dim].copy()
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    denom = max(n - 1, 1)
    variance = (singular[:out_dim] ** 2) / denom
    return PcaModel(mean=mean, components=components, explained_variance=variance)


def fuse(textual: FeatureMatrix, visual: FeatureMatrix, pca: PcaModel) -> FeatureMatrix:
    """Blend the two modalities: concat rows, center, project down.

    Returns a FUSED feature matrix with ``pca.out_dim`` columns.
    """
    if textual.rows != visual.rows:
        raise ValueError(f"row count mismatch: textual {textual.rows}, visual {visual.rows}")
    if textual.dim + visual.dim != pca.in_dim:
        raise ValueError(
            f"concatenated width {textual.dim + visual.dim} != pca input width {pca.in_dim}"
        )
    stacked = np.hstack([textual.values, visual.values])
    return FeatureMatrix(pca.transform(stacked), FeatureKind.FUSED)


def save_pca(pca: PcaModel, path):
    """Text serialization: header, mean line, component rows, variance line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{pca.out_dim} {pca.in_dim}\n")
        fh.write(" ".join(FLOAT_FMT % v for v in pca.mean) + "\n")
        for row in pca.components:
            fh.write(" ".join(FLOAT_FMT % v for v in row) + "\n")
        fh.write(" ".join(FLOAT_FMT % v for v in pca.explained_variance) + "\n")


def load_pca(path) -> PcaModel:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be 'out_dim in_dim'")
        out_dim, in_dim = int(header[0]), int(header[1])
        mean = np.array(fh.readline().split(), dtype=np.float64)
        rows = [np.array(fh.readline().split(), dtype=np.float64) for _ in range(out_dim)]
        variance = np.array(fh.readline().split(), dtype=np.float64)
    if mean.shape != (in_dim,) or variance.shape != (out_dim,):
        raise ValueError(f"{path}: malformed pca file")
    components = np.vstack(rows)
    if components.shape != (out_dim, in_dim):
        raise ValueError(f"{path}: component block has shape {components.shape}")
    return PcaModel(mean=mean, components=components, explained_variance=variance)
