"""Variant-aware assembly of side features for one or both domains.

This is the glue between raw feature matrices and trainable models: deriving
user visual rows from train interactions, and fitting the shared fusion
space on the union of both domains' rows for the fused variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import derive_user_visual_features
from .fusion import fit_pca, fuse
from .types import Domain, FeatureMatrix, InteractionSet, Variant

__all__ = ["SideInputs", "assemble_side_features"]


@dataclass(frozen=True)
class SideInputs:
    """Raw per-domain ingredients; user visual rows are derived, not given."""

    user_textual: FeatureMatrix | None
    item_textual: FeatureMatrix | None
    item_visual: FeatureMatrix | None
    train: InteractionSet


def assemble_side_features(
    variant: Variant,
    inputs: dict[Domain, SideInputs],
    pca_sink: dict | None = None,
):
    """(user_side, item_side) per domain for the requested variant.

    For FCF, a single PCA is fit on the union of both domains' user and item
    concatenated textual+visual rows, keeping every fused anchor in one
    shared space; ``pca_sink`` receives the fitted model under ``fused``.
    """
    variant = Variant(variant)
    if variant is Variant.PLAIN_MF:
        return {d: (None, None) for d in inputs}

    if variant is Variant.TCF:
        return {d: (inp.user_textual, inp.item_textual) for d, inp in inputs.items()}

    if variant is Variant.VCF:
        return {
            d: (derive_user_visual_features(inp.item_visual, inp.train), inp.item_visual)
            for d, inp in inputs.items()
        }

    if set(inputs) != set(Domain):
        raise ValueError("fused features need inputs for both domains")
    user_visual = {
        d: derive_user_visual_features(inp.item_visual, inp.train)
        for d, inp in inputs.items()
    }
    # One projection for every entity row, user and item, both domains: the
    # prediction score crosses fused user rows with fused item rows, and a
    # shared projection preserves their inner products on the kept subspace.
    # Separate per-kind fits would cross two unrelated rotations and scramble
    # the side-feature signal.
    rows = np.vstack(
        [np.hstack([inputs[d].user_textual.values, user_visual[d].values]) for d in Domain]
        + [np.hstack([inputs[d].item_textual.values, inputs[d].item_visual.values])
           for d in Domain]
    )
    out_dim = inputs[Domain.SOURCE].user_textual.dim
    pca = fit_pca(rows, out_dim=out_dim)
    if pca_sink is not None:
        pca_sink["fused"] = pca
    return {
        d: (
            fuse(inputs[d].user_textual, user_visual[d], pca),
            fuse(inputs[d].item_textual, inputs[d].item_visual, pca),
        )
        for d in Domain
    }
