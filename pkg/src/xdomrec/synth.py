"""Bundled synthetic paired-domain generator.

Produces two domains driven by a shared preference structure so that
cross-domain experiments (and the whole test suite) run offline:

* every entity has a low-dimensional preference vector split into a
  "textual" block and a "visual" block, so each modality carries its own
  independent slice of the signal;
* interactions are the per-user top scoring items under the domain's
  preference geometry, with the target geometry rotated against the source
  (domain shift) and the target kept much sparser;
* feature files are fixed linear maps of the corresponding block plus noise,
  with the same maps used in both domains (features live in a shared space).

User visual features are deliberately not emitted: the engine derives them
from item features and train interactions.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import save_feature_matrix, write_interactions
from .types import Domain, FeatureKind, FeatureMatrix, InteractionSet

__all__ = ["SynthParams", "SyntheticDomain", "generate_domain_pair", "write_synthetic_dataset"]


@dataclass(frozen=True)
class SynthParams:
    num_users: int = 500
    num_items: int = 300
    feature_dim: int = 16
    text_block: int = 4
    visual_block: int = 4
    source_items_per_user: int = 16
    target_items_per_user: int = 6
    feature_noise: float = 1.0
    score_noise: float = 0.5
    domain_shift: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.num_users, self.num_items, self.feature_dim) <= 0:
            raise ValueError("entity counts and feature_dim must be positive")
        if self.text_block <= 0 or self.visual_block <= 0:
            raise ValueError("signal blocks must be positive")
        if self.source_items_per_user > self.num_items or self.target_items_per_user > self.num_items:
            raise ValueError("items per user cannot exceed the catalog size")


@dataclass(frozen=True)
class SyntheticDomain:
    interactions: InteractionSet
    user_textual: FeatureMatrix
    item_textual: FeatureMatrix
    item_visual: FeatureMatrix


def _orthonormal_map(rng, rows, cols):
    mat = rng.normal(size=(cols, rows))
    q, _ = np.linalg.qr(mat)
    return q[:, :rows].T  # (rows, cols) with orthonormal rows


def _rotation(rng, dim, angle_scale):
    """Orthogonal matrix interpolating away from the identity."""
    skew = rng.normal(size=(dim, dim))
    skew = (skew - skew.T) / 2.0
    norm = np.linalg.norm(skew, 2)
    if norm == 0:
        return np.eye(dim)
    # matrix exponential of a scaled skew-symmetric matrix via eigendecomposition
    scaled = skew * (angle_scale / norm)
    eigvals, eigvecs = np.linalg.eig(scaled)
    rot = (eigvecs @ np.diag(np.exp(eigvals)) @ np.linalg.inv(eigvecs)).real
    return rot


def _top_l_interactions(scores, per_user, tag):
    """Each user's top scoring items; uncovered items get their best user appended."""
    num_users, num_items = scores.shape
    pairs = []
    covered = np.zeros(num_items, dtype=bool)
    for user in range(num_users):
        top = np.argpartition(-scores[user], per_user - 1)[:per_user]
        covered[top] = True
        for item in np.sort(top):
            pairs.append((user, int(item)))
    for item in np.flatnonzero(~covered):
        pairs.append((int(np.argmax(scores[:, item])), int(item)))
    return InteractionSet(num_users, num_items, pairs, tag)


def generate_domain_pair(params: SynthParams) -> dict[Domain, SyntheticDomain]:
    """Build both domains from one seed; see the module docstring for the recipe."""
    rng = np.random.default_rng(params.seed)
    signal_dim = params.text_block + params.visual_block

    text_map = _orthonormal_map(rng, params.text_block, params.feature_dim)
    visual_map = _orthonormal_map(rng, params.visual_block, params.feature_dim)
    shift = _rotation(rng, signal_dim, params.domain_shift)

    domains = {}
    for domain in (Domain.SOURCE, Domain.TARGET):
        users = rng.normal(size=(params.num_users, signal_dim))
        items = rng.normal(size=(params.num_items, signal_dim))
        geometry = shift if domain is Domain.TARGET else np.eye(signal_dim)
        scores = (users @ geometry) @ items.T
        scores = scores + params.score_noise * rng.normal(size=scores.shape)
        per_user = (params.source_items_per_user if domain is Domain.SOURCE
                    else params.target_items_per_user)
        interactions = _top_l_interactions(scores, per_user, domain)

        noise = lambda shape: params.feature_noise * rng.normal(size=shape)
        user_textual = users[:, :params.text_block] @ text_map
        item_textual = items[:, :params.text_block] @ text_map
        item_visual = items[:, params.text_block:] @ visual_map
        domains[domain] = SyntheticDomain(
            interactions=interactions,
            user_textual=FeatureMatrix(user_textual + noise(user_textual.shape),
                                       FeatureKind.TEXTUAL),
            item_textual=FeatureMatrix(item_textual + noise(item_textual.shape),
                                       FeatureKind.TEXTUAL),
            item_visual=FeatureMatrix(item_visual + noise(item_visual.shape),
                                      FeatureKind.VISUAL),
        )
    return domains


def _first_appearance_order(pairs, num_items):
    """Item indices in the order a reader of the written file will meet them."""
    seen = np.zeros(num_items, dtype=bool)
    order = []
    for _, item in pairs:
        if not seen[item]:
            seen[item] = True
            order.append(int(item))
    return np.array(order, dtype=np.int64)


def write_synthetic_dataset(params: SynthParams, out_dir) -> Path:
    """Write both domains in the engine's file formats plus a manifest.

    ``load_interactions`` assigns dense indices by first appearance, so the
    item feature rows are permuted to that order before writing; a reader of
    the directory then sees consistently aligned files.
    """
    out_dir = Path(out_dir)
    domains = generate_domain_pair(params)
    for domain, data in domains.items():
        domain_dir = out_dir / domain.name.lower()
        domain_dir.mkdir(parents=True, exist_ok=True)
        num_users = data.interactions.num_users
        user_ids = [f"u{u:05d}" for u in range(num_users)]
        item_ids = [f"i{i:05d}" for i in range(data.interactions.num_items)]
        write_interactions(data.interactions, domain_dir / "interactions.tsv",
                           user_ids, item_ids)
        item_order = _first_appearance_order(data.interactions.pairs,
                                             data.interactions.num_items)
        save_feature_matrix(data.user_textual, domain_dir / "user_textual.txt")
        save_feature_matrix(FeatureMatrix(data.item_textual.values[item_order],
                                          FeatureKind.TEXTUAL),
                            domain_dir / "item_textual.txt")
        save_feature_matrix(FeatureMatrix(data.item_visual.values[item_order],
                                          FeatureKind.VISUAL),
                            domain_dir / "item_visual.txt")
        with (domain_dir / "user_ids.txt").open("w", encoding="utf-8") as fh:
            fh.writelines(f"{uid}\n" for uid in user_ids)
        with (domain_dir / "item_ids.txt").open("w", encoding="utf-8") as fh:
            fh.writelines(f"{item_ids[i]}\n" for i in item_order)
    with (out_dir / "synth_manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(asdict(params), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir
