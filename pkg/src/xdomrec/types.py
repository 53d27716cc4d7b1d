"""Shared domain types: interaction sets, feature matrices, models, configs.

Everything here is a value object with validation; no learning logic.
All types are immutable after construction except ``CfModel`` and
``DomainClassifier``, whose parameter arrays are mutated by their owning
trainer (single writer).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum, IntEnum

import numpy as np

__all__ = [
    "Domain",
    "FeatureKind",
    "Variant",
    "ClassifierTarget",
    "InteractionSet",
    "FeatureMatrix",
    "CfModel",
    "DomainClassifier",
    "AdaptationConfig",
    "concat_representation",
    "concat_representations",
]


class Domain(IntEnum):
    """Domain tag, doubling as the binary domain label (target = 1)."""

    SOURCE = 0
    TARGET = 1


class FeatureKind(Enum):
    TEXTUAL = "textual"
    VISUAL = "visual"
    FUSED = "fused"


class Variant(str, Enum):
    """Collaborative-filtering flavor: which fixed side features are attached."""

    PLAIN_MF = "plainmf"
    TCF = "tcf"
    VCF = "vcf"
    FCF = "fcf"

    @property
    def feature_kind(self) -> FeatureKind | None:
        return {
            Variant.PLAIN_MF: None,
            Variant.TCF: FeatureKind.TEXTUAL,
            Variant.VCF: FeatureKind.VISUAL,
            Variant.FCF: FeatureKind.FUSED,
        }[self]


class ClassifierTarget(Enum):
    USER_CLASSIFIER = "user"
    ITEM_CLASSIFIER = "item"


class InteractionSet:
    """Sparse binary implicit-feedback matrix for one domain.

    Stores the observed positive (user, item) pairs; every absent pair is an
    implicit zero. Pairs are deduplicated and kept in sorted order, so two
    sets built from the same pairs compare equal regardless of input order.
    """

    __slots__ = ("num_users", "num_items", "pairs", "domain_tag", "_by_user")

    def __init__(self, num_users, num_items, pairs, domain_tag=Domain.SOURCE):
        if num_users <= 0 or num_items <= 0:
            raise ValueError("num_users and num_items must be positive")
        arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs)
        if arr.size == 0:
            arr = np.empty((0, 2), dtype=np.int64)
        arr = arr.reshape(-1, 2).astype(np.int64, copy=False)
        if arr.size:
            if arr.min() < 0:
                raise ValueError("negative user/item index")
            if arr[:, 0].max() >= num_users:
                raise ValueError("user index out of range")
            if arr[:, 1].max() >= num_items:
                raise ValueError("item index out of range")
        arr = np.unique(arr, axis=0)
        arr.setflags(write=False)
        self.num_users = int(num_users)
        self.num_items = int(num_items)
        self.pairs = arr
        self.domain_tag = Domain(domain_tag)
        self._by_user = None

    @property
    def num_positives(self) -> int:
        return self.pairs.shape[0]

    @property
    def positives(self) -> frozenset:
        """The positive pairs as a frozenset (materializes; fine at desk scale)."""
        return frozenset(map(tuple, self.pairs.tolist()))

    def items_of(self, user: int) -> np.ndarray:
        """Sorted array of items the user interacted with."""
        if not 0 <= user < self.num_users:
            raise ValueError(f"user index {user} out of range [0, {self.num_users})")
        if self._by_user is None:
            by_user = {}
            if self.pairs.size:
                users = self.pairs[:, 0]
                splits = np.searchsorted(users, np.arange(self.num_users + 1))
                for u in range(self.num_users):
                    by_user[u] = self.pairs[splits[u]:splits[u + 1], 1]
            else:
                empty = np.empty(0, dtype=np.int64)
                by_user = {u: empty for u in range(self.num_users)}
            self._by_user = by_user
        return self._by_user[user]

    def __contains__(self, pair) -> bool:
        u, i = pair
        items = self.items_of(int(u))
        j = np.searchsorted(items, i)
        return j < len(items) and items[j] == i

    def __eq__(self, other):
        if not isinstance(other, InteractionSet):
            return NotImplemented
        return (
            self.num_users == other.num_users
            and self.num_items == other.num_items
            and self.domain_tag == other.domain_tag
            and np.array_equal(self.pairs, other.pairs)
        )

    def __hash__(self):
        return hash((self.num_users, self.num_items, self.domain_tag, self.pairs.tobytes()))

    def __repr__(self):
        return (
            f"InteractionSet({self.num_users} users, {self.num_items} items, "
            f"{self.num_positives} positives, {self.domain_tag.name.lower()})"
        )


class FeatureMatrix:
    """Fixed per-entity side features: one row per user or item, ``dim`` columns."""

    __slots__ = ("rows", "dim", "values", "kind")

    def __init__(self, values, kind: FeatureKind):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(f"non-finite feature entry at row {bad[0]}, column {bad[1]}")
        arr = arr.copy()
        arr.setflags(write=False)
        self.values = arr
        self.rows = arr.shape[0]
        self.dim = arr.shape[1]
        self.kind = FeatureKind(kind)

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"FeatureMatrix({self.rows}x{self.dim}, {self.kind.value})"


@dataclass
class CfModel:
    """Matrix-factorization model: trainable latents plus optional fixed side features.

    ``user_latent`` is (num_users, latent_dim) and ``item_latent`` is
    (num_items, latent_dim). For every variant except PLAIN_MF both side
    matrices must be present, share their column count, and match the
    variant's feature kind. Side features never receive gradient.
    """

    user_latent: np.ndarray
    item_latent: np.ndarray
    user_side: FeatureMatrix | None = None
    item_side: FeatureMatrix | None = None
    variant: Variant = Variant.PLAIN_MF

    def __post_init__(self):
        self.user_latent = np.asarray(self.user_latent, dtype=np.float64)
        self.item_latent = np.asarray(self.item_latent, dtype=np.float64)
        self.variant = Variant(self.variant)
        if self.user_latent.ndim != 2 or self.item_latent.ndim != 2:
            raise ValueError("latent factors must be 2-D matrices")
        if self.user_latent.shape[1] != self.item_latent.shape[1]:
            raise ValueError("user and item latent factors must share their column count")
        if not (np.all(np.isfinite(self.user_latent)) and np.all(np.isfinite(self.item_latent))):
            raise ValueError("latent factors contain non-finite entries")
        if self.variant is not Variant.PLAIN_MF:
            if self.user_side is None or self.item_side is None:
                raise ValueError(f"variant {self.variant.value} requires both side feature matrices")
            if self.user_side.dim != self.item_side.dim:
                raise ValueError("user and item side features must share their column count")
            if self.user_side.rows != self.num_users or self.item_side.rows != self.num_items:
                raise ValueError("side feature row counts must match the latent matrices")
            expected = self.variant.feature_kind
            for side in (self.user_side, self.item_side):
                if side.kind is not expected:
                    raise ValueError(
                        f"variant {self.variant.value} expects {expected.value} features, "
                        f"got {side.kind.value}"
                    )

    @property
    def num_users(self) -> int:
        return self.user_latent.shape[0]

    @property
    def num_items(self) -> int:
        return self.item_latent.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.user_latent.shape[1]

    @property
    def feature_dim(self) -> int:
        """Side-feature column count; 0 for PLAIN_MF."""
        return 0 if self.user_side is None else self.user_side.dim

    def copy(self) -> "CfModel":
        return replace(
            self,
            user_latent=self.user_latent.copy(),
            item_latent=self.item_latent.copy(),
        )


class DomainClassifier:
    """Five-layer perceptron scoring how likely a representation is target-domain.

    Layer sizes are input, hidden, hidden, hidden, 1; hidden layers use a
    rectified-linear activation and the output a sigmoid. ``hidden_dim``
    defaults to 64 but is adjustable for small test builds.
    """

    __slots__ = ("weights", "biases", "target_kind")

    def __init__(self, weights, biases, target_kind: ClassifierTarget):
        if len(weights) != 4 or len(biases) != 4:
            raise ValueError("classifier needs exactly 4 weight matrices and 4 bias vectors")
        weights = [np.asarray(w, dtype=np.float64) for w in weights]
        biases = [np.asarray(b, dtype=np.float64) for b in biases]
        hidden = weights[0].shape[1]
        expected = [
            (weights[0].shape[0], hidden),
            (hidden, hidden),
            (hidden, hidden),
            (hidden, 1),
        ]
        for idx, (w, b, shape) in enumerate(zip(weights, biases, expected)):
            if w.shape != shape:
                raise ValueError(f"layer {idx} weight shape {w.shape}, expected {shape}")
            if b.shape != (shape[1],):
                raise ValueError(f"layer {idx} bias shape {b.shape}, expected ({shape[1]},)")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {idx} has non-finite parameters")
        self.weights = weights
        self.biases = biases
        self.target_kind = ClassifierTarget(target_kind)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.weights[0].shape[1]

    @classmethod
    def initialize(cls, input_dim, target_kind, rng, hidden_dim=64):
        """Fresh classifier with weights uniform in +/- 1/sqrt(fan_in)."""
        sizes = [(input_dim, hidden_dim), (hidden_dim, hidden_dim),
                 (hidden_dim, hidden_dim), (hidden_dim, 1)]
        weights, biases = [], []
        for fan_in, fan_out in sizes:
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, target_kind)

    def copy(self) -> "DomainClassifier":
        return DomainClassifier(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.target_kind,
        )

    def checksum(self) -> bytes:
        """Byte digest of all parameters, for mutation-isolation checks."""
        return b"".join(a.tobytes() for a in (*self.weights, *self.biases))


@dataclass(frozen=True)
class AdaptationConfig:
    """Learning rates, regularization, and schedule for the alignment loop.

    ``source_lr``/``target_lr`` scale the prediction-loss gradients of the
    respective domain, ``adversarial_lr`` the (ascended) classifier-loss
    gradient routed into the embeddings, and ``classifier_lr`` the descent
    on the classifier parameters themselves.
    """

    source_lr: float = 0.2
    target_lr: float = 0.2
    classifier_lr: float = 0.2
    adversarial_lr: float = 0.2
    source_reg: float = 0.005
    target_reg: float = 0.005
    epochs: int = 100
    negatives_per_positive: int = 1
    seed: int = 0
    # artifact knobs, not part of the published recipe
    cf_learning_rate: float = 0.01
    batch_size: int = 1024
    classifier_chunk: int = 65536

    def __post_init__(self):
        for name in ("source_lr", "target_lr", "classifier_lr", "adversarial_lr"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        # zero rates are allowed operationally (they disable a term); the
        # canonical published setting has all four strictly positive
        for name in ("source_reg", "target_reg"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.negatives_per_positive < 0:
            raise ValueError("negatives_per_positive must be >= 0")
        if self.cf_learning_rate <= 0 or self.batch_size <= 0 or self.classifier_chunk <= 0:
            raise ValueError("cf_learning_rate, batch_size, classifier_chunk must be > 0")


def concat_representation(latent_row, side_row, feature_dim=None, latent_dim=None):
    """Full entity representation: fixed feature slice first, trainable latent last.

    The feature-first order is a global convention: the adversarial gradient
    is later routed to the latent slice only, so the slice boundary must be
    unambiguous everywhere.

    Args:
        latent_row: 1-D trainable embedding.
        side_row: 1-D fixed feature vector.
        feature_dim, latent_dim: optional expected lengths; mismatch raises.

    Returns:
        1-D array ``[side_row, latent_row]`` of length len(side) + len(latent).
    """
    latent_row = np.asarray(latent_row, dtype=np.float64)
    side_row = np.asarray(side_row, dtype=np.float64)
    if latent_row.ndim != 1 or side_row.ndim != 1:
        raise ValueError("concat_representation expects 1-D rows")
    if feature_dim is not None and side_row.shape[0] != feature_dim:
        raise ValueError(f"side row length {side_row.shape[0]}, expected {feature_dim}")
    if latent_dim is not None and latent_row.shape[0] != latent_dim:
        raise ValueError(f"latent row length {latent_row.shape[0]}, expected {latent_dim}")
    return np.concatenate([side_row, latent_row])


def concat_representations(latents, sides):
    """Row-wise batch version of :func:`concat_representation`."""
    latents = np.asarray(latents, dtype=np.float64)
    sides = np.asarray(sides, dtype=np.float64)
    if latents.shape[0] != sides.shape[0]:
        raise ValueError("latent and side matrices must have the same number of rows")
    return np.hstack([sides, latents])
