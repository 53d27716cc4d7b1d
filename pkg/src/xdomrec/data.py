"""Loading, splitting, and sampling of interaction and feature data.

File formats (all plain UTF-8 text):

* interactions: one ``user_id<TAB>item_id`` pair per line; ids are arbitrary
  strings, re-indexed densely in order of first appearance.
* feature matrix: header line ``rows dim``, then one row per line of
  whitespace-separated decimals.
* split directory: ``train.tsv`` / ``validation.tsv`` / ``test.tsv`` holding
  dense integer index pairs, plus ``manifest.json`` recording the global
  entity counts, domain tag, and split seed.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import Domain, FeatureKind, FeatureMatrix, InteractionSet

__all__ = [
    "SplitDataset",
    "load_interactions",
    "load_interactions_with_ids",
    "write_interactions",
    "split_dataset",
    "split_sizes",
    "sample_negatives",
    "derive_user_visual_features",
    "load_feature_matrix",
    "save_feature_matrix",
    "write_split",
    "read_split",
]

FLOAT_FMT = "%.17g"  # round-trips float64 exactly


@dataclass(frozen=True)
class SplitDataset:
    """Disjoint train/validation/test partition of one domain's positives."""

    train: InteractionSet
    validation: InteractionSet
    test: InteractionSet
    split_seed: int

    def __post_init__(self):
        sets = (self.train, self.validation, self.test)
        dims = {(s.num_users, s.num_items, s.domain_tag) for s in sets}
        if len(dims) != 1:
            raise ValueError("split parts must share entity counts and domain tag")
        total = sum(s.num_positives for s in sets)
        merged = np.vstack([s.pairs for s in sets])
        if np.unique(merged, axis=0).shape[0] != total:
            raise ValueError("split parts overlap")


def load_interactions_with_ids(path, domain_tag=Domain.SOURCE):
    """Parse a raw-id interaction TSV, returning the set plus the id lookups.

    Returns:
        (InteractionSet, user_ids, item_ids) where the id lists map dense
        index -> original string id.
    """
    path = Path(path)
    user_index, item_index = {}, {}
    user_ids, item_ids = [], []
    pairs = []
    seen = set()
    duplicates = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise ValueError(f"{path}:{lineno}: expected 'user_id<TAB>item_id', got {line!r}")
            uid, iid = fields
            u = user_index.get(uid)
            if u is None:
                u = user_index[uid] = len(user_ids)
                user_ids.append(uid)
            i = item_index.get(iid)
            if i is None:
                i = item_index[iid] = len(item_ids)
                item_ids.append(iid)
            if (u, i) in seen:
                duplicates += 1
                continue
            seen.add((u, i))
            pairs.append((u, i))
    if not pairs:
        raise ValueError(f"{path}: no interactions found")
    if duplicates:
        warnings.warn(f"{path}: dropped {duplicates} duplicate interaction line(s)")
    interactions = InteractionSet(len(user_ids), len(item_ids), pairs, domain_tag)
    return interactions, user_ids, item_ids


def load_interactions(path, domain_tag=Domain.SOURCE) -> InteractionSet:
    """Parse a raw-id interaction TSV into a densely indexed InteractionSet."""
    interactions, _, _ = load_interactions_with_ids(path, domain_tag)
    return interactions


def write_interactions(interactions: InteractionSet, path, user_ids=None, item_ids=None):
    """Write pairs as TSV, using the given id lookups or the dense indices."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for u, i in interactions.pairs:
            uid = user_ids[u] if user_ids is not None else str(u)
            iid = item_ids[i] if item_ids is not None else str(i)
            fh.write(f"{uid}\t{iid}\n")


def split_sizes(n: int) -> tuple[int, int, int]:
    """Deterministic 8:1:1 rounding rule: validation and test get n // 10 each."""
    tenth = n // 10
    return n - 2 * tenth, tenth, tenth


def split_dataset(interactions: InteractionSet, seed: int) -> SplitDataset:
    """Uniform global 8:1:1 partition of the positives.

    The split is over all positives (not per-user); users can land with empty
    train rows and are retained. Deterministic given the seed.
    """
    n = interactions.num_positives
    if n < 10:
        raise ValueError(f"need at least 10 positives to split 8:1:1, got {n}")
    n_train, n_val, n_test = split_sizes(n)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    parts = (
        order[:n_train],
        order[n_train:n_train + n_val],
        order[n_train + n_val:],
    )
    make = lambda idx: InteractionSet(
        interactions.num_users,
        interactions.num_items,
        interactions.pairs[np.sort(idx)],
        interactions.domain_tag,
    )
    return SplitDataset(make(parts[0]), make(parts[1]), make(parts[2]), split_seed=seed)


def sample_negatives(train: InteractionSet, user: int, n: int, rng) -> np.ndarray:
    """Draw up to ``n`` non-interacted items for the user, uniformly without replacement.

    Returns all non-interacted items when fewer than ``n`` exist.
    """
    positives = train.items_of(user)  # range-checks user
    if n == 0:
        return np.empty(0, dtype=np.int64)
    available = np.setdiff1d(np.arange(train.num_items, dtype=np.int64), positives,
                             assume_unique=True)
    if available.size == 0:
        return available
    if available.size <= n:
        return available
    return rng.choice(available, size=n, replace=False)


def derive_user_visual_features(item_features: FeatureMatrix, train: InteractionSet) -> FeatureMatrix:
    """Per-user visual features: mean of the feature rows of the user's train items.

    Users with no train interactions get the zero vector (the mean is
    undefined on an empty set).
    """
    if item_features.rows != train.num_items:
        raise ValueError(
            f"item feature rows ({item_features.rows}) != num_items ({train.num_items})"
        )
    sums = np.zeros((train.num_users, item_features.dim))
    counts = np.zeros(train.num_users)
    if train.pairs.size:
        users = train.pairs[:, 0]
        items = train.pairs[:, 1]
        np.add.at(sums, users, item_features.values[items])
        np.add.at(counts, users, 1.0)
    out = np.divide(sums, counts[:, None], out=np.zeros_like(sums), where=counts[:, None] > 0)
    return FeatureMatrix(out, FeatureKind.VISUAL)


def load_feature_matrix(path, expected_rows=None, kind=FeatureKind.TEXTUAL) -> FeatureMatrix:
    """Read the header-plus-floats feature file format.

    Rejects row-count mismatches against ``expected_rows`` and any
    non-finite entry, naming the offending row and column.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be 'rows dim'")
        try:
            rows, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ValueError(f"{path}: header must be two integers, got {header!r}") from None
        if rows <= 0 or dim <= 0:
            raise ValueError(f"{path}: header declares empty matrix {rows}x{dim}")
        tokens = fh.read().split()
    try:
        flat = np.array(tokens, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: could not parse matrix body: {exc}") from None
    if flat.size != rows * dim:
        raise ValueError(f"{path}: expected {rows * dim} values, found {flat.size}")
    values = flat.reshape(rows, dim)
    if expected_rows is not None and rows != expected_rows:
        raise ValueError(f"{path}: has {rows} rows, expected {expected_rows}")
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(f"{path}: non-finite value at row {bad[0]}, column {bad[1]}")
    return FeatureMatrix(values, kind)


def save_feature_matrix(features: FeatureMatrix, path):
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{features.rows} {features.dim}\n")
        for row in features.values:
            fh.write(" ".join(FLOAT_FMT % v for v in row))
            fh.write("\n")


def write_split(split: SplitDataset, directory):
    """Write the three index-pair TSVs plus the manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", split.train), ("validation", split.validation),
                       ("test", split.test)):
        write_interactions(part, directory / f"{name}.tsv")
    manifest = {
        "num_users": split.train.num_users,
        "num_items": split.train.num_items,
        "domain": split.train.domain_tag.name.lower(),
        "split_seed": split.split_seed,
        "sizes": {
            "train": split.train.num_positives,
            "validation": split.validation.num_positives,
            "test": split.test.num_positives,
        },
    }
    with (directory / "manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_split(directory) -> SplitDataset:
    """Load a split directory written by :func:`write_split`."""
    directory = Path(directory)
    with (directory / "manifest.json").open("r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    num_users = manifest["num_users"]
    num_items = manifest["num_items"]
    tag = Domain[manifest["domain"].upper()]

    def load_part(name):
        pairs = []
        with (directory / f"{name}.tsv").open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise ValueError(f"{directory / name}.tsv:{lineno}: malformed pair {line!r}")
                pairs.append((int(fields[0]), int(fields[1])))
        return InteractionSet(num_users, num_items, pairs, tag)

    return SplitDataset(
        load_part("train"), load_part("validation"), load_part("test"),
        split_seed=manifest["split_seed"],
    )
