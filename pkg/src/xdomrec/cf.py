"""Single-domain collaborative filtering: sigmoid dot-product prediction,
cross-entropy loss with Frobenius regularization, analytic gradients, and
Adam training for all model variants.

The variants differ only in which fixed side features are attached; the
score is always the inner product of the full representations
``[side_u, latent_u] . [side_i, latent_i]``, which splits into a fixed
side-side term plus the trainable latent-latent term.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import FLOAT_FMT, sample_negatives
from .optim import AdamState, adam_step
from .types import AdaptationConfig, CfModel, Domain, FeatureMatrix, InteractionSet, Variant

__all__ = [
    "PROB_EPS",
    "sigmoid",
    "predict",
    "score_pairs",
    "user_score_row",
    "cf_loss",
    "cf_gradients",
    "train_cf",
    "epoch_training_pairs",
    "save_cf_model",
    "load_cf_model",
]

PROB_EPS = 1e-7  # probability clamp keeping every log finite


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_index(name, value, bound):
    if not 0 <= value < bound:
        raise ValueError(f"{name} index {value} out of range [0, {bound})")


def score_pairs(model: CfModel, users, items) -> np.ndarray:
    """Raw (pre-sigmoid) scores for aligned index arrays."""
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    scores = np.einsum("ij,ij->i", model.user_latent[users], model.item_latent[items])
    if model.user_side is not None:
        scores = scores + np.einsum(
            "ij,ij->i", model.user_side.values[users], model.item_side.values[items]
        )
    return scores


def user_score_row(model: CfModel, user: int) -> np.ndarray:
    """Raw scores of one user against every item."""
    _check_index("user", user, model.num_users)
    row = model.item_latent @ model.user_latent[user]
    if model.user_side is not None:
        row = row + model.item_side.values @ model.user_side.values[user]
    return row


def predict(model: CfModel, user: int, item: int) -> float:
    """Interaction probability, clamped into [PROB_EPS, 1 - PROB_EPS]."""
    _check_index("user", user, model.num_users)
    _check_index("item", item, model.num_items)
    p = sigmoid(score_pairs(model, [user], [item]))[0]
    return float(np.clip(p, PROB_EPS, 1.0 - PROB_EPS))


def _canonical(pairs) -> np.ndarray:
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    return arr[order]


def _regularizer(model: CfModel, reg: float) -> float:
    return reg * (np.sum(model.user_latent ** 2) + np.sum(model.item_latent ** 2))


def cf_loss(model: CfModel, positives, negatives, reg: float) -> float:
    """Cross-entropy over the given pairs plus Frobenius regularization.

    Positives contribute ``-log p``, negatives ``-log (1 - p)``, with the
    probability clamp keeping both finite. Pairs are summed in canonical
    (user, item) order so the value is invariant under batch permutation.
    """
    if reg < 0:
        raise ValueError("regularization coefficient must be >= 0")
    total = 0.0
    pos = _canonical(positives)
    if pos.size:
        p = np.clip(sigmoid(score_pairs(model, pos[:, 0], pos[:, 1])), PROB_EPS, 1 - PROB_EPS)
        total -= float(np.sum(np.log(p)))
    neg = _canonical(negatives)
    if neg.size:
        p = np.clip(sigmoid(score_pairs(model, neg[:, 0], neg[:, 1])), PROB_EPS, 1 - PROB_EPS)
        total -= float(np.sum(np.log(1.0 - p)))
    return total + _regularizer(model, reg)


def _label_gradients(model: CfModel, users, items, labels, reg):
    """Gradients of the cross-entropy-plus-reg loss w.r.t. both latent matrices.

    Only the latent slices learn; side features are fixed anchors and get no
    gradient. Per pair the residual is (predicted - label); accumulation runs
    in the given order (callers pass canonically sorted pairs).
    """
    grad_user = 2.0 * reg * model.user_latent
    grad_item = 2.0 * reg * model.item_latent
    if len(users):
        residual = sigmoid(score_pairs(model, users, items)) - labels
        np.add.at(grad_user, users, residual[:, None] * model.item_latent[items])
        np.add.at(grad_item, items, residual[:, None] * model.user_latent[users])
    return grad_user, grad_item


def cf_gradients(model: CfModel, positives, negatives, reg: float):
    """Analytic gradients of :func:`cf_loss` w.r.t. user and item latents."""
    if reg < 0:
        raise ValueError("regularization coefficient must be >= 0")
    pos = _canonical(positives)
    neg = _canonical(negatives)
    pairs = np.vstack([pos, neg])
    labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    order = np.lexsort((labels, pairs[:, 1], pairs[:, 0])) if pairs.size else np.empty(0, np.int64)
    return _label_gradients(model, pairs[order, 0], pairs[order, 1], labels[order], reg)


def epoch_training_pairs(train: InteractionSet, negatives_per_positive: int, rng):
    """One epoch's supervision: all positives plus freshly sampled negatives.

    For each user, ``negatives_per_positive`` negatives are drawn per train
    positive (fewer when the user has nearly exhausted the catalog). Users
    are visited in ascending order so the draw is reproducible under rng.
    """
    pos_pairs = train.pairs
    neg_chunks = []
    if negatives_per_positive > 0:
        for user in range(train.num_users):
            count = len(train.items_of(user))
            if count == 0:
                continue
            drawn = sample_negatives(train, user, count * negatives_per_positive, rng)
            if drawn.size:
                chunk = np.empty((drawn.size, 2), dtype=np.int64)
                chunk[:, 0] = user
                chunk[:, 1] = drawn
                neg_chunks.append(chunk)
    neg_pairs = np.vstack(neg_chunks) if neg_chunks else np.empty((0, 2), dtype=np.int64)
    return pos_pairs, neg_pairs


def train_cf(
    train: InteractionSet,
    variant: Variant = Variant.PLAIN_MF,
    user_side: FeatureMatrix | None = None,
    item_side: FeatureMatrix | None = None,
    latent_dim: int = 128,
    config: AdaptationConfig | None = None,
    reg: float | None = None,
    epochs: int | None = None,
    seed: int | None = None,
):
    """Train one domain's CF model with Adam on the cross-entropy loss.

    Latents start i.i.d. uniform in [-0.01, 0.01]. Each epoch resamples
    negatives, shuffles all supervision pairs, and steps Adam per mini-batch.
    Deterministic given the seed.

    Args:
        train: positives to fit.
        variant: which side features the model carries (may be PLAIN_MF).
        user_side, item_side: fixed feature matrices for non-plain variants.
        latent_dim: width of the trainable embeddings.
        config: schedule and rates; defaults to ``AdaptationConfig()``.
        reg: regularization override (defaults to the config's source/target
            coefficient according to ``train.domain_tag``).
        epochs, seed: overrides of the config values.

    Returns:
        (model, epoch_losses) where epoch_losses[e] is the epoch's summed
        pair loss plus the end-of-epoch regularizer.

    Raises:
        RuntimeError: if the loss goes non-finite (divergence).
    """
    config = config or AdaptationConfig()
    if reg is None:
        reg = config.source_reg if train.domain_tag is Domain.SOURCE else config.target_reg
    epochs = config.epochs if epochs is None else epochs
    seed = config.seed if seed is None else seed

    rng = np.random.default_rng(seed)
    init = lambda n: rng.uniform(-0.01, 0.01, size=(n, latent_dim))
    model = CfModel(
        user_latent=init(train.num_users),
        item_latent=init(train.num_items),
        user_side=user_side,
        item_side=item_side,
        variant=variant,
    )
    user_state = AdamState.for_param(model.user_latent, learning_rate=config.cf_learning_rate)
    item_state = AdamState.for_param(model.item_latent, learning_rate=config.cf_learning_rate)

    losses = []
    for epoch in range(epochs):
        pos_pairs, neg_pairs = epoch_training_pairs(train, config.negatives_per_positive, rng)
        pairs = np.vstack([pos_pairs, neg_pairs])
        labels = np.concatenate([np.ones(len(pos_pairs)), np.zeros(len(neg_pairs))])
        order = rng.permutation(len(pairs))
        pairs, labels = pairs[order], labels[order]

        data_loss = 0.0
        for start in range(0, len(pairs), config.batch_size):
            sl = slice(start, start + config.batch_size)
            users, items, batch_labels = pairs[sl, 0], pairs[sl, 1], labels[sl]
            p = np.clip(sigmoid(score_pairs(model, users, items)), PROB_EPS, 1 - PROB_EPS)
            data_loss -= float(np.sum(np.where(batch_labels > 0, np.log(p), np.log(1.0 - p))))
            grad_user, grad_item = _label_gradients(model, users, items, batch_labels, reg)
            model.user_latent, user_state = adam_step(user_state, model.user_latent, grad_user)
            model.item_latent, item_state = adam_step(item_state, model.item_latent, grad_item)

        epoch_loss = data_loss + _regularizer(model, reg)
        if not np.isfinite(epoch_loss):
            raise RuntimeError(f"training diverged: non-finite loss at epoch {epoch}")
        losses.append(epoch_loss)
    return model, losses


def save_cf_model(model: CfModel, path):
    """Checkpoint: header with shapes and variant, then both latent blocks.

    Side features are inputs, not learned state; they are re-attached from
    their own files at load time.
    """
    path = Path(path)

    def write_block(fh, matrix):
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(FLOAT_FMT % v for v in row) + "\n")

    with path.open("w", encoding="utf-8") as fh:
        fh.write(
            f"cfmodel {model.variant.value} {model.num_users} {model.num_items} "
            f"{model.feature_dim} {model.latent_dim}\n"
        )
        write_block(fh, model.user_latent)
        write_block(fh, model.item_latent)


def _read_block(fh, path):
    header = fh.readline().split()
    if len(header) != 2:
        raise ValueError(f"{path}: malformed matrix block header")
    rows, dim = int(header[0]), int(header[1])
    block = np.empty((rows, dim))
    for r in range(rows):
        vals = fh.readline().split()
        if len(vals) != dim:
            raise ValueError(f"{path}: matrix row {r} has {len(vals)} values, expected {dim}")
        block[r] = [float(v) for v in vals]
    return block


def load_cf_model(path, user_side=None, item_side=None) -> CfModel:
    """Load a checkpoint and re-attach the given side features.

    The attached features must match the checkpoint's variant kind, row
    counts, and feature width.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 6 or header[0] != "cfmodel":
            raise ValueError(f"{path}: not a cf model checkpoint")
        variant = Variant(header[1])
        num_users, num_items, feature_dim, latent_dim = map(int, header[2:])
        user_latent = _read_block(fh, path)
        item_latent = _read_block(fh, path)
    if user_latent.shape != (num_users, latent_dim) or item_latent.shape != (num_items, latent_dim):
        raise ValueError(f"{path}: latent block shapes disagree with the header")
    if variant is not Variant.PLAIN_MF:
        if user_side is None or item_side is None:
            raise ValueError(f"{path}: variant {variant.value} needs side features attached")
        if user_side.dim != feature_dim:
            raise ValueError(
                f"{path}: side feature width {user_side.dim} != checkpoint width {feature_dim}"
            )
    return CfModel(
        user_latent=user_latent,
        item_latent=item_latent,
        user_side=user_side if variant is not Variant.PLAIN_MF else None,
        item_side=item_side if variant is not Variant.PLAIN_MF else None,
        variant=variant,
    )
