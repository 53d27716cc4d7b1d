"""Adversarial cross-domain alignment.

Two pre-trained CF models (source and target) are coupled through a pair of
domain-classifier perceptrons, one for users and one for items. Each epoch
the classifiers descend their discrimination loss while the trainable latent
slices of the entity representations ascend it, with the fixed side features
acting as anchors that never move. Prediction losses keep both models
accurate in their own domain: the source with sampled negatives, the target
with positives only.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cf import PROB_EPS, cf_gradients, epoch_training_pairs, sigmoid
from .data import FLOAT_FMT, SplitDataset
from .metrics import DEFAULT_KS, SELECTION_K, evaluate
from .optim import AdamState, adam_step, sgd_combined_step, sgd_step
from .types import (
    AdaptationConfig,
    CfModel,
    ClassifierTarget,
    DomainClassifier,
    InteractionSet,
    concat_representations,
)

__all__ = [
    "ClassifierGradients",
    "AdapterState",
    "classifier_forward",
    "classifier_loss",
    "classifier_gradients",
    "user_representations",
    "item_representations",
    "adaptation_epoch",
    "cf_sgd_run",
    "train_fdar",
    "train_domain_probe",
    "save_classifier",
    "load_classifier",
]


@dataclass(frozen=True)
class ClassifierGradients:
    weights: list
    biases: list


def _forward_cached(clf: DomainClassifier, inputs):
    """Batch forward pass keeping pre-activations for backprop."""
    w1, w2, w3, w4 = clf.weights
    b1, b2, b3, b4 = clf.biases
    z1 = inputs @ w1 + b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ w2 + b2
    h2 = np.maximum(z2, 0.0)
    z3 = h2 @ w3 + b3
    h3 = np.maximum(z3, 0.0)
    z4 = h3 @ w4 + b4
    prob = sigmoid(z4[:, 0])
    return prob, (z1, h1, z2, h2, z3, h3)


def classifier_forward(clf: DomainClassifier, x) -> float:
    """Probability that a single entity representation is target-domain."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (clf.input_dim,):
        raise ValueError(f"input length {x.shape}, expected ({clf.input_dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite entries")
    prob, _ = _forward_cached(clf, x[None, :])
    return float(np.clip(prob[0], PROB_EPS, 1.0 - PROB_EPS))


def classifier_loss(clf: DomainClassifier, target_inputs, source_inputs) -> float:
    """Discrimination loss: -sum log d(target) - sum log (1 - d(source))."""
    target_inputs = np.asarray(target_inputs, dtype=np.float64).reshape(-1, clf.input_dim)
    source_inputs = np.asarray(source_inputs, dtype=np.float64).reshape(-1, clf.input_dim)
    if len(target_inputs) == 0 and len(source_inputs) == 0:
        raise ValueError("at least one of the batches must be nonempty")
    total = 0.0
    if len(target_inputs):
        prob, _ = _forward_cached(clf, target_inputs)
        total -= float(np.sum(np.log(np.clip(prob, PROB_EPS, 1.0 - PROB_EPS))))
    if len(source_inputs):
        prob, _ = _forward_cached(clf, source_inputs)
        total -= float(np.sum(np.log(np.clip(1.0 - prob, PROB_EPS, 1.0 - PROB_EPS))))
    return total


def classifier_gradients(clf: DomainClassifier, target_inputs, source_inputs):
    """Backprop of :func:`classifier_loss` through all five layers.

    Returns:
        (phi_grads, grad_target_inputs, grad_source_inputs): the gradients of
        all classifier parameters, plus the gradient of the loss with respect
        to every input row. Callers route only the latent slice of the input
        gradients back to the embeddings; the feature slice is discarded.
    """
    target_inputs = np.asarray(target_inputs, dtype=np.float64).reshape(-1, clf.input_dim)
    source_inputs = np.asarray(source_inputs, dtype=np.float64).reshape(-1, clf.input_dim)
    n_target = len(target_inputs)
    if n_target == 0 and len(source_inputs) == 0:
        raise ValueError("at least one of the batches must be nonempty")
    inputs = np.vstack([target_inputs, source_inputs])
    labels = np.concatenate([np.ones(n_target), np.zeros(len(source_inputs))])

    prob, (z1, h1, z2, h2, z3, h3) = _forward_cached(clf, inputs)
    w1, w2, w3, w4 = clf.weights

    delta4 = (prob - labels)[:, None]
    grad_w4 = h3.T @ delta4
    grad_b4 = delta4.sum(axis=0)
    delta3 = (delta4 @ w4.T) * (z3 > 0)
    grad_w3 = h2.T @ delta3
    grad_b3 = delta3.sum(axis=0)
    delta2 = (delta3 @ w3.T) * (z2 > 0)
    grad_w2 = h1.T @ delta2
    grad_b2 = delta2.sum(axis=0)
    delta1 = (delta2 @ w2.T) * (z1 > 0)
    grad_w1 = inputs.T @ delta1
    grad_b1 = delta1.sum(axis=0)
    grad_inputs = delta1 @ w1.T

    phi = ClassifierGradients(
        weights=[grad_w1, grad_w2, grad_w3, grad_w4],
        biases=[grad_b1, grad_b2, grad_b3, grad_b4],
    )
    return phi, grad_inputs[:n_target], grad_inputs[n_target:]


def _chunked_classifier_gradients(clf, target_inputs, source_inputs, chunk):
    """Accumulate classifier gradients over fixed-size entity chunks.

    Chunk boundaries are deterministic, so the result is identical to the
    single-shot computation up to float summation order, which is also fixed.
    """
    n_t, n_s = len(target_inputs), len(source_inputs)
    if n_t + n_s <= chunk:
        return classifier_gradients(clf, target_inputs, source_inputs)
    phi_w = [np.zeros_like(w) for w in clf.weights]
    phi_b = [np.zeros_like(b) for b in clf.biases]
    grads_t = np.empty_like(target_inputs)
    grads_s = np.empty_like(source_inputs)
    for start in range(0, n_t, chunk):
        phi, g_t, _ = classifier_gradients(clf, target_inputs[start:start + chunk],
                                           source_inputs[:0])
        grads_t[start:start + chunk] = g_t
        for acc, g in zip(phi_w, phi.weights):
            acc += g
        for acc, g in zip(phi_b, phi.biases):
            acc += g
    for start in range(0, n_s, chunk):
        phi, _, g_s = classifier_gradients(clf, target_inputs[:0],
                                           source_inputs[start:start + chunk])
        grads_s[start:start + chunk] = g_s
        for acc, g in zip(phi_w, phi.weights):
            acc += g
        for acc, g in zip(phi_b, phi.biases):
            acc += g
    return ClassifierGradients(weights=phi_w, biases=phi_b), grads_t, grads_s


def _side_values(model: CfModel, entity: str) -> np.ndarray:
    side = model.user_side if entity == "user" else model.item_side
    if side is None:
        count = model.num_users if entity == "user" else model.num_items
        return np.zeros((count, 0))
    return side.values


def user_representations(model: CfModel) -> np.ndarray:
    """All user rows as [features, latents]."""
    return concat_representations(model.user_latent, _side_values(model, "user"))


def item_representations(model: CfModel) -> np.ndarray:
    return concat_representations(model.item_latent, _side_values(model, "item"))


@dataclass
class AdapterState:
    """Everything the alignment loop mutates, plus the data it trains on."""

    source_model: CfModel
    target_model: CfModel
    user_classifier: DomainClassifier
    item_classifier: DomainClassifier
    config: AdaptationConfig
    source_train: InteractionSet
    target_train: InteractionSet
    epoch: int = 0

    def __post_init__(self):
        src, tgt = self.source_model, self.target_model
        if src.latent_dim != tgt.latent_dim or src.feature_dim != tgt.feature_dim:
            raise ValueError("source and target models must share latent and feature widths")
        if src.variant is not tgt.variant:
            raise ValueError("source and target models must be the same variant")
        rep_dim = src.feature_dim + src.latent_dim
        for clf, kind in ((self.user_classifier, ClassifierTarget.USER_CLASSIFIER),
                          (self.item_classifier, ClassifierTarget.ITEM_CLASSIFIER)):
            if clf.input_dim != rep_dim:
                raise ValueError(
                    f"classifier input width {clf.input_dim} != representation width {rep_dim}"
                )
            if clf.target_kind is not kind:
                raise ValueError(f"classifier target kind {clf.target_kind} misplaced")
        if (self.source_train.num_users, self.source_train.num_items) != (
                src.num_users, src.num_items):
            raise ValueError("source train set entity counts disagree with the source model")
        if (self.target_train.num_users, self.target_train.num_items) != (
                tgt.num_users, tgt.num_items):
            raise ValueError("target train set entity counts disagree with the target model")

    def copy(self) -> "AdapterState":
        return AdapterState(
            source_model=self.source_model.copy(),
            target_model=self.target_model.copy(),
            user_classifier=self.user_classifier.copy(),
            item_classifier=self.item_classifier.copy(),
            config=self.config,
            source_train=self.source_train,
            target_train=self.target_train,
            epoch=self.epoch,
        )


def _require_finite(name, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise RuntimeError(f"non-finite values in {name}; adaptation aborted")


def adaptation_epoch(state: AdapterState, rng) -> AdapterState:
    """One full pass of the published simultaneous update.

    Order: source prediction gradients (positives plus sampled negatives),
    target prediction gradients (positives only), both classifier passes over
    all entities, then one combined step per latent matrix and one descent
    step per classifier. The only rng consumption is the source negative
    sampling, so runs are reproducible given the generator state.
    """
    cfg = state.config
    src, tgt = state.source_model, state.target_model
    k1 = src.feature_dim

    pos_s, neg_s = epoch_training_pairs(state.source_train, cfg.negatives_per_positive, rng)
    grad_user_s, grad_item_s = cf_gradients(src, pos_s, neg_s, cfg.source_reg)
    grad_user_t, grad_item_t = cf_gradients(
        tgt, state.target_train.pairs, (), cfg.target_reg)

    phi_u, adv_user_t, adv_user_s = _chunked_classifier_gradients(
        state.user_classifier, user_representations(tgt), user_representations(src),
        cfg.classifier_chunk)
    phi_i, adv_item_t, adv_item_s = _chunked_classifier_gradients(
        state.item_classifier, item_representations(tgt), item_representations(src),
        cfg.classifier_chunk)

    src.user_latent = sgd_combined_step(
        src.user_latent, grad_user_s, adv_user_s[:, k1:], cfg.source_lr, cfg.adversarial_lr)
    src.item_latent = sgd_combined_step(
        src.item_latent, grad_item_s, adv_item_s[:, k1:], cfg.source_lr, cfg.adversarial_lr)
    tgt.user_latent = sgd_combined_step(
        tgt.user_latent, grad_user_t, adv_user_t[:, k1:], cfg.target_lr, cfg.adversarial_lr)
    tgt.item_latent = sgd_combined_step(
        tgt.item_latent, grad_item_t, adv_item_t[:, k1:], cfg.target_lr, cfg.adversarial_lr)
    _require_finite("source user latents", src.user_latent)
    _require_finite("source item latents", src.item_latent)
    _require_finite("target user latents", tgt.user_latent)
    _require_finite("target item latents", tgt.item_latent)

    for clf, phi in ((state.user_classifier, phi_u), (state.item_classifier, phi_i)):
        clf.weights = [sgd_step(w, g, cfg.classifier_lr) for w, g in zip(clf.weights, phi.weights)]
        clf.biases = [sgd_step(b, g, cfg.classifier_lr) for b, g in zip(clf.biases, phi.biases)]
        name = f"{clf.target_kind.value} classifier parameters"
        _require_finite(name, *clf.weights, *clf.biases)

    state.epoch += 1
    return state


def cf_sgd_run(model: CfModel, train: InteractionSet, reg, rate, epochs,
               negatives_per_positive, rng) -> CfModel:
    """Reference single-domain loop using the same plain-gradient updates.

    With the adversarial and classifier rates at zero an adaptation run is
    bitwise identical to two of these runs (one per domain, matching seeds).
    Pass ``negatives_per_positive=0`` for positives-only supervision.
    """
    for _ in range(epochs):
        pos, neg = epoch_training_pairs(train, negatives_per_positive, rng)
        grad_user, grad_item = cf_gradients(model, pos, neg, reg)
        model.user_latent = sgd_step(model.user_latent, grad_user, rate)
        model.item_latent = sgd_step(model.item_latent, grad_item, rate)
    return model


def train_fdar(
    source_model: CfModel,
    target_model: CfModel,
    source_split: SplitDataset,
    target_split: SplitDataset,
    config: AdaptationConfig,
    hidden_dim: int = 64,
    ks=DEFAULT_KS,
):
    """Run the alignment loop, keeping the epoch with the best validation F1@10.

    The models are copied, so the (pre-trained) inputs stay intact. Epoch 0
    (no adaptation) participates in the selection, which also makes a
    zero-epoch run meaningful.

    Returns:
        (best_state, best_validation_report, history) where history[e] is the
        validation F1@10 after e epochs.
    """
    rng = np.random.default_rng(config.seed)
    rep_dim = source_model.feature_dim + source_model.latent_dim
    state = AdapterState(
        source_model=source_model.copy(),
        target_model=target_model.copy(),
        user_classifier=DomainClassifier.initialize(
            rep_dim, ClassifierTarget.USER_CLASSIFIER, rng, hidden_dim),
        item_classifier=DomainClassifier.initialize(
            rep_dim, ClassifierTarget.ITEM_CLASSIFIER, rng, hidden_dim),
        config=config,
        source_train=source_split.train,
        target_train=target_split.train,
    )

    def selection_f1(model):
        report = evaluate(model, target_split.validation, target_split.train,
                          ks=(SELECTION_K,))
        return report.per_k[SELECTION_K].f1

    best_f1 = selection_f1(state.target_model)
    best_state = state.copy()
    history = [best_f1]
    for _ in range(config.epochs):
        adaptation_epoch(state, rng)
        f1 = selection_f1(state.target_model)
        history.append(f1)
        if f1 > best_f1:
            best_f1 = f1
            best_state = state.copy()
    best_report = evaluate(best_state.target_model, target_split.validation,
                           target_split.train, ks=ks)
    return best_state, best_report, history


def save_classifier(clf: DomainClassifier, path):
    """Text checkpoint: kind header plus the eight parameter blocks."""

    def write_block(fh, matrix):
        matrix = np.atleast_2d(matrix)
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(FLOAT_FMT % v for v in row) + "\n")

    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"classifier {clf.target_kind.value} {clf.input_dim} {clf.hidden_dim}\n")
        for w, b in zip(clf.weights, clf.biases):
            write_block(fh, w)
            write_block(fh, b)


def load_classifier(path) -> DomainClassifier:
    def read_block(fh):
        rows, dim = map(int, fh.readline().split())
        return np.array(
            [[float(v) for v in fh.readline().split()] for _ in range(rows)]
        ).reshape(rows, dim)

    with Path(path).open("r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "classifier":
            raise ValueError(f"{path}: not a classifier checkpoint")
        kind = ClassifierTarget(header[1])
        weights, biases = [], []
        for _ in range(4):
            weights.append(read_block(fh))
            biases.append(read_block(fh)[0])
    return DomainClassifier(weights, biases, kind)


def train_domain_probe(source_reps, target_reps, seed, hidden_dim=32,
                       epochs=300, learning_rate=0.01, holdout=0.3) -> float:
    """Held-out accuracy of a freshly trained domain classifier.

    Splits each domain's entities into probe-train and probe-test, trains a
    new classifier with Adam on the discrimination loss, and reports accuracy
    on the held-out entities. Values near 0.5 mean aligned representations.
    """
    source_reps = np.asarray(source_reps, dtype=np.float64)
    target_reps = np.asarray(target_reps, dtype=np.float64)
    rng = np.random.default_rng(seed)

    def split(reps):
        order = rng.permutation(len(reps))
        n_test = max(1, int(round(holdout * len(reps))))
        return reps[order[n_test:]], reps[order[:n_test]]

    src_train, src_test = split(source_reps)
    tgt_train, tgt_test = split(target_reps)

    clf = DomainClassifier.initialize(
        source_reps.shape[1], ClassifierTarget.USER_CLASSIFIER, rng, hidden_dim)
    states = [AdamState.for_param(p, learning_rate=learning_rate)
              for p in (*clf.weights, *clf.biases)]
    for _ in range(epochs):
        phi, _, _ = classifier_gradients(clf, tgt_train, src_train)
        grads = [*phi.weights, *phi.biases]
        params = [*clf.weights, *clf.biases]
        updated = []
        for idx, (param, grad) in enumerate(zip(params, grads)):
            new_param, states[idx] = adam_step(states[idx], param, grad)
            updated.append(new_param)
        clf.weights = updated[:4]
        clf.biases = updated[4:]

    prob_src, _ = _forward_cached(clf, src_test)
    prob_tgt, _ = _forward_cached(clf, tgt_test)
    correct = float(np.sum(prob_src < 0.5) + np.sum(prob_tgt >= 0.5))
    return correct / (len(src_test) + len(tgt_test))
