"""Multi-task span classifier: one head over slot labels, one over weak labels.

Both heads share the span representation. Predicted slot probabilities are
multiplied elementwise by the known-label mask (and deliberately not
renormalized) so undiscovered slots carry exactly zero mass during loss
calculation and sample selection. The blended loss is
``(1 - alpha) * CE(slot) + alpha * CE(weak)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import CandidateSpan, Utterance
from .encoder import (
    GradAccumulator,
    HashAttentionBackend,
    SpanProjection,
    SpanRepresentation,
    encode_span,
)
from .seeding import derive_seed

PROB_FLOOR = 1e-12
HEAD_INIT_STD = 0.02

MODE_NO_WEAK = "no_weak"
MODE_MULTITASK = "multitask"
MODE_PRETRAIN = "pretrain"
TRAINING_MODES = (MODE_NO_WEAK, MODE_MULTITASK, MODE_PRETRAIN)


class ClassifierError(ValueError):
    """Raised for label/shape mismatches and invalid training configuration."""


@dataclass
class TrainingConfig:
    alpha: float = 0.05
    learning_rate: float = 5e-5
    batch_size: int = 128
    max_initial_epochs: int = 30
    epochs_per_iteration: int = 2
    seed: int = 0
    mode: str = MODE_MULTITASK

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ClassifierError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.learning_rate <= 0:
            raise ClassifierError(f"learning rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1 or self.max_initial_epochs < 1 or self.epochs_per_iteration < 1:
            raise ClassifierError("batch size and epoch counts must be positive")
        if self.mode not in TRAINING_MODES:
            raise ClassifierError(f"unknown training mode {self.mode!r} (expected one of {TRAINING_MODES})")


@dataclass
class ModelConfig:
    encoder_dim: int = 64
    projection_dim: int = 128
    n_buckets: int = 2**15
    dropout_rate: float = 0.1


@dataclass
class MultiTaskModel:
    backend: HashAttentionBackend
    w1: np.ndarray  # (projection_dim, 2 * encoder_dim)
    b1: np.ndarray
    slot_weight: np.ndarray  # (n_slots, projection_dim)
    slot_bias: np.ndarray
    weak_weight: np.ndarray  # (n_weak, projection_dim)
    weak_bias: np.ndarray
    slot_labels: list[str]
    weak_labels: list[str]
    seed: int

    @property
    def projection(self) -> SpanProjection:
        return SpanProjection(w1=self.w1, b1=self.b1)

    @property
    def dropout_rate(self) -> float:
        return self.backend.dropout_rate

    def parameters(self) -> dict[str, np.ndarray]:
        params = dict(self.backend.parameters())
        params.update(
            w1=self.w1, b1=self.b1,
            slot_w=self.slot_weight, slot_b=self.slot_bias,
            weak_w=self.weak_weight, weak_b=self.weak_bias,
        )
        return params

    def slot_index(self, label: str) -> int:
        try:
            return self.slot_labels.index(label)
        except ValueError:
            raise ClassifierError(f"slot label {label!r} not in model head") from None

    def weak_index(self, label: str) -> int:
        try:
            return self.weak_labels.index(label)
        except ValueError:
            raise ClassifierError(f"weak label {label!r} not in model vocabulary") from None


def new_model(
    slot_labels: Sequence[str],
    weak_labels: Sequence[str],
    config: ModelConfig | None = None,
    seed: int = 0,
) -> MultiTaskModel:
    """Build a fresh model with seeded initialization."""
    cfg = config or ModelConfig()
    if not slot_labels:
        raise ClassifierError("need at least one slot label")
    if not weak_labels:
        raise ClassifierError("need at least one weak label")
    backend = HashAttentionBackend(
        dim=cfg.encoder_dim, n_buckets=cfg.n_buckets, dropout_rate=cfg.dropout_rate, seed=seed
    )
    rng = np.random.default_rng(derive_seed(seed, "model-init"))
    d = cfg.projection_dim
    w1 = rng.normal(0.0, 1.0 / np.sqrt(2 * cfg.encoder_dim), size=(d, 2 * cfg.encoder_dim))
    b1 = np.zeros(d)
    slot_w = rng.normal(0.0, HEAD_INIT_STD, size=(len(slot_labels), d))
    weak_w = rng.normal(0.0, HEAD_INIT_STD, size=(len(weak_labels), d))
    return MultiTaskModel(
        backend=backend,
        w1=w1,
        b1=b1,
        slot_weight=slot_w,
        slot_bias=np.zeros(len(slot_labels)),
        weak_weight=weak_w,
        weak_bias=np.zeros(len(weak_labels)),
        slot_labels=list(slot_labels),
        weak_labels=list(weak_labels),
        seed=seed,
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


@dataclass(frozen=True)
class Prediction:
    slot_dist: np.ndarray  # masked, not renormalized
    weak_dist: np.ndarray
    representation: SpanRepresentation


def predict(
    model: MultiTaskModel,
    span: CandidateSpan,
    utterance: Utterance,
    mask: np.ndarray,
    dropout_seed: int | None = None,
) -> Prediction:
    """Masked slot distribution, weak distribution and span representation.

    Dropout is active iff ``dropout_seed`` is given; the same seed always
    produces the same stochastic output.
    """
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (len(model.slot_labels),):
        raise ClassifierError(f"mask has shape {mask.shape}, slot head expects ({len(model.slot_labels)},)")
    if not np.all((mask == 0.0) | (mask == 1.0)):
        raise ClassifierError("mask entries must be 0 or 1")
    rep = encode_span(model.backend, model.projection, utterance, span, dropout_seed=dropout_seed)
    slot_dist = _softmax(model.slot_weight @ rep.r + model.slot_bias) * mask
    weak_dist = _softmax(model.weak_weight @ rep.r + model.weak_bias)
    return Prediction(slot_dist=slot_dist, weak_dist=weak_dist, representation=rep)


def cross_entropy(predicted: np.ndarray, target_onehot: np.ndarray) -> float:
    """Natural-log cross entropy with a 1e-12 probability floor."""
    p = float(predicted[int(np.argmax(target_onehot))])
    return -math.log(max(p, PROB_FLOOR))


def multi_task_loss(
    slot_dist: np.ndarray,
    weak_dist: np.ndarray,
    slot_target: np.ndarray,
    weak_target: np.ndarray,
    alpha: float,
) -> float:
    """Blend of the two cross entropies: (1 - alpha) * slot + alpha * weak."""
    if not 0.0 <= alpha <= 1.0:
        raise ClassifierError(f"alpha must be in [0, 1], got {alpha}")
    if float(slot_dist[int(np.argmax(slot_target))]) == 0.0:
        raise ClassifierError("target slot is masked out (label not in known set)")
    return (1.0 - alpha) * cross_entropy(slot_dist, slot_target) + alpha * cross_entropy(weak_dist, weak_target)


@dataclass(frozen=True)
class TrainExample:
    span: CandidateSpan
    utterance: Utterance
    slot_label: str
    weak_label: str


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    slot_loss: float
    weak_loss: float
    total_loss: float
    train_accuracy: float


TRAINING_LOG_HEADER = "epoch,slot_loss,weak_loss,total_loss,train_accuracy"


@dataclass
class TrainingLog:
    epochs: list[EpochStats] = field(default_factory=list)

    def rows(self) -> list[tuple]:
        return [(e.epoch, e.slot_loss, e.weak_loss, e.total_loss, e.train_accuracy) for e in self.epochs]


def write_training_log(logs: Sequence[TrainingLog], path) -> None:
    """Concatenate per-phase logs into one CSV with globally numbered epochs."""
    lines = [TRAINING_LOG_HEADER]
    epoch = 0
    for log in logs:
        for e in log.epochs:
            lines.append(f"{epoch},{e.slot_loss:.6f},{e.weak_loss:.6f},{e.total_loss:.6f},{e.train_accuracy:.6f}")
            epoch += 1
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


class Adam:
    """Adam with lazy (row-sparse) updates for the embedding table."""

    def __init__(self, params: dict[str, np.ndarray], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: GradAccumulator, lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, g in grads.dense.items():
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * (g * g)
            params[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        for name, rows in grads.rows.items():
            m, v = self.m[name], self.v[name]
            for row, g in rows.items():
                m[row] = self.beta1 * m[row] + (1 - self.beta1) * g
                v[row] = self.beta2 * v[row] + (1 - self.beta2) * (g * g)
                params[name][row] -= lr * (m[row] / bc1) / (np.sqrt(v[row] / bc2) + self.eps)


def _forward_backward(
    model: MultiTaskModel,
    example: TrainExample,
    mask: np.ndarray,
    alpha: float,
    grads: GradAccumulator,
    dropout_seed: int | None,
) -> tuple[float, float, bool]:
    """One example's loss terms and gradient contributions.

    Returns (slot CE, weak CE, argmax-correct). Gradients are for the blended
    loss, so an alpha of exactly 0 or 1 silences the other head's gradient.
    """
    backend = model.backend
    span, utt = example.span, example.utterance
    seeds = (None, None) if dropout_seed is None else (derive_seed(dropout_seed, 0), derive_seed(dropout_seed, 1))
    span_tokens = utt.tokens[span.start : span.start + span.length]
    inh_out, inh_cache = backend.embed_with_cache(span_tokens, dropout_active=seeds[0] is not None, rng_seed=seeds[0])
    ctx_tokens = list(utt.tokens)
    for i in range(span.start, span.start + span.length):
        ctx_tokens[i] = backend.mask_token
    ctx_out, ctx_cache = backend.embed_with_cache(ctx_tokens, dropout_active=seeds[1] is not None, rng_seed=seeds[1])

    k1 = span.length
    r_inh = inh_out.mean(axis=0)
    r_ctx = ctx_out[span.start : span.start + span.length].mean(axis=0)
    z = np.concatenate([r_inh, r_ctx])
    r = np.tanh(model.w1 @ z + model.b1)

    slot_probs = _softmax(model.slot_weight @ r + model.slot_bias)
    weak_probs = _softmax(model.weak_weight @ r + model.weak_bias)
    slot_idx = model.slot_index(example.slot_label)
    weak_idx = model.weak_index(example.weak_label)
    if mask[slot_idx] != 1.0:
        raise ClassifierError(f"training target {example.slot_label!r} is not a known slot")
    masked = slot_probs * mask
    slot_ce = -math.log(max(float(masked[slot_idx]), PROB_FLOOR))
    weak_ce = -math.log(max(float(weak_probs[weak_idx]), PROB_FLOOR))
    correct = int(np.argmax(masked)) == slot_idx

    # softmax + CE backward; the mask leaves the known target's term untouched
    g_slot_logits = (1.0 - alpha) * slot_probs
    g_slot_logits[slot_idx] -= 1.0 - alpha
    g_weak_logits = alpha * weak_probs
    g_weak_logits[weak_idx] -= alpha

    g_r = model.slot_weight.T @ g_slot_logits + model.weak_weight.T @ g_weak_logits
    grads.add("slot_w", np.outer(g_slot_logits, r))
    grads.add("slot_b", g_slot_logits)
    grads.add("weak_w", np.outer(g_weak_logits, r))
    grads.add("weak_b", g_weak_logits)

    g_a1 = g_r * (1.0 - r * r)
    grads.add("w1", np.outer(g_a1, z))
    grads.add("b1", g_a1)
    g_z = model.w1.T @ g_a1

    d_enc = backend.dim
    g_inh_out = np.zeros_like(inh_out)
    g_inh_out[:] = g_z[:d_enc] / k1
    backend.backward(inh_cache, g_inh_out, grads)
    g_ctx_out = np.zeros_like(ctx_out)
    g_ctx_out[span.start : span.start + span.length] = g_z[d_enc:] / k1
    backend.backward(ctx_cache, g_ctx_out, grads)
    return slot_ce, weak_ce, correct


def _run_epochs(
    model: MultiTaskModel,
    examples: Sequence[TrainExample],
    mask: np.ndarray,
    alpha: float,
    config: TrainingConfig,
    n_epochs: int,
    seed_path: tuple,
    log: TrainingLog,
    stop_on_plateau: bool = False,
) -> None:
    params = model.parameters()
    optimizer = Adam(params)
    n = len(examples)
    n_batches = (n + config.batch_size - 1) // config.batch_size
    total_steps = n_epochs * n_batches
    dropout = model.dropout_rate > 0.0
    best_loss = math.inf
    stale = 0
    step = 0
    for epoch in range(n_epochs):
        order = np.random.default_rng(derive_seed(*seed_path, "epoch", epoch)).permutation(n)
        slot_sum = weak_sum = 0.0
        n_correct = 0
        for b in range(n_batches):
            batch_idx = order[b * config.batch_size : (b + 1) * config.batch_size]
            grads = GradAccumulator()
            batch_seed = derive_seed(*seed_path, "dropout", epoch, b) if dropout else None
            for j, i in enumerate(batch_idx.tolist()):
                ex_seed = derive_seed(batch_seed, j) if dropout else None
                slot_ce, weak_ce, correct = _forward_backward(model, examples[i], mask, alpha, grads, ex_seed)
                slot_sum += slot_ce
                weak_sum += weak_ce
                n_correct += correct
            grads.scale(1.0 / len(batch_idx))
            lr = config.learning_rate * (1.0 - step / total_steps)
            optimizer.step(params, grads, lr)
            step += 1
        slot_loss = slot_sum / n
        weak_loss = weak_sum / n
        total = (1.0 - alpha) * slot_loss + alpha * weak_loss
        if not math.isfinite(total):
            raise ClassifierError(
                f"non-finite loss at epoch {epoch} (slot={slot_loss}, weak={weak_loss}, alpha={alpha})"
            )
        log.epochs.append(
            EpochStats(
                epoch=len(log.epochs),
                slot_loss=slot_loss,
                weak_loss=weak_loss,
                total_loss=total,
                train_accuracy=n_correct / n,
            )
        )
        if stop_on_plateau:
            if total < best_loss - 1e-4:
                best_loss = total
                stale = 0
            else:
                stale += 1
                if stale >= 3:
                    break


def train(
    model: MultiTaskModel,
    examples: Sequence[TrainExample],
    mask: np.ndarray,
    config: TrainingConfig,
    phase: str = "initial",
    round_id: int = 0,
) -> TrainingLog:
    """Train in place on the labeled pool.

    The initial phase runs up to ``max_initial_epochs``; the incremental
    phase continues from the current parameters for ``epochs_per_iteration``
    epochs. Optimizer moments are reset at the start of every call. Mode
    ``no_weak`` forces alpha to 0; ``pretrain`` first fits the weak task to a
    plateau, then the slot task with alpha 0; ``multitask`` blends both
    throughout.
    """
    if not examples:
        raise ClassifierError("labeled pool is empty")
    if phase not in ("initial", "incremental"):
        raise ClassifierError(f"unknown phase {phase!r}")
    mask = np.asarray(mask, dtype=np.float64)
    log = TrainingLog()
    n_epochs = config.max_initial_epochs if phase == "initial" else config.epochs_per_iteration
    # the seed path deliberately excludes the mode so no_weak and
    # multitask(alpha=0) share batch orders and dropout masks exactly
    base = (config.seed, phase, round_id)
    if config.mode == MODE_NO_WEAK:
        _run_epochs(model, examples, mask, 0.0, config, n_epochs, base, log)
    elif config.mode == MODE_MULTITASK:
        _run_epochs(model, examples, mask, config.alpha, config, n_epochs, base, log)
    else:  # pretrain: weak task to convergence, then slot task only
        if phase == "initial":
            _run_epochs(model, examples, mask, 1.0, config, n_epochs, base + ("weak",), log, stop_on_plateau=True)
        _run_epochs(model, examples, mask, 0.0, config, n_epochs, base + ("slot",), log)
    return log


def expand_slot_head(model: MultiTaskModel, new_labels: Sequence[str]) -> None:
    """Grow the slot head by one seeded small-variance row per new label.

    Existing rows are untouched, so logits for old labels are unchanged on
    any input.
    """
    if not new_labels:
        return
    duplicates = [l for l in new_labels if l in model.slot_labels]
    if duplicates:
        raise ClassifierError(f"labels already in slot head: {duplicates}")
    if len(set(new_labels)) != len(new_labels):
        raise ClassifierError("duplicate labels in expansion request")
    rng = np.random.default_rng(derive_seed(model.seed, "expand", len(model.slot_labels), *new_labels))
    rows = rng.normal(0.0, HEAD_INIT_STD, size=(len(new_labels), model.slot_weight.shape[1]))
    model.slot_weight = np.vstack([model.slot_weight, rows])
    model.slot_bias = np.concatenate([model.slot_bias, np.zeros(len(new_labels))])
    model.slot_labels.extend(new_labels)
