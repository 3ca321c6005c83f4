"""Sample-selection strategies for the active learning loop.

Uncertainty criteria (entropy, margin, BALD) are computed on the masked slot
distribution; the diversity criterion is the negated cosine similarity to the
nearest labeled span in representation space; the bi-criteria score blends
uncertainty and diversity in maximal-marginal-relevance style:

    combined(q) = beta * (-margin(q)) + (1 - beta) * (-max_p sim(r_p, r_q))

Margin enters negated so that beta = 1 reduces exactly to margin sampling
(most uncertain first) and beta = 0 to pure diversity sampling. Every
strategy ranks descending by its score with ties broken by ascending span id.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifier import MultiTaskModel, predict
from .corpus import CandidateSpan, Dataset, Utterance
from .seeding import derive_seed

logger = logging.getLogger(__name__)

STRATEGIES = ("random", "entropy", "margin", "bald", "diversity", "bi_criteria", "hybrid")


class SamplingError(ValueError):
    """Raised for invalid selection requests or configuration."""


@dataclass
class SelectionConfig:
    strategy: str = "bi_criteria"
    batch_fraction: float = 0.02
    beta: float = 0.9
    t_passes: int = 5
    seed: int = 0
    hybrid_coarse_multiplier: float = 2.0
    renormalize_after_mask: bool = False
    incremental_mmr: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise SamplingError(f"unknown strategy {self.strategy!r} (expected one of {STRATEGIES})")
        if not 0.0 < self.batch_fraction <= 1.0:
            raise SamplingError(f"batch fraction must be in (0, 1], got {self.batch_fraction}")
        if not 0.0 <= self.beta <= 1.0:
            raise SamplingError(f"beta must be in [0, 1], got {self.beta}")
        if self.t_passes < 1:
            raise SamplingError(f"t_passes must be >= 1, got {self.t_passes}")
        if self.hybrid_coarse_multiplier <= 1.0:
            raise SamplingError(f"hybrid coarse multiplier must be > 1, got {self.hybrid_coarse_multiplier}")


@dataclass(frozen=True)
class SampleScore:
    span_id: str
    uncertainty: float
    diversity: float
    combined: float
    strategy: str


def entropy_score(dist: np.ndarray) -> float:
    """Shannon entropy (natural log) with 0 * ln 0 treated as 0."""
    dist = np.asarray(dist, dtype=np.float64)
    if np.any(dist < 0.0):
        raise SamplingError("entropy requires non-negative probabilities")
    positive = dist[dist > 0.0]
    return float(-(positive * np.log(positive)).sum())


def margin_score(dist: np.ndarray) -> float:
    """Top-1 minus top-2 probability; lower means more uncertain."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.size < 2:
        raise SamplingError("margin requires at least two entries")
    top2 = np.sort(dist)[-2:]
    return float(top2[1] - top2[0])


def bald_disagreement(argmax_labels: Sequence[int]) -> float:
    """1 - count(mode)/T over the per-pass argmax labels (tie: smallest label)."""
    if not argmax_labels:
        raise SamplingError("need at least one forward pass")
    counts = Counter(argmax_labels)
    best = max(counts.values())
    mode = min(label for label, c in counts.items() if c == best)
    return 1.0 - counts[mode] / len(argmax_labels)


def bald_score(
    model: MultiTaskModel,
    span: CandidateSpan,
    utterance: Utterance,
    mask: np.ndarray,
    t_passes: int = 5,
    base_seed: int = 0,
) -> float:
    """Disagreement among T stochastic (dropout) forward passes."""
    argmaxes = []
    for t in range(t_passes):
        pred = predict(model, span, utterance, mask, dropout_seed=base_seed + t)
        argmaxes.append(int(np.argmax(pred.slot_dist)))  # argmax tie -> smallest index
    return bald_disagreement(argmaxes)


def max_similarity(query: np.ndarray, labeled_reps: np.ndarray) -> float:
    """Highest cosine similarity between the query and any labeled vector.

    Zero-norm vectors have no direction; their similarity is taken as 0 and
    the occurrence is logged.
    """
    if labeled_reps.ndim != 2 or labeled_reps.shape[0] == 0:
        raise SamplingError("diversity requires a non-empty labeled representation set")
    if labeled_reps.shape[1] != query.shape[0]:
        raise SamplingError("representation dimensions differ")
    q_norm = np.linalg.norm(query)
    norms = np.linalg.norm(labeled_reps, axis=1)
    if q_norm == 0.0 or np.any(norms == 0.0):
        logger.warning("zero-norm representation encountered; cosine similarity treated as 0")
    if q_norm == 0.0:
        return 0.0
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = (labeled_reps @ query) / (safe * q_norm)
    sims = np.where(norms == 0.0, 0.0, sims)
    return float(sims.max())


def diversity_score(query: np.ndarray, labeled_reps: np.ndarray) -> float:
    """Negated nearest-labeled similarity: higher means farther from labeled data."""
    return -max_similarity(query, labeled_reps)


@dataclass(frozen=True)
class PoolItem:
    """Per-span inputs to the selection rules."""

    span_id: str
    margin: float
    entropy: float
    representation: np.ndarray
    weak_label: str | None = None
    bald: float | None = None


def _top_k(scores: Sequence[SampleScore], k: int) -> list[str]:
    ranked = sorted(scores, key=lambda s: (-s.combined, s.span_id))
    return [s.span_id for s in ranked[:k]]


def bi_criteria_scores(
    items: Sequence[PoolItem],
    labeled_reps: np.ndarray | None,
    beta: float,
) -> list[SampleScore]:
    """Static bi-criteria scores against the fixed labeled set."""
    if not 0.0 <= beta <= 1.0:
        raise SamplingError(f"beta must be in [0, 1], got {beta}")
    need_diversity = beta < 1.0
    if need_diversity and (labeled_reps is None or labeled_reps.shape[0] == 0):
        raise SamplingError("diversity term undefined: labeled set is empty and beta < 1")
    scores = []
    for item in items:
        uncertainty = -item.margin if beta > 0.0 else 0.0
        diversity = diversity_score(item.representation, labeled_reps) if need_diversity else 0.0
        if beta == 1.0:
            combined = uncertainty
        elif beta == 0.0:
            combined = diversity
        else:
            combined = beta * uncertainty + (1.0 - beta) * diversity
        scores.append(SampleScore(item.span_id, uncertainty, diversity, combined, "bi_criteria"))
    return scores


def bi_criteria_select(
    items: Sequence[PoolItem],
    labeled_reps: np.ndarray | None,
    beta: float,
    k: int,
    incremental: bool = False,
) -> list[str]:
    """Pick the k best spans under the bi-criteria score.

    The default scores once against the fixed labeled set and takes the top k
    in one shot. With ``incremental`` the representation of each pick joins
    the comparison set before the next pick (greedy MMR variant).
    """
    if k > len(items):
        raise SamplingError(f"cannot select {k} spans from a pool of {len(items)}")
    if not incremental or beta == 1.0 or k <= 1:
        return _top_k(bi_criteria_scores(items, labeled_reps, beta), k)
    if labeled_reps is None or labeled_reps.shape[0] == 0:
        raise SamplingError("diversity term undefined: labeled set is empty and beta < 1")
    by_id = {item.span_id: item for item in items}
    reps = labeled_reps
    remaining = list(items)
    chosen: list[str] = []
    while len(chosen) < k:
        best = _top_k(bi_criteria_scores(remaining, reps, beta), 1)[0]
        chosen.append(best)
        reps = np.vstack([reps, by_id[best].representation])
        remaining = [item for item in remaining if item.span_id != best]
    return chosen


def hybrid_select(items: Sequence[PoolItem], k: int, coarse_multiplier: float = 2.0) -> list[str]:
    """Two-stage selection: margin-based coarse set, then weak-label round-robin.

    Stage 1 keeps the ``coarse_multiplier * k`` most uncertain spans by
    margin. Stage 2 partitions them by weak label, orders groups by their
    most uncertain member, and takes one span per group in turn until k.
    """
    n_coarse = int(round(coarse_multiplier * k))
    if n_coarse > len(items):
        raise SamplingError(f"coarse stage needs {n_coarse} spans, pool has {len(items)}")
    ranked = sorted(items, key=lambda i: (i.margin, i.span_id))
    coarse = ranked[:n_coarse]
    groups: dict[str, list[PoolItem]] = {}
    for item in coarse:
        groups.setdefault(item.weak_label or "", []).append(item)
    ordered_groups = sorted(
        groups.items(), key=lambda kv: (min(i.margin for i in kv[1]), kv[0])
    )
    queues = [list(members) for _, members in ordered_groups]  # members already margin-sorted
    chosen: list[str] = []
    while len(chosen) < k:
        progressed = False
        for queue in queues:
            if queue and len(chosen) < k:
                chosen.append(queue.pop(0).span_id)
                progressed = True
        if not progressed:
            break
    return chosen


def random_select(pool_ids: Sequence[str], k: int, seed: int) -> list[str]:
    """Uniform draw without replacement, seeded, over the sorted pool."""
    ids = sorted(pool_ids)
    if k > len(ids):
        raise SamplingError(f"cannot select {k} spans from a pool of {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    return [ids[i] for i in order[:k]]


@dataclass
class SelectionResult:
    selected: list[str]
    scores: list[SampleScore]
    diagnostics: dict = field(default_factory=dict)


def select_batch(
    model: MultiTaskModel,
    dataset: Dataset,
    mask: np.ndarray,
    labeled_ids: Sequence[str],
    pool_ids: Sequence[str],
    k: int,
    config: SelectionConfig,
    round_id: int = 0,
    probe=None,
) -> SelectionResult:
    """Score the unlabeled pool and pick the next annotation batch.

    Pure given an immutable model snapshot; ``round_id`` feeds the seeded
    strategies so successive iterations draw independently. ``probe`` (if
    given) receives every masked distribution scored, for leakage audits.
    """
    pool = sorted(pool_ids)
    if k > len(pool):
        raise SamplingError(f"batch of {k} exceeds pool size {len(pool)}")
    overlap = set(pool) & set(labeled_ids)
    if overlap:
        raise SamplingError(f"pool and labeled set overlap on {len(overlap)} spans")

    if config.strategy == "random":
        order = np.random.default_rng(derive_seed(config.seed, "random", round_id)).permutation(len(pool))
        position = {pool[i]: int(p) for p, i in enumerate(order)}
        scores = [
            SampleScore(sid, 0.0, 0.0, (len(pool) - position[sid]) / len(pool), "random") for sid in pool
        ]
        return SelectionResult(selected=_top_k(scores, k), scores=scores)

    items: list[PoolItem] = []
    for sid in pool:
        span = dataset.spans[sid]
        utt = dataset.utterances[span.utterance_id]
        pred = predict(model, span, utt, mask)
        dist = pred.slot_dist
        if config.renormalize_after_mask:
            total = dist.sum()
            if total > 0:
                dist = dist / total
        if probe is not None:
            probe(round_id, sid, dist, mask)
        bald = None
        if config.strategy == "bald":
            bald = bald_score(
                model,
                span,
                utt,
                mask,
                t_passes=config.t_passes,
                base_seed=derive_seed(config.seed, "bald", round_id),
            )
        items.append(
            PoolItem(
                span_id=sid,
                margin=margin_score(dist),
                entropy=entropy_score(dist),
                representation=pred.representation.r,
                weak_label=span.weak_label,
                bald=bald,
            )
        )

    labeled_reps: np.ndarray | None = None
    if config.strategy in ("diversity", "bi_criteria") and not (
        config.strategy == "bi_criteria" and config.beta == 1.0
    ):
        reps = []
        for sid in sorted(labeled_ids):
            span = dataset.spans[sid]
            utt = dataset.utterances[span.utterance_id]
            reps.append(predict(model, span, utt, mask).representation.r)
        labeled_reps = np.array(reps) if reps else np.zeros((0, model.w1.shape[0]))

    if config.strategy == "entropy":
        scores = [SampleScore(i.span_id, i.entropy, 0.0, i.entropy, "entropy") for i in items]
        return SelectionResult(selected=_top_k(scores, k), scores=scores)
    if config.strategy == "margin":
        scores = [SampleScore(i.span_id, -i.margin, 0.0, -i.margin, "margin") for i in items]
        return SelectionResult(selected=_top_k(scores, k), scores=scores)
    if config.strategy == "bald":
        scores = [SampleScore(i.span_id, float(i.bald), 0.0, float(i.bald), "bald") for i in items]
        return SelectionResult(selected=_top_k(scores, k), scores=scores)
    if config.strategy == "diversity":
        scores = [
            SampleScore(i.span_id, 0.0, d := diversity_score(i.representation, labeled_reps), d, "diversity")
            for i in items
        ]
        return SelectionResult(selected=_top_k(scores, k), scores=scores)
    if config.strategy == "bi_criteria":
        scores = bi_criteria_scores(items, labeled_reps, config.beta)
        selected = bi_criteria_select(items, labeled_reps, config.beta, k, incremental=config.incremental_mmr)
        return SelectionResult(selected=selected, scores=scores)
    # hybrid
    selected = hybrid_select(items, k, coarse_multiplier=config.hybrid_coarse_multiplier)
    scores = [SampleScore(i.span_id, -i.margin, 0.0, -i.margin, "hybrid") for i in items]
    return SelectionResult(selected=selected, scores=scores)
