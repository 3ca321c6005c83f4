"""Active-learning orchestration: warm-up, select, annotate, update, retrain.

The loop owns all pool/catalog/model mutation. Each iteration selects a
batch with the configured strategy, obtains labels from an annotation source
(gold-label oracle in simulation, humans via the service), moves the spans
into the labeled pool, grows the slot head for newly minted labels, unmasks
newly discovered ones, retrains incrementally, and evaluates. It stops on a
labeled-budget cap, an exhausted pool, or a validation-F1 patience rule.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from . import classifier as clf
from .classifier import ModelConfig, MultiTaskModel, TrainExample, TrainingConfig
from .corpus import ALPools, CorpusError, Dataset, DatasetSplit, SlotCatalog, init_pools, split_dataset
from .evaluation import SlotEvalResult, span_f1
from .sampling import SelectionConfig, select_batch
from .seeding import derive_seed

OTHER_WEAK_LABEL = "other"


class LoopError(RuntimeError):
    """Raised when the loop's contracts are violated."""


@dataclass
class StoppingRule:
    budget_fraction: float | None = 0.21
    patience: int | None = 3


@dataclass
class RunConfig:
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    stopping: StoppingRule = field(default_factory=StoppingRule)
    warmup_fraction: float = 0.05
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_seed: int = 0
    warmup_seed: int = 0
    dataset_path: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["split_ratios"] = list(self.split_ratios)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            selection=SelectionConfig(**d["selection"]),
            training=TrainingConfig(**d["training"]),
            model=ModelConfig(**d["model"]),
            stopping=StoppingRule(**d["stopping"]),
            warmup_fraction=d["warmup_fraction"],
            split_ratios=tuple(d["split_ratios"]),
            split_seed=d["split_seed"],
            warmup_seed=d["warmup_seed"],
            dataset_path=d.get("dataset_path"),
        )


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    selected: tuple[str, ...]
    newly_discovered: tuple[str, ...]
    labeled_count: int
    labeled_fraction: float
    test_f1: float
    validation_f1: float
    known_slots: int


@dataclass
class ALState:
    dataset: Dataset
    split: DatasetSplit
    pools: ALPools
    catalog: SlotCatalog
    model: MultiTaskModel
    config: RunConfig
    assigned: dict[str, str]
    warmup: IterationRecord
    history: list[IterationRecord] = field(default_factory=list)
    simulation: bool = True

    @property
    def iteration(self) -> int:
        return len(self.history)

    @property
    def labeled_fraction(self) -> float:
        return len(self.pools.labeled) / len(self.split.train)

    def batch_size(self) -> int:
        return max(1, round(self.config.selection.batch_fraction * len(self.split.train)))

    def budget_size(self) -> int | None:
        frac = self.config.stopping.budget_fraction
        return None if frac is None else round(frac * len(self.split.train))


class AnnotationSource(Protocol):
    def annotate(self, span_ids: Sequence[str]) -> list[tuple[str, str]]:
        """Label the requested spans; may return a subset (human mode)."""
        ...


class OracleAnnotator:
    """Labels spans automatically from the gold standard."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset

    def annotate(self, span_ids: Sequence[str]) -> list[tuple[str, str]]:
        return oracle_annotate(span_ids, self.dataset)


def oracle_annotate(span_ids: Sequence[str], dataset: Dataset) -> list[tuple[str, str]]:
    """Return each span's gold label verbatim."""
    pairs = []
    for sid in span_ids:
        gold = dataset.spans[sid].gold_label
        if gold is None:
            raise LoopError(f"span {sid!r} has no gold label; oracle annotation impossible")
        pairs.append((sid, gold))
    return pairs


def weak_vocabulary_for(dataset: Dataset) -> list[str]:
    vocab = set(dataset.weak_vocabulary)
    if any(s.weak_label is None for s in dataset.spans.values()) or not vocab:
        vocab.add(OTHER_WEAK_LABEL)
    return sorted(vocab)


def _train_examples(state: ALState, span_ids: Iterable[str]) -> list[TrainExample]:
    examples = []
    for sid in sorted(span_ids):
        span = state.dataset.spans[sid]
        label = state.assigned.get(sid)
        if label is None:
            raise LoopError(f"labeled span {sid!r} has no assigned label")
        examples.append(
            TrainExample(
                span=span,
                utterance=state.dataset.utterances[span.utterance_id],
                slot_label=label,
                weak_label=span.weak_label or OTHER_WEAK_LABEL,
            )
        )
    return examples


def evaluate_split(
    model: MultiTaskModel,
    dataset: Dataset,
    span_ids: Sequence[str],
    mask: np.ndarray,
) -> SlotEvalResult:
    """Span-F1 of masked argmax predictions against gold on the given spans.

    Spans whose gold label is still unknown stay in the gold map, so they
    count against recall until the label is discovered.
    """
    gold: dict[str, set] = {}
    predicted: dict[str, set] = {}
    for sid in span_ids:
        span = dataset.spans[sid]
        if span.gold_label is None:
            continue
        key = (span.utterance_id, span.start, span.length)
        gold.setdefault(span.gold_label, set()).add(key)
        pred = clf.predict(model, span, dataset.utterances[span.utterance_id], mask)
        label = model.slot_labels[int(np.argmax(pred.slot_dist))]
        predicted.setdefault(label, set()).add(key)
    return span_f1(gold, predicted)


def initialize_state(dataset: Dataset, config: RunConfig, simulation: bool = True) -> ALState:
    """Split, draw the warm-up set, train the initial model, and evaluate it."""
    span_ids = dataset.gold_span_ids() if simulation else sorted(dataset.spans)
    if simulation and len(span_ids) < len(dataset.spans):
        rejected = len(dataset.spans) - len(span_ids)
        raise CorpusError(f"simulation mode requires gold labels on all spans ({rejected} lack them)")
    split = split_dataset(span_ids, config.split_ratios, config.split_seed)
    pools, catalog = init_pools(dataset, split.train, config.warmup_fraction, config.warmup_seed)
    model = clf.new_model(
        catalog.labels,
        weak_vocabulary_for(dataset),
        config.model,
        seed=derive_seed(config.training.seed, "model"),
    )
    state = ALState(
        dataset=dataset,
        split=split,
        pools=pools,
        catalog=catalog,
        model=model,
        config=config,
        assigned={sid: dataset.spans[sid].gold_label for sid in pools.labeled},
        warmup=IterationRecord(0, (), (), 0, 0.0, 0.0, 0.0, 0),
        simulation=simulation,
    )
    clf.train(model, _train_examples(state, pools.labeled), catalog.mask(), config.training, phase="initial")
    test_f1 = evaluate_split(model, dataset, split.test, catalog.mask()).f1
    val_f1 = evaluate_split(model, dataset, split.validation, catalog.mask()).f1
    state.warmup = IterationRecord(
        iteration=0,
        selected=(),
        newly_discovered=(),
        labeled_count=len(pools.labeled),
        labeled_fraction=state.labeled_fraction,
        test_f1=test_f1,
        validation_f1=val_f1,
        known_slots=len(catalog.known),
    )
    return state


def apply_annotations(state: ALState, annotations: Sequence[tuple[str, str]]) -> IterationRecord:
    """Fold one annotated batch into the state: discover, retrain, evaluate."""
    if not annotations:
        raise LoopError("annotation batch is empty")
    ids = [sid for sid, _ in annotations]
    if len(set(ids)) != len(ids):
        raise LoopError("duplicate span ids in annotation batch")
    for sid, label in annotations:
        if not label:
            raise LoopError(f"empty label for span {sid!r}")

    brand_new = sorted({label for _, label in annotations if label not in state.catalog.labels})
    state.catalog.add_labels(brand_new)
    clf.expand_slot_head(state.model, brand_new)
    unmasked = state.catalog.mark_known(label for _, label in annotations)
    newly_discovered = tuple(sorted(set(brand_new) | set(unmasked)))

    state.assigned.update(annotations)
    state.pools.move_to_labeled(ids)

    round_id = state.iteration + 1
    clf.train(
        state.model,
        _train_examples(state, state.pools.labeled),
        state.catalog.mask(),
        state.config.training,
        phase="incremental",
        round_id=round_id,
    )
    mask = state.catalog.mask()
    record = IterationRecord(
        iteration=round_id,
        selected=tuple(ids),
        newly_discovered=newly_discovered,
        labeled_count=len(state.pools.labeled),
        labeled_fraction=state.labeled_fraction,
        test_f1=evaluate_split(state.model, state.dataset, state.split.test, mask).f1,
        validation_f1=evaluate_split(state.model, state.dataset, state.split.validation, mask).f1,
        known_slots=len(state.catalog.known),
    )
    state.history.append(record)
    return record


def stop_reason(state: ALState) -> str | None:
    """Why the loop must not start another iteration, or None to continue."""
    k = min(state.batch_size(), len(state.pools.unlabeled))
    if k == 0:
        return "pool_exhausted"
    budget = state.budget_size()
    if budget is not None and len(state.pools.labeled) + k > budget:
        return "budget_reached"
    patience = state.config.stopping.patience
    if patience is not None:
        best = state.warmup.validation_f1
        stale = 0
        for record in state.history:
            if record.validation_f1 > best + 1e-9:
                best = record.validation_f1
                stale = 0
            else:
                stale += 1
        if stale >= patience:
            return "patience_exhausted"
    return None


def select_batch_for(state: ALState, probe: Callable | None = None):
    """Select the next annotation batch for the state's current iteration."""
    k = min(state.batch_size(), len(state.pools.unlabeled))
    result = select_batch(
        state.model,
        state.dataset,
        state.catalog.mask(),
        sorted(state.pools.labeled),
        sorted(state.pools.unlabeled),
        k,
        state.config.selection,
        round_id=state.iteration + 1,
        probe=probe,
    )
    already = set(result.selected) & state.pools.labeled
    if already:
        raise LoopError(f"selection returned already-labeled spans: {sorted(already)[:5]}")
    return result


def run(
    state: ALState,
    source: AnnotationSource,
    probe: Callable | None = None,
    event_sink: Callable[[dict], None] | None = None,
    checkpoint_path: str | None = None,
) -> ALState:
    """Run the loop to a stopping rule. Mutates and returns the state."""
    from . import persistence  # local import: persistence depends on loop types

    while stop_reason(state) is None:
        result = select_batch_for(state, probe=probe)
        annotations = source.annotate(result.selected)
        extra = {sid for sid, _ in annotations} - set(result.selected)
        if extra:
            raise LoopError(f"annotation source returned labels for unrequested spans: {sorted(extra)[:5]}")
        if event_sink:
            event_sink({"event": "selection", "iteration": state.iteration + 1, "span_ids": list(result.selected)})
        record = apply_annotations(state, annotations)
        if event_sink:
            if record.newly_discovered:
                event_sink(
                    {"event": "discovery", "iteration": record.iteration, "labels": list(record.newly_discovered)}
                )
            event_sink(
                {
                    "event": "iteration",
                    "iteration": record.iteration,
                    "labeled_fraction": record.labeled_fraction,
                    "test_f1": record.test_f1,
                    "validation_f1": record.validation_f1,
                }
            )
        if checkpoint_path:
            persistence.save_state(state, checkpoint_path)
    return state


@dataclass(frozen=True)
class CurveRow:
    iteration: int
    labeled_fraction: float
    span_f1: float
    known_slots: int
    new_slots_discovered: int


def learning_curve(state: ALState) -> list[CurveRow]:
    """Warm-up baseline plus one row per iteration; discoveries are cumulative."""
    rows = [
        CurveRow(0, state.warmup.labeled_fraction, state.warmup.test_f1, state.warmup.known_slots, 0)
    ]
    discovered = 0
    for record in state.history:
        discovered += len(record.newly_discovered)
        rows.append(
            CurveRow(record.iteration, record.labeled_fraction, record.test_f1, record.known_slots, discovered)
        )
    return rows
