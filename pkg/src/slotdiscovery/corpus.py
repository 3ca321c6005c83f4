"""Dialogue corpora with candidate value spans.

Loading/validation of the line-delimited dataset format, train/test/validation
splitting, and the labeled/unlabeled pool bookkeeping used by the active
learning loop.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = "1"


class CorpusError(ValueError):
    """Raised for malformed dataset files or violated span invariants."""


@dataclass(frozen=True)
class Utterance:
    """One tokenized dialogue turn."""

    id: str
    tokens: tuple[str, ...]
    dialogue_id: str
    turn_index: int


@dataclass(frozen=True)
class CandidateSpan:
    """A candidate value span inside an utterance.

    ``weak_label`` is the noisy tool/heuristic signal; ``gold_label`` is the
    ground-truth slot used by the oracle annotator and the evaluator.
    """

    span_id: str
    utterance_id: str
    start: int
    length: int
    weak_label: str | None = None
    gold_label: str | None = None


@dataclass
class SlotCatalog:
    """The evolving slot inventory.

    ``labels`` keeps a stable order for the whole run: index i in every
    probability vector and classifier head row refers to ``labels[i]``.
    ``known`` is the subset already discovered (warm-up or annotation).
    """

    labels: list[str]
    known: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise CorpusError("slot labels must be unique")
        unknown = self.known - set(self.labels)
        if unknown:
            raise CorpusError(f"known labels not in catalog: {sorted(unknown)}")

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def mask(self) -> np.ndarray:
        """Binary vector over ``labels``: 1.0 where the label is known."""
        return np.array([1.0 if l in self.known else 0.0 for l in self.labels])

    def mark_known(self, labels: Iterable[str]) -> list[str]:
        """Mark labels as discovered; returns the ones that were new."""
        fresh = []
        for label in labels:
            if label not in self.labels:
                raise CorpusError(f"label {label!r} not in catalog")
            if label not in self.known:
                self.known.add(label)
                fresh.append(label)
        return fresh

    def add_labels(self, labels: Sequence[str]) -> None:
        """Append brand-new labels (human-minted slots); they become known."""
        for label in labels:
            if label in self.labels:
                raise CorpusError(f"label {label!r} already in catalog")
            self.labels.append(label)
            self.known.add(label)

    def copy(self) -> "SlotCatalog":
        return SlotCatalog(list(self.labels), set(self.known))


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]
    validation: tuple[str, ...]


@dataclass
class ALPools:
    """Labeled / unlabeled span-id pools over the train split."""

    labeled: set[str]
    unlabeled: set[str]

    def __post_init__(self) -> None:
        overlap = self.labeled & self.unlabeled
        if overlap:
            raise CorpusError(f"pools overlap on {len(overlap)} spans")

    def move_to_labeled(self, span_ids: Iterable[str]) -> None:
        for sid in span_ids:
            if sid not in self.unlabeled:
                raise CorpusError(f"span {sid!r} is not in the unlabeled pool")
            self.unlabeled.remove(sid)
            self.labeled.add(sid)


@dataclass
class Dataset:
    """A loaded corpus: utterances, spans, slot catalog and weak vocabulary."""

    utterances: dict[str, Utterance]
    spans: dict[str, CandidateSpan]
    catalog: SlotCatalog
    weak_vocabulary: list[str]

    def span_tokens(self, span_id: str) -> tuple[str, ...]:
        span = self.spans[span_id]
        utt = self.utterances[span.utterance_id]
        return utt.tokens[span.start : span.start + span.length]

    def span_text(self, span_id: str) -> str:
        return " ".join(self.span_tokens(span_id))

    def gold_span_ids(self) -> list[str]:
        return [sid for sid, s in self.spans.items() if s.gold_label is not None]


def _validate_span(span: CandidateSpan, utterances: Mapping[str, Utterance], where: str) -> None:
    if span.utterance_id not in utterances:
        raise CorpusError(f"{where}: span {span.span_id!r} references unknown utterance {span.utterance_id!r}")
    if span.length < 1:
        raise CorpusError(f"{where}: span {span.span_id!r} has non-positive length")
    if span.start < 0:
        raise CorpusError(f"{where}: span {span.span_id!r} has negative start")
    n_tokens = len(utterances[span.utterance_id].tokens)
    if span.start + span.length > n_tokens:
        raise CorpusError(
            f"{where}: span out of bounds: {span.span_id!r} covers "
            f"[{span.start}, {span.start + span.length}) in a {n_tokens}-token utterance"
        )


def load_dataset(path: str | Path, schema_version: str = SCHEMA_VERSION) -> Dataset:
    """Load and validate a line-delimited dataset file.

    Each line is a JSON record:
    ``{"utterance_id", "dialogue_id", "turn", "tokens": [..],
       "spans": [{"span_id", "start", "len", "weak_label"?, "gold_label"?}]}``.

    The slot catalog is built from the distinct gold labels present (sorted,
    so index order is stable); the weak-label vocabulary likewise.
    """
    if schema_version != SCHEMA_VERSION:
        raise CorpusError(f"unsupported schema version {schema_version!r} (supported: {SCHEMA_VERSION!r})")
    path = Path(path)
    utterances: dict[str, Utterance] = {}
    spans: dict[str, CandidateSpan] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path.name}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{where}: malformed JSON record: {exc}") from exc
            try:
                utt = Utterance(
                    id=str(record["utterance_id"]),
                    tokens=tuple(str(t) for t in record["tokens"]),
                    dialogue_id=str(record["dialogue_id"]),
                    turn_index=int(record["turn"]),
                )
                raw_spans = record.get("spans", [])
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{where}: malformed record: {exc!r}") from exc
            if not utt.tokens:
                raise CorpusError(f"{where}: utterance {utt.id!r} has no tokens")
            if utt.turn_index < 0:
                raise CorpusError(f"{where}: utterance {utt.id!r} has negative turn index")
            if utt.id in utterances:
                raise CorpusError(f"{where}: duplicate utterance id {utt.id!r}")
            utterances[utt.id] = utt
            for raw in raw_spans:
                try:
                    span = CandidateSpan(
                        span_id=str(raw["span_id"]),
                        utterance_id=utt.id,
                        start=int(raw["start"]),
                        length=int(raw["len"]),
                        weak_label=None if raw.get("weak_label") is None else str(raw["weak_label"]),
                        gold_label=None if raw.get("gold_label") is None else str(raw["gold_label"]),
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise CorpusError(f"{where}: malformed span record: {exc!r}") from exc
                if span.span_id in spans:
                    raise CorpusError(f"{where}: duplicate span id {span.span_id!r}")
                _validate_span(span, utterances, where)
                spans[span.span_id] = span
    gold_labels = sorted({s.gold_label for s in spans.values() if s.gold_label is not None})
    weak_vocab = sorted({s.weak_label for s in spans.values() if s.weak_label is not None})
    return Dataset(
        utterances=utterances,
        spans=spans,
        catalog=SlotCatalog(labels=gold_labels),
        weak_vocabulary=weak_vocab,
    )


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset back out in the line-delimited format (one utterance per line)."""
    by_utt: dict[str, list[CandidateSpan]] = {uid: [] for uid in dataset.utterances}
    for span in dataset.spans.values():
        by_utt[span.utterance_id].append(span)
    with Path(path).open("w", encoding="utf-8") as fh:
        for uid, utt in dataset.utterances.items():
            record = {
                "utterance_id": utt.id,
                "dialogue_id": utt.dialogue_id,
                "turn": utt.turn_index,
                "tokens": list(utt.tokens),
                "spans": [
                    {
                        "span_id": s.span_id,
                        "start": s.start,
                        "len": s.length,
                        **({"weak_label": s.weak_label} if s.weak_label is not None else {}),
                        **({"gold_label": s.gold_label} if s.gold_label is not None else {}),
                    }
                    for s in sorted(by_utt[uid], key=lambda s: (s.start, s.length, s.span_id))
                ],
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def split_dataset(
    spans: Iterable[str | CandidateSpan],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetSplit:
    """Randomly partition span ids into train/test/validation.

    Deterministic for a given seed; proportions honored within one span
    (train and test sizes are rounded, validation takes the remainder).
    """
    ids = sorted(s if isinstance(s, str) else s.span_id for s in spans)
    if len(set(ids)) != len(ids):
        raise CorpusError("duplicate span ids passed to split_dataset")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"split ratios must sum to 1, got {ratios}")
    if len(ids) < 3:
        raise CorpusError(f"cannot split {len(ids)} spans into three non-empty sets")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    n_train = round(ratios[0] * len(ids))
    n_test = round(ratios[1] * len(ids))
    shuffled = [ids[i] for i in order]
    return DatasetSplit(
        train=tuple(shuffled[:n_train]),
        test=tuple(shuffled[n_train : n_train + n_test]),
        validation=tuple(shuffled[n_train + n_test :]),
    )


def sample_warmup(train_ids: Sequence[str], warmup_fraction: float, seed: int) -> list[str]:
    """Seeded uniform warm-up draw over the train split (sorted id order)."""
    if not 0.0 < warmup_fraction < 1.0:
        raise CorpusError(f"warmup fraction must be in (0, 1), got {warmup_fraction}")
    ids = sorted(train_ids)
    n_warm = round(warmup_fraction * len(ids))
    if n_warm == 0:
        raise CorpusError(f"warm-up selection is empty ({len(ids)} train spans at fraction {warmup_fraction})")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    return [ids[i] for i in order[:n_warm]]


def init_pools(
    dataset: Dataset,
    train_ids: Sequence[str],
    warmup_fraction: float = 0.05,
    seed: int = 0,
) -> tuple[ALPools, SlotCatalog]:
    """Draw the warm-up set and derive the initially-known slot catalog.

    The known set is exactly the distinct gold labels appearing in the
    warm-up sample.
    """
    warm = sample_warmup(train_ids, warmup_fraction, seed)
    missing = [sid for sid in warm if dataset.spans[sid].gold_label is None]
    if missing:
        raise CorpusError(f"warm-up spans lack gold labels: {missing[:5]}")
    pools = ALPools(labeled=set(warm), unlabeled=set(train_ids) - set(warm))
    catalog = dataset.catalog.copy()
    catalog.known = set()
    catalog.mark_known({dataset.spans[sid].gold_label for sid in warm})
    return pools, catalog
