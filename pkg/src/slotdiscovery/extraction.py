"""Candidate value extraction, filtering and weak labeling.

Pluggable extractors stand in for external language tools: a gazetteer
matcher, a pattern matcher for numbers and times, and a capitalized-chunk
matcher. Their results are unioned; a span found by several extractors keeps
one entry with an incremented vote count and its weak labels concatenated in
priority order (gazetteer > pattern > capitalized-chunk).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from .corpus import CandidateSpan, Utterance

WEAK_LABEL_SEPARATOR = "|"
DEFAULT_MIN_FREQUENCY = 2
OTHER_LABEL = "other"


class ExtractionError(ValueError):
    """Raised for invalid extractor configuration or weak-label problems."""


class Extractor(Protocol):
    name: str
    priority: int

    def extract(self, utterance: Utterance) -> list[tuple[int, int, str]]:
        """Return (start, length, weak_label) triples for one utterance."""
        ...


_NUMBER_RE = re.compile(r"^\d+(\.\d+)?$")
_CLOCK_RE = re.compile(r"^\d{1,2}:\d{2}$")
_MERIDIEM_RE = re.compile(r"^(am|pm|a\.m\.|p\.m\.)$", re.IGNORECASE)
_COMPACT_TIME_RE = re.compile(r"^\d{1,2}(am|pm)$", re.IGNORECASE)
_CAPITALIZED_RE = re.compile(r"^[A-Z][\w.'-]*$")

TIME_LABEL = "time-pattern"
NUMBER_LABEL = "number-pattern"
CHUNK_LABEL = "capitalized-chunk"


class PatternMatcher:
    """Matches number and time expressions ("7 pm", "19:30", "7pm", "42")."""

    name = "pattern"
    priority = 1

    def extract(self, utterance: Utterance) -> list[tuple[int, int, str]]:
        spans = []
        tokens = utterance.tokens
        i = 0
        while i < len(tokens):
            token = tokens[i]
            if _NUMBER_RE.match(token) and i + 1 < len(tokens) and _MERIDIEM_RE.match(tokens[i + 1]):
                spans.append((i, 2, TIME_LABEL))
                i += 2
                continue
            if _CLOCK_RE.match(token) or _COMPACT_TIME_RE.match(token):
                spans.append((i, 1, TIME_LABEL))
            elif _NUMBER_RE.match(token):
                spans.append((i, 1, NUMBER_LABEL))
            i += 1
        return spans


class CapitalizedChunkMatcher:
    """Matches maximal runs of capitalized tokens (skipping position 0 alone)."""

    name = "capitalized-chunk"
    priority = 2

    def extract(self, utterance: Utterance) -> list[tuple[int, int, str]]:
        spans = []
        tokens = utterance.tokens
        i = 0
        while i < len(tokens):
            if _CAPITALIZED_RE.match(tokens[i]):
                j = i
                while j < len(tokens) and _CAPITALIZED_RE.match(tokens[j]):
                    j += 1
                # a lone sentence-initial capital is usually just casing
                if not (i == 0 and j == 1):
                    spans.append((i, j - i, CHUNK_LABEL))
                i = j
            else:
                i += 1
        return spans


class GazetteerMatcher:
    """Matches known phrases from a lexicon; longest match wins per position.

    Entries map a lowercased token tuple to a weak label (default
    "gazetteer" when the lexicon file does not name one).
    """

    name = "gazetteer"
    priority = 0

    def __init__(self, entries: Mapping[tuple[str, ...], str]):
        if not entries:
            raise ExtractionError("gazetteer has no entries")
        self.entries = dict(entries)
        self._max_len = max(len(k) for k in self.entries)

    @classmethod
    def from_file(cls, path: str | Path, default_label: str = "gazetteer") -> "GazetteerMatcher":
        """One entry per line: ``phrase`` or ``phrase<TAB>label``."""
        entries: dict[tuple[str, ...], str] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            phrase, _, label = line.partition("\t")
            key = tuple(phrase.lower().split())
            if key:
                entries[key] = label.strip() or default_label
        return cls(entries)

    def extract(self, utterance: Utterance) -> list[tuple[int, int, str]]:
        lowered = tuple(t.lower() for t in utterance.tokens)
        spans = []
        i = 0
        while i < len(lowered):
            for length in range(min(self._max_len, len(lowered) - i), 0, -1):
                label = self.entries.get(lowered[i : i + length])
                if label is not None:
                    spans.append((i, length, label))
                    i += length - 1  # consume the match; no sub-spans of it
                    break
            i += 1
        return spans


def default_extractors(gazetteer: GazetteerMatcher | None = None) -> list[Extractor]:
    extractors: list[Extractor] = []
    if gazetteer is not None:
        extractors.append(gazetteer)
    extractors.extend([PatternMatcher(), CapitalizedChunkMatcher()])
    return extractors


@dataclass(frozen=True)
class ExtractedSpan:
    span: CandidateSpan
    vote_count: int
    sources: tuple[str, ...]


@dataclass
class ExtractorOutput:
    spans: list[ExtractedSpan]
    source: str
    errors: list[str] = field(default_factory=list)


def extract_candidates(
    utterances: Iterable[Utterance],
    extractors: Sequence[Extractor],
) -> ExtractorOutput:
    """Union of all extractor spans over all utterances.

    Identical (utterance, start, length) hits merge into one span whose vote
    count is the number of distinct extractors that found it and whose weak
    label joins the per-extractor labels in priority order. An extractor
    failure on one utterance is recorded and skipped.
    """
    if not extractors:
        raise ExtractionError("no extractors registered")
    ordered = sorted(extractors, key=lambda e: (e.priority, e.name))
    found: dict[tuple[str, int, int], dict[str, str]] = {}
    errors: list[str] = []
    for utt in sorted(utterances, key=lambda u: u.id):
        for extractor in ordered:
            try:
                hits = extractor.extract(utt)
            except Exception as exc:  # noqa: BLE001 - tool failures are data, not bugs
                errors.append(f"{extractor.name} failed on utterance {utt.id!r}: {exc}")
                continue
            for start, length, label in hits:
                if start < 0 or length < 1 or start + length > len(utt.tokens):
                    errors.append(f"{extractor.name} produced out-of-bounds span on {utt.id!r}")
                    continue
                key = (utt.id, start, length)
                found.setdefault(key, {}).setdefault(extractor.name, label)
    merged: list[ExtractedSpan] = []
    for (utt_id, start, length), by_source in sorted(found.items()):
        sources = tuple(e.name for e in ordered if e.name in by_source)
        labels = []
        for source in sources:
            if by_source[source] not in labels:
                labels.append(by_source[source])
        span = CandidateSpan(
            span_id=f"{utt_id}:{start}+{length}",
            utterance_id=utt_id,
            start=start,
            length=length,
            weak_label=WEAK_LABEL_SEPARATOR.join(labels),
        )
        merged.append(ExtractedSpan(span=span, vote_count=len(sources), sources=sources))
    return ExtractorOutput(spans=merged, source="+".join(e.name for e in ordered), errors=errors)


@dataclass
class FilterConfig:
    stopword_list: frozenset[str] = field(default_factory=frozenset)
    min_frequency: int = DEFAULT_MIN_FREQUENCY
    blocklist: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.min_frequency < 1:
            raise ExtractionError(f"min_frequency must be >= 1, got {self.min_frequency}")


def load_stopwords() -> frozenset[str]:
    """The bundled stopword list (lowercased, one word per line)."""
    text = resources.files("slotdiscovery.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def load_wordlist(path: str | Path) -> frozenset[str]:
    return frozenset(
        line.strip().lower()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    )


def span_text_frequencies(
    spans: Iterable[CandidateSpan],
    utterances: Mapping[str, Utterance],
) -> dict[str, int]:
    """Occurrence count of each span's (lowercased) text over the corpus."""
    freq: dict[str, int] = {}
    for span in spans:
        text = _span_text(span, utterances).lower()
        freq[text] = freq.get(text, 0) + 1
    return freq


def _span_text(span: CandidateSpan, utterances: Mapping[str, Utterance]) -> str:
    utt = utterances[span.utterance_id]
    return " ".join(utt.tokens[span.start : span.start + span.length])


def filter_candidates(
    spans: Sequence[CandidateSpan],
    utterances: Mapping[str, Utterance],
    config: FilterConfig,
    frequencies: Mapping[str, int] | None = None,
) -> list[CandidateSpan]:
    """Drop stopword spans, blocklisted spans and low-frequency spans.

    The frequency threshold applies to the whole-span text. Ordering of the
    survivors is preserved; output is always a subset of the input.
    """
    if frequencies is None:
        frequencies = span_text_frequencies(spans, utterances)
    kept = []
    for span in spans:
        text = _span_text(span, utterances).lower()
        if text in config.stopword_list or text in config.blocklist:
            continue
        if frequencies.get(text, 0) < config.min_frequency:
            continue
        kept.append(span)
    return kept


FROM_DATA = "from_data"
HEURISTIC = "heuristic"


def classify_span_text(text: str) -> str:
    """Heuristic pattern class for a span's text; "other" when nothing matches."""
    tokens = text.split()
    if len(tokens) == 2 and _NUMBER_RE.match(tokens[0]) and _MERIDIEM_RE.match(tokens[1]):
        return TIME_LABEL
    if len(tokens) == 1 and (_CLOCK_RE.match(tokens[0]) or _COMPACT_TIME_RE.match(tokens[0])):
        return TIME_LABEL
    if all(_NUMBER_RE.match(t) for t in tokens):
        return NUMBER_LABEL
    if all(_CAPITALIZED_RE.match(t) for t in tokens):
        return CHUNK_LABEL
    return OTHER_LABEL


def assign_weak_labels(
    spans: Sequence[CandidateSpan],
    utterances: Mapping[str, Utterance],
    source: str = HEURISTIC,
) -> list[CandidateSpan]:
    """Give every span exactly one non-empty weak label.

    ``from_data`` requires labels to be present already (multi-source labels
    are resolved to the highest-priority component); ``heuristic`` fills any
    gap from the pattern classes.
    """
    if source not in (FROM_DATA, HEURISTIC):
        raise ExtractionError(f"unknown weak-label source {source!r}")
    if source == FROM_DATA:
        missing = [s.span_id for s in spans if not s.weak_label]
        if missing:
            raise ExtractionError(f"spans missing weak labels in from_data mode: {missing}")
    out = []
    for span in spans:
        if span.weak_label:
            label = span.weak_label.split(WEAK_LABEL_SEPARATOR)[0]
        else:
            label = classify_span_text(_span_text(span, utterances))
        out.append(
            span if label == span.weak_label else CandidateSpan(
                span_id=span.span_id,
                utterance_id=span.utterance_id,
                start=span.start,
                length=span.length,
                weak_label=label,
                gold_label=span.gold_label,
            )
        )
    return out
