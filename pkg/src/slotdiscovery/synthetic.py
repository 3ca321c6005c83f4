"""Deterministic synthetic corpora with a controllable known/new slot structure.

Each utterance carries one candidate value span. A configurable subset of
slots plays the "new" role: their spans are rarer than the common slots' and
are placed only on spans that the canonical protocol (split seed 0, warm-up
seed 0, 5% warm-up over the train split) does not draw into the warm-up set,
so a run with those seeds starts with every new slot undiscovered. Weak
labels come from a per-slot tool label, flipped to a random other tool label
at ``noise_rate`` to model tool imperfection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import corpus
from .corpus import CandidateSpan, Dataset, SlotCatalog, Utterance
from .seeding import derive_seed

PROTOCOL_SPLIT_SEED = 0
PROTOCOL_WARMUP_SEED = 0
PROTOCOL_SPLIT_RATIOS = (0.8, 0.1, 0.1)
PROTOCOL_WARMUP_FRACTION = 0.05

_FILLERS = ("please", "find", "me", "something", "with", "near", "that", "has", "a", "nice", "good", "any")

# context-free templates shared by every slot: spans generated from these can
# only be classified by their value tokens, which keeps the task from
# saturating once each slot's contexts have been seen once
_GENERIC_TEMPLATES = (
    "please find me {value} now",
    "i would like {value} please",
    "any {value} would be good",
    "looking for {value} today",
    "do you have {value} there",
)


class SynthError(ValueError):
    """Raised for infeasible generator specs."""


@dataclass
class SynthSpec:
    n_slots: int = 9
    n_new_slots: int = 5
    n_utterances: int = 1000
    vocab_per_slot: int = 12
    templates_per_slot: int = 4
    new_slot_share: float = 0.15
    noise_rate: float = 0.1
    generic_template_rate: float = 0.0
    shared_value_rate: float = 0.0
    weak_subtypes: int = 1
    seed: int = 0
    context_templates: dict[str, list[str]] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.n_new_slots >= self.n_slots:
            raise SynthError(f"n_new_slots ({self.n_new_slots}) must be < n_slots ({self.n_slots})")
        if self.n_new_slots < 0 or self.n_slots < 1:
            raise SynthError("slot counts must be non-negative / positive")
        if not 0.0 <= self.noise_rate < 0.5:
            raise SynthError(f"noise_rate must be in [0, 0.5), got {self.noise_rate}")
        if self.vocab_per_slot < 1:
            raise SynthError("vocab_per_slot must be >= 1 (vocab too small for any utterance)")
        if not 0.0 <= self.new_slot_share < 1.0:
            raise SynthError(f"new_slot_share must be in [0, 1), got {self.new_slot_share}")
        if not 0.0 <= self.generic_template_rate <= 1.0:
            raise SynthError(f"generic_template_rate must be in [0, 1], got {self.generic_template_rate}")
        if not 0.0 <= self.shared_value_rate <= 1.0:
            raise SynthError(f"shared_value_rate must be in [0, 1], got {self.shared_value_rate}")
        if self.weak_subtypes < 1:
            raise SynthError("weak_subtypes must be >= 1")
        if self.templates_per_slot < 1:
            raise SynthError("templates_per_slot must be >= 1")


def slot_names(spec: SynthSpec) -> tuple[list[str], list[str]]:
    """(common slots, new slots); new slots take the last indices."""
    names = [f"slot{i:02d}" for i in range(spec.n_slots)]
    n_common = spec.n_slots - spec.n_new_slots
    return names[:n_common], names[n_common:]


def tool_label(slot: str, subtype: int = 0, n_subtypes: int = 1) -> str:
    """Tool label for a span: one per slot, or a per-slot family of subtypes.

    With subtypes the weak labels refine the slot partition (each weak label
    still maps to exactly one gold slot), so the weak task carries signal the
    slot labels alone do not.
    """
    if n_subtypes <= 1:
        return "tool_" + slot
    return f"tool_{slot}_k{subtype}"


def _all_tool_labels(spec: SynthSpec) -> list[str]:
    common, new = slot_names(spec)
    return [
        tool_label(slot, k, spec.weak_subtypes)
        for slot in common + new
        for k in range(spec.weak_subtypes)
    ]


def _slot_values(spec: SynthSpec, slot_idx: int, is_common: bool) -> list[tuple[str, ...]]:
    """Value token tuples for one slot; every third value is two tokens long.

    Common slots come in pairs (0,1), (2,3), ... that share a configurable
    fraction of value tokens: spans carrying a shared value under a generic
    template are inherently ambiguous, which gives uncertainty-only selection
    a persistent cluster to overspend on.
    """
    n_shared = round(spec.shared_value_rate * spec.vocab_per_slot) if is_common else 0
    pair = slot_idx // 2
    values = []
    for j in range(spec.vocab_per_slot):
        if j < n_shared:
            head = f"vs{pair:02d}x{j:02d}"
        else:
            head = f"v{slot_idx:02d}x{j:02d}"
        values.append((head, f"w{pair if j < n_shared else slot_idx:02d}x{j:02d}") if j % 3 == 2 else (head,))
    return values


def _slot_templates(spec: SynthSpec, slot: str, slot_idx: int) -> list[str]:
    if spec.context_templates and slot in spec.context_templates:
        templates = spec.context_templates[slot]
        if not templates or any("{value}" not in t for t in templates):
            raise SynthError(f"templates for {slot!r} must contain {{value}}")
        return templates
    ctx = [f"c{slot_idx:02d}q{t}" for t in range(3)]
    base = [
        f"{_FILLERS[slot_idx % 4]} {ctx[0]} {{value}} {ctx[1]} {_FILLERS[(slot_idx + 5) % len(_FILLERS)]}",
        f"i want {ctx[1]} {{value}} {ctx[2]}",
        f"{ctx[2]} {{value}} would be {_FILLERS[(slot_idx + 7) % len(_FILLERS)]}",
        f"is there {ctx[0]} {ctx[2]} {{value}}",
        f"{_FILLERS[(slot_idx + 2) % len(_FILLERS)]} {{value}} {ctx[0]}",
        f"looking for {ctx[1]} {{value}} today",
    ]
    return base[: spec.templates_per_slot]


def _canonical_warmup_ids(span_ids: list[str]) -> set[str]:
    split = corpus.split_dataset(span_ids, PROTOCOL_SPLIT_RATIOS, PROTOCOL_SPLIT_SEED)
    warm = corpus.sample_warmup(split.train, PROTOCOL_WARMUP_FRACTION, PROTOCOL_WARMUP_SEED)
    return set(warm)


def generate(spec: SynthSpec) -> Dataset:
    """Build the synthetic dataset in memory (deterministic per spec)."""
    common, new = slot_names(spec)
    n = spec.n_utterances
    span_ids = [f"u{i:05d}_s0" for i in range(n)]
    n_new_spans = round(spec.new_slot_share * n) if new else 0
    if new and n_new_spans < len(new):
        raise SynthError(
            f"new_slot_share {spec.new_slot_share} yields {n_new_spans} spans for {len(new)} new slots"
        )
    if n - n_new_spans < len(common):
        raise SynthError("not enough utterances for the common slots")

    rng = np.random.default_rng(derive_seed(spec.seed, "assign"))
    protected = _canonical_warmup_ids(span_ids) if new else set()
    eligible = sorted(set(span_ids) - protected)
    if n_new_spans > len(eligible):
        raise SynthError("new_slot_share too large for the protected warm-up region")
    new_span_ids = [eligible[i] for i in rng.permutation(len(eligible))[:n_new_spans]]

    assignment: dict[str, str] = {}
    for i, sid in enumerate(sorted(new_span_ids)):
        assignment[sid] = new[i % len(new)]
    rest = sorted(set(span_ids) - set(new_span_ids))
    order = rng.permutation(len(rest))
    for i, idx in enumerate(order.tolist()):
        assignment[rest[idx]] = common[i % len(common)]

    all_slots = common + new
    tools = _all_tool_labels(spec)
    values = {s: _slot_values(spec, i, s in common) for i, s in enumerate(all_slots)}
    templates = {s: _slot_templates(spec, s, i) for i, s in enumerate(all_slots)}

    content_rng = np.random.default_rng(derive_seed(spec.seed, "content"))
    utterances: dict[str, Utterance] = {}
    spans: dict[str, CandidateSpan] = {}
    for i, sid in enumerate(span_ids):
        slot = assignment[sid]
        value_idx = int(content_rng.integers(len(values[slot])))
        value = values[slot][value_idx]
        if spec.generic_template_rate > 0.0 and content_rng.random() < spec.generic_template_rate:
            template = _GENERIC_TEMPLATES[int(content_rng.integers(len(_GENERIC_TEMPLATES)))]
        else:
            template = templates[slot][int(content_rng.integers(len(templates[slot])))]
        parts = template.split()
        v_pos = parts.index("{value}")
        tokens = tuple(parts[:v_pos]) + value + tuple(parts[v_pos + 1 :])
        weak = tool_label(slot, value_idx % spec.weak_subtypes, spec.weak_subtypes)
        if spec.noise_rate > 0.0 and content_rng.random() < spec.noise_rate:
            others = [t for t in tools if t != weak]
            weak = others[int(content_rng.integers(len(others)))]
        utt_id = f"u{i:05d}"
        utterances[utt_id] = Utterance(
            id=utt_id, tokens=tokens, dialogue_id=f"d{i // 8:04d}", turn_index=i % 8
        )
        spans[sid] = CandidateSpan(
            span_id=sid,
            utterance_id=utt_id,
            start=v_pos,
            length=len(value),
            weak_label=weak,
            gold_label=slot,
        )

    return Dataset(
        utterances=utterances,
        spans=spans,
        catalog=SlotCatalog(labels=sorted(all_slots)),
        weak_vocabulary=sorted(tools),
    )


def generate_file(spec: SynthSpec, path) -> Dataset:
    """Generate and write the dataset file; same spec, same bytes."""
    dataset = generate(spec)
    corpus.save_dataset(dataset, path)
    return dataset


def hotel_like_spec(n_utterances: int = 1000, seed: int = 0, noise_rate: float = 0.1) -> SynthSpec:
    """The bundled 4-common/5-new profile used by the acceptance runs.

    The value vocabulary is wide and a large share of utterances use
    context-free templates, so performance at a 21% label budget is governed
    by how well the selection strategy covers values and rare slots rather
    than by template memorization.
    """
    return SynthSpec(
        n_slots=9,
        n_new_slots=5,
        n_utterances=n_utterances,
        vocab_per_slot=24,
        templates_per_slot=4,
        new_slot_share=0.15,
        noise_rate=noise_rate,
        generic_template_rate=0.5,
        shared_value_rate=0.5,
        weak_subtypes=2,
        seed=seed,
    )
