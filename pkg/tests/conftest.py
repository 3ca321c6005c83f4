"""Shared fixtures: tiny corpora and fast model configurations."""

import json

import pytest

import slotdiscovery as sd


def make_utterance(uid, tokens, dialogue="d0", turn=0):
    return sd.Utterance(id=uid, tokens=tuple(tokens), dialogue_id=dialogue, turn_index=turn)


def make_dataset(records):
    """records: list of (uid, tokens, [(span_id, start, length, weak, gold), ...])."""
    utterances, spans = {}, {}
    for uid, tokens, span_rows in records:
        utterances[uid] = make_utterance(uid, tokens)
        for sid, start, length, weak, gold in span_rows:
            spans[sid] = sd.CandidateSpan(sid, uid, start, length, weak_label=weak, gold_label=gold)
    labels = sorted({s.gold_label for s in spans.values() if s.gold_label})
    weak = sorted({s.weak_label for s in spans.values() if s.weak_label})
    return sd.Dataset(utterances=utterances, spans=spans, catalog=sd.SlotCatalog(labels=labels), weak_vocabulary=weak)


def write_dataset_file(path, dataset):
    sd.save_dataset(dataset, path)
    return path


TINY_MODEL = sd.ModelConfig(encoder_dim=12, projection_dim=16, n_buckets=256, dropout_rate=0.1)


def fast_run_config(**overrides):
    defaults = dict(
        selection=sd.SelectionConfig(strategy="bi_criteria", batch_fraction=0.05, beta=0.9, seed=1),
        training=sd.TrainingConfig(
            alpha=0.05, learning_rate=0.02, batch_size=64, max_initial_epochs=4, epochs_per_iteration=2, seed=1
        ),
        model=TINY_MODEL,
        stopping=sd.StoppingRule(budget_fraction=0.2, patience=None),
    )
    defaults.update(overrides)
    return sd.RunConfig(**defaults)


@pytest.fixture(scope="session")
def small_synth():
    """A 160-utterance synthetic corpus with 2 rare slots."""
    return sd.generate(sd.SynthSpec(n_slots=4, n_new_slots=2, n_utterances=160, new_slot_share=0.2, seed=0))


@pytest.fixture()
def two_pattern_dataset():
    """Two trivially separable slot patterns, 20 utterances each."""
    records = []
    for i in range(20):
        records.append((f"p{i:03d}", ["book", "a", "cheap", "hotel"], [(f"p{i:03d}_s0", 2, 1, "tool_price", "price")]))
        records.append((f"t{i:03d}", ["leave", "after", "7", "pm"], [(f"t{i:03d}_s0", 2, 2, "tool_time", "time")]))
    return make_dataset(records)


def load_csv(path):
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return path
