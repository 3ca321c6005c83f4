"""Build a tiny corpus file, then extract, filter and weakly label candidates.

Run: python demos/01_corpus_and_extraction.py
"""

import json
import tempfile
from pathlib import Path

import slotdiscovery as sd
from slotdiscovery.extraction import FilterConfig, default_extractors, load_stopwords, span_text_frequencies

records = [
    {"utterance_id": "u0", "dialogue_id": "d0", "turn": 0,
     "tokens": ["i", "need", "a", "flight", "to", "New", "York", "at", "7", "pm"], "spans": []},
    {"utterance_id": "u1", "dialogue_id": "d0", "turn": 1,
     "tokens": ["leave", "Boston", "after", "7", "pm", "please"], "spans": []},
    {"utterance_id": "u2", "dialogue_id": "d1", "turn": 0,
     "tokens": ["a", "table", "for", "4", "in", "New", "York"], "spans": []},
]

workdir = Path(tempfile.mkdtemp(prefix="slotdiscovery-demo-"))
corpus_path = workdir / "corpus.jsonl"
corpus_path.write_text("\n".join(json.dumps(r) for r in records))
dataset = sd.load_dataset(corpus_path)
print(f"loaded {len(dataset.utterances)} utterances from {corpus_path}")

# union of the built-in extractors (pattern matcher + capitalized chunks)
output = sd.extract_candidates(dataset.utterances.values(), default_extractors())
print(f"\nextracted {len(output.spans)} candidates via {output.source}:")
for entry in output.spans:
    utt = dataset.utterances[entry.span.utterance_id]
    text = " ".join(utt.tokens[entry.span.start : entry.span.start + entry.span.length])
    print(f"  {entry.span.utterance_id} [{entry.span.start}:{entry.span.start + entry.span.length}] "
          f"{text!r:14} weak={entry.span.weak_label} votes={entry.vote_count}")

# drop stopwords and singleton texts, then force exactly one weak label each
candidates = [e.span for e in output.spans]
config = FilterConfig(stopword_list=load_stopwords(), min_frequency=2)
frequencies = span_text_frequencies(candidates, dataset.utterances)
kept = sd.filter_candidates(candidates, dataset.utterances, config, frequencies)
kept = sd.assign_weak_labels(kept, dataset.utterances)
print(f"\nafter filtering (min_frequency=2): {len(kept)} of {len(candidates)} candidates")
for span in kept:
    utt = dataset.utterances[span.utterance_id]
    text = " ".join(utt.tokens[span.start : span.start + span.length])
    print(f"  {text!r:14} -> {span.weak_label}")
