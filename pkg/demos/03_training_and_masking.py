"""Train the multi-task classifier and watch the label mask do its job.

Run: python demos/03_training_and_masking.py
"""

import numpy as np

import slotdiscovery as sd
from slotdiscovery import classifier as clf

dataset = sd.generate(sd.SynthSpec(n_slots=5, n_new_slots=2, n_utterances=400, new_slot_share=0.2, seed=0))
split = sd.split_dataset(sorted(dataset.spans), seed=0)
pools, catalog = sd.init_pools(dataset, split.train, warmup_fraction=0.1, seed=0)
print(f"slots: {catalog.labels}")
print(f"known after warm-up: {sorted(catalog.known)}")

model = clf.new_model(
    catalog.labels,
    dataset.weak_vocabulary,
    sd.ModelConfig(encoder_dim=32, projection_dim=48, n_buckets=2048, dropout_rate=0.1),
    seed=0,
)
examples = [
    clf.TrainExample(
        dataset.spans[sid],
        dataset.utterances[dataset.spans[sid].utterance_id],
        dataset.spans[sid].gold_label,
        dataset.spans[sid].weak_label,
    )
    for sid in sorted(pools.labeled)
]
config = sd.TrainingConfig(alpha=0.05, learning_rate=0.03, batch_size=32, max_initial_epochs=25, seed=0)
log = clf.train(model, examples, catalog.mask(), config, phase="initial")
print("\nepoch  slot_loss  weak_loss  total  accuracy")
for row in log.epochs[::6] + [log.epochs[-1]]:
    print(f"{row.epoch:5d}  {row.slot_loss:9.4f}  {row.weak_loss:9.4f}  {row.total_loss:6.4f}  {row.train_accuracy:.2f}")

# masked prediction on an unlabeled span: unknown slots carry exactly zero mass
sid = sorted(pools.unlabeled)[0]
span = dataset.spans[sid]
pred = clf.predict(model, span, dataset.utterances[span.utterance_id], catalog.mask())
print(f"\nmasked distribution for {sid} (gold={span.gold_label}):")
for label, p in zip(model.slot_labels, pred.slot_dist):
    tag = "known" if label in catalog.known else "masked"
    print(f"  {label:8s} {p:8.4f}  [{tag}]")

# discovering a label later just unmasks it; minting a brand-new one grows the head
clf.expand_slot_head(model, ["roomtype"])
print(f"\nafter minting 'roomtype': head now covers {len(model.slot_labels)} labels")
