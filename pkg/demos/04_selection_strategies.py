"""Score one unlabeled pool under every selection strategy and compare picks.

Run: python demos/04_selection_strategies.py
"""

import numpy as np

import slotdiscovery as sd
from slotdiscovery import loop as al

dataset = sd.generate(sd.SynthSpec(n_slots=5, n_new_slots=2, n_utterances=400, new_slot_share=0.2, seed=0))
config = sd.RunConfig(
    selection=sd.SelectionConfig(strategy="bi_criteria", batch_fraction=0.05, beta=0.9, seed=0),
    training=sd.TrainingConfig(alpha=0.05, learning_rate=0.03, batch_size=32, max_initial_epochs=15, seed=0),
    model=sd.ModelConfig(encoder_dim=32, projection_dim=48, n_buckets=2048, dropout_rate=0.1),
    stopping=sd.StoppingRule(budget_fraction=0.2, patience=None),
)
state = al.initialize_state(dataset, config)
print(f"warm-up model: test span-F1 {state.warmup.test_f1:.3f}, known slots {state.warmup.known_slots}")

labeled = sorted(state.pools.labeled)
pool = sorted(state.pools.unlabeled)
k = state.batch_size()
for strategy in ("random", "entropy", "margin", "bald", "diversity", "bi_criteria", "hybrid"):
    cfg = sd.SelectionConfig(strategy=strategy, batch_fraction=0.05, beta=0.9, t_passes=5, seed=0)
    result = sd.select_batch(state.model, dataset, state.catalog.mask(), labeled, pool, k, cfg, round_id=1)
    golds = [dataset.spans[sid].gold_label for sid in result.selected]
    new_hits = sum(1 for g in golds if g not in state.catalog.known)
    print(f"{strategy:12s} picks {result.selected[:4]} ...  undiscovered-slot spans: {new_hits}/{k}")

# the bi-criteria score decomposes into uncertainty and diversity parts
cfg = sd.SelectionConfig(strategy="bi_criteria", batch_fraction=0.05, beta=0.9, seed=0)
result = sd.select_batch(state.model, dataset, state.catalog.mask(), labeled, pool, k, cfg, round_id=1)
print("\ntop five by combined bi-criteria score:")
for s in sorted(result.scores, key=lambda s: (-s.combined, s.span_id))[:5]:
    print(f"  {s.span_id}  uncertainty={s.uncertainty:+.4f}  diversity={s.diversity:+.4f}  combined={s.combined:+.4f}")
