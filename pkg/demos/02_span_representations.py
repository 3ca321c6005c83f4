"""How a candidate value span becomes a vector.

The representation concatenates (a) the mean embedding of the span's own
tokens encoded alone and (b) the mean embedding of the mask tokens standing
in for the span inside the full utterance, then projects through tanh.

Run: python demos/02_span_representations.py
"""

import numpy as np

from slotdiscovery.corpus import CandidateSpan, Utterance
from slotdiscovery.encoder import (
    HashAttentionBackend,
    SpanProjection,
    context_representation,
    encode_span,
    inherent_representation,
    masked_utterance,
)

backend = HashAttentionBackend(dim=32, n_buckets=1024, dropout_rate=0.1, seed=0)
rng = np.random.default_rng(0)
projection = SpanProjection(w1=rng.normal(0, 0.1, size=(48, 64)), b1=np.zeros(48))

utt = Utterance("u0", ("book", "a", "cheap", "hotel", "near", "the", "park"), "d0", 0)
span = CandidateSpan("s0", "u0", 2, 1)  # the token "cheap"

print("utterance:", " ".join(utt.tokens))
print("masked:   ", " ".join(masked_utterance(utt, span, backend.mask_token)))

r_inh = inherent_representation(backend, utt, span)
r_ctx = context_representation(backend, utt, span)
rep = encode_span(backend, projection, utt, span)
print(f"\ninherent dim={r_inh.shape[0]}  context dim={r_ctx.shape[0]}  final dim={rep.r.shape[0]}")
print(f"final rep bounded by tanh: max |r_i| = {np.abs(rep.r).max():.4f}")

# context purity: what sits inside the span cannot influence the context part
luxury = Utterance("u1", ("book", "a", "luxury", "hotel", "near", "the", "park"), "d0", 1)
span_l = CandidateSpan("s1", "u1", 2, 1)
same = np.array_equal(context_representation(backend, utt, span), context_representation(backend, luxury, span_l))
print(f"\nidentical context, different span tokens -> identical context reps: {same}")

# seeded dropout gives reproducible stochastic passes (the BALD ingredient)
a = encode_span(backend, projection, utt, span, dropout_seed=7).r
b = encode_span(backend, projection, utt, span, dropout_seed=7).r
c = encode_span(backend, projection, utt, span, dropout_seed=8).r
print(f"same dropout seed reproduces exactly: {np.array_equal(a, b)}")
print(f"different seed differs: {not np.array_equal(a, c)} (L2 distance {np.linalg.norm(a - c):.4f})")
