"""Span representations over a pluggable contextual token encoder.

A candidate value span is represented by concatenating the mean-pooled
embedding of its own tokens (encoded in isolation) with the mean-pooled
embedding of the mask tokens standing in for it in the full utterance, then
projecting through one linear layer with tanh.

The reference backend is a trainable hash-bucketed embedding table followed
by one self-attention mixing layer with sinusoidal position signals and a
dropout layer; it provides genuine contextualization and seeded stochastic
forward passes without any pretrained-model dependency. Heavier pretrained
encoders can be plugged in behind the same ``embed`` interface.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .corpus import CandidateSpan, Utterance
from .seeding import derive_seed

MASK_TOKEN = "[mask]"


class EncoderError(ValueError):
    """Raised for shape mismatches and invalid encoder configuration."""


@runtime_checkable
class EncoderBackend(Protocol):
    """Contextual token encoder: token strings in, one vector per token out."""

    mask_token: str
    dim: int

    def embed(
        self,
        tokens: Sequence[str],
        dropout_active: bool = False,
        rng_seed: int | None = None,
    ) -> np.ndarray: ...


def token_bucket(token: str, n_buckets: int) -> int:
    """Stable hash bucket for a token (no out-of-vocabulary failure mode)."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % n_buckets


def sinusoidal_positions(n: int, dim: int) -> np.ndarray:
    """Standard sin/cos position signals, shape (n, dim)."""
    positions = np.arange(n, dtype=np.float64)[:, None]
    half = (dim + 1) // 2
    freqs = np.exp(-np.log(10000.0) * (2.0 * np.arange(half) / dim))
    angles = positions * freqs[None, :]
    out = np.zeros((n, dim))
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles[:, : dim // 2])
    return out


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class HashAttentionBackend:
    """Trainable reference encoder.

    Tokens hash into a (n_buckets x dim) embedding table (the mask token owns
    a dedicated extra row), sinusoidal position signals are added, and one
    residual self-attention layer mixes the sequence. Dropout (inverted, with
    a seeded mask) is applied to the layer output when requested; repeated
    calls with the same seed are bit-identical.
    """

    def __init__(
        self,
        dim: int = 64,
        n_buckets: int = 2**15,
        dropout_rate: float = 0.1,
        seed: int = 0,
    ):
        if dim < 2:
            raise EncoderError(f"encoder dim must be >= 2, got {dim}")
        if not 0.0 <= dropout_rate < 1.0:
            raise EncoderError(f"dropout rate must be in [0, 1), got {dropout_rate}")
        self.dim = dim
        self.n_buckets = n_buckets
        self.dropout_rate = dropout_rate
        self.mask_token = MASK_TOKEN
        rng = np.random.default_rng(derive_seed(seed, "backend-init"))
        self.table = rng.normal(0.0, 0.3, size=(n_buckets + 1, dim))
        scale = 1.0 / np.sqrt(dim)
        self.wq = rng.normal(0.0, scale, size=(dim, dim))
        self.wk = rng.normal(0.0, scale, size=(dim, dim))
        self.wv = rng.normal(0.0, scale, size=(dim, dim))
        self._mask_row = n_buckets

    def rows_for(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array(
            [self._mask_row if t == self.mask_token else token_bucket(t, self.n_buckets) for t in tokens],
            dtype=np.int64,
        )

    def parameters(self) -> dict[str, np.ndarray]:
        return {"embed": self.table, "wq": self.wq, "wk": self.wk, "wv": self.wv}

    def embed(
        self,
        tokens: Sequence[str],
        dropout_active: bool = False,
        rng_seed: int | None = None,
    ) -> np.ndarray:
        out, _ = self.embed_with_cache(tokens, dropout_active=dropout_active, rng_seed=rng_seed)
        return out

    def embed_with_cache(
        self,
        tokens: Sequence[str],
        dropout_active: bool = False,
        rng_seed: int | None = None,
    ) -> tuple[np.ndarray, dict]:
        """Forward pass keeping intermediates for :meth:`backward`."""
        if not tokens:
            raise EncoderError("cannot embed an empty token sequence")
        if dropout_active and rng_seed is None:
            raise EncoderError("dropout_active requires rng_seed for a deterministic mask")
        rows = self.rows_for(tokens)
        x0 = self.table[rows] + sinusoidal_positions(len(tokens), self.dim)
        q = x0 @ self.wq
        k = x0 @ self.wk
        v = x0 @ self.wv
        inv_scale = 1.0 / np.sqrt(self.dim)
        attn = _softmax_rows((q @ k.T) * inv_scale)
        h = x0 + attn @ v
        if dropout_active and self.dropout_rate > 0.0:
            keep = 1.0 - self.dropout_rate
            drop_rng = np.random.default_rng(rng_seed)
            drop = (drop_rng.random(h.shape) < keep).astype(np.float64) / keep
        else:
            drop = None
        out = h if drop is None else h * drop
        cache = {"rows": rows, "x0": x0, "q": q, "k": k, "v": v, "attn": attn, "drop": drop, "inv_scale": inv_scale}
        return out, cache

    def backward(self, cache: dict, grad_out: np.ndarray, grads: "GradAccumulator") -> None:
        """Accumulate parameter gradients for one cached forward pass."""
        g = grad_out if cache["drop"] is None else grad_out * cache["drop"]
        x0, q, k, v, attn = cache["x0"], cache["q"], cache["k"], cache["v"], cache["attn"]
        g_x0 = g.copy()
        g_attn = g @ v.T
        g_v = attn.T @ g
        g_scores = attn * (g_attn - (g_attn * attn).sum(axis=1, keepdims=True))
        g_q = (g_scores @ k) * cache["inv_scale"]
        g_k = (g_scores.T @ q) * cache["inv_scale"]
        g_x0 += g_q @ self.wq.T + g_k @ self.wk.T + g_v @ self.wv.T
        grads.add("wq", x0.T @ g_q)
        grads.add("wk", x0.T @ g_k)
        grads.add("wv", x0.T @ g_v)
        grads.add_rows("embed", cache["rows"], g_x0)


class GradAccumulator:
    """Sums per-example gradients; embedding rows are kept sparse."""

    def __init__(self) -> None:
        self.dense: dict[str, np.ndarray] = {}
        self.rows: dict[str, dict[int, np.ndarray]] = {}

    def add(self, name: str, grad: np.ndarray) -> None:
        if name in self.dense:
            self.dense[name] += grad
        else:
            self.dense[name] = grad.copy()

    def add_rows(self, name: str, rows: np.ndarray, grads: np.ndarray) -> None:
        table = self.rows.setdefault(name, {})
        for row, grad in zip(rows.tolist(), grads):
            if row in table:
                table[row] += grad
            else:
                table[row] = grad.copy()

    def scale(self, factor: float) -> None:
        for g in self.dense.values():
            g *= factor
        for table in self.rows.values():
            for g in table.values():
                g *= factor


@dataclass
class SpanProjection:
    """The linear+tanh layer fusing inherent and context representations."""

    w1: np.ndarray  # (out_dim, 2 * d_enc)
    b1: np.ndarray  # (out_dim,)

    @property
    def out_dim(self) -> int:
        return self.w1.shape[0]


@dataclass(frozen=True)
class SpanRepresentation:
    r: np.ndarray
    r_inherent: np.ndarray
    r_context: np.ndarray


def _span_token_slice(utterance: Utterance, span: CandidateSpan) -> tuple[str, ...]:
    if span.start < 0 or span.start + span.length > len(utterance.tokens):
        raise EncoderError(f"span {span.span_id!r} out of bounds for utterance {utterance.id!r}")
    return utterance.tokens[span.start : span.start + span.length]


def inherent_representation(
    backend: EncoderBackend,
    utterance: Utterance,
    span: CandidateSpan,
    dropout_seed: int | None = None,
) -> np.ndarray:
    """Mean pooling of the span's own tokens, encoded in isolation."""
    tokens = _span_token_slice(utterance, span)
    out = backend.embed(tokens, dropout_active=dropout_seed is not None, rng_seed=dropout_seed)
    return out.mean(axis=0)


def masked_utterance(utterance: Utterance, span: CandidateSpan, mask_token: str) -> tuple[str, ...]:
    """The utterance with every span token replaced by the mask token."""
    _span_token_slice(utterance, span)
    tokens = list(utterance.tokens)
    for i in range(span.start, span.start + span.length):
        tokens[i] = mask_token
    return tuple(tokens)


def context_representation(
    backend: EncoderBackend,
    utterance: Utterance,
    span: CandidateSpan,
    dropout_seed: int | None = None,
) -> np.ndarray:
    """Mean pooling over the mask positions of the reconstructed utterance."""
    tokens = masked_utterance(utterance, span, backend.mask_token)
    out = backend.embed(tokens, dropout_active=dropout_seed is not None, rng_seed=dropout_seed)
    return out[span.start : span.start + span.length].mean(axis=0)


def encode_span(
    backend: EncoderBackend,
    projection: SpanProjection,
    utterance: Utterance,
    span: CandidateSpan,
    dropout_seed: int | None = None,
) -> SpanRepresentation:
    """Final span representation: tanh(W1 [inherent; context] + b1)."""
    if projection.w1.shape[1] != 2 * backend.dim:
        raise EncoderError(
            f"projection expects input dim {projection.w1.shape[1]}, backend provides {2 * backend.dim}"
        )
    seeds = (None, None) if dropout_seed is None else (derive_seed(dropout_seed, 0), derive_seed(dropout_seed, 1))
    r_inh = inherent_representation(backend, utterance, span, dropout_seed=seeds[0])
    r_ctx = context_representation(backend, utterance, span, dropout_seed=seeds[1])
    z = np.concatenate([r_inh, r_ctx])
    r = np.tanh(projection.w1 @ z + projection.b1)
    return SpanRepresentation(r=r, r_inherent=r_inh, r_context=r_ctx)
