"""Selection criteria and strategies against analytic values and brute force."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import slotdiscovery as sd
from slotdiscovery.sampling import (
    PoolItem,
    SamplingError,
    SelectionConfig,
    bald_disagreement,
    max_similarity,
)

from conftest import TINY_MODEL, fast_run_config


class TestEntropy:
    def test_uniform_four(self):
        assert sd.entropy_score(np.full(4, 0.25)) == pytest.approx(math.log(4), abs=1e-9)

    def test_one_hot(self):
        assert sd.entropy_score(np.array([0.0, 1.0, 0.0])) == 0.0

    def test_half_half(self):
        assert sd.entropy_score(np.array([0.5, 0.5, 0.0, 0.0])) == pytest.approx(math.log(2), abs=1e-9)

    def test_negative_entries_rejected(self):
        with pytest.raises(SamplingError):
            sd.entropy_score(np.array([-0.1, 1.1]))

    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12))
    @settings(max_examples=60, deadline=None)
    def test_bounds(self, raw):
        """0 <= entropy <= ln(n); masking only removes mass, so this holds
        for masked unnormalized vectors too."""
        values = np.asarray(raw)
        total = values.sum()
        if total > 0:
            values = values / total  # a proper distribution
        h = sd.entropy_score(values)
        assert -1e-12 <= h <= math.log(len(values)) + 1e-12


class TestMargin:
    def test_analytic(self):
        assert sd.margin_score(np.array([0.6, 0.3, 0.1])) == pytest.approx(0.3)

    def test_one_hot_is_maximal(self):
        assert sd.margin_score(np.array([0.0, 1.0, 0.0])) == 1.0

    def test_uniform_tie(self):
        assert sd.margin_score(np.full(5, 0.2)) == pytest.approx(0.0)

    def test_needs_two_entries(self):
        with pytest.raises(SamplingError):
            sd.margin_score(np.array([1.0]))


class TestBald:
    def test_full_agreement(self):
        assert bald_disagreement([3, 3, 3, 3, 3]) == 0.0

    def test_paper_style_case(self):
        # passes [a, a, b, a, c] -> 1 - 3/5
        assert bald_disagreement([0, 0, 1, 0, 2]) == pytest.approx(0.4)

    def test_all_distinct(self):
        assert bald_disagreement([0, 1, 2, 3, 4]) == pytest.approx(0.8)

    def test_mode_tie_breaks_to_smallest_label(self):
        # labels 1 and 0 both appear twice; mode must be 0
        assert bald_disagreement([1, 1, 0, 0, 2]) == pytest.approx(1 - 2 / 5)

    def test_model_integration_range_and_determinism(self, small_synth):
        model = sd.new_model(small_synth.catalog.labels, small_synth.weak_vocabulary, TINY_MODEL, seed=0)
        mask = np.ones(len(model.slot_labels))
        sid = sorted(small_synth.spans)[0]
        span = small_synth.spans[sid]
        utt = small_synth.utterances[span.utterance_id]
        t = 5
        first = sd.bald_score(model, span, utt, mask, t_passes=t, base_seed=9)
        second = sd.bald_score(model, span, utt, mask, t_passes=t, base_seed=9)
        assert first == second
        grid = [i / t for i in range(t)]
        assert any(math.isclose(first, g, abs_tol=1e-12) for g in grid)


class TestDiversity:
    def test_query_equals_labeled(self):
        reps = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert sd.diversity_score(np.array([1.0, 0.0]), reps) == pytest.approx(-1.0)

    def test_orthogonal(self):
        reps = np.array([[1.0, 0.0]])
        assert sd.diversity_score(np.array([0.0, 2.0]), reps) == pytest.approx(0.0)

    def test_forty_five_degrees(self):
        reps = np.array([[1.0, 0.0]])
        query = np.array([1.0, 1.0]) / math.sqrt(2)
        assert sd.diversity_score(query, reps) == pytest.approx(-math.cos(math.pi / 4), abs=1e-9)

    def test_zero_norm_query_treated_as_zero(self):
        assert sd.diversity_score(np.zeros(2), np.array([[1.0, 0.0]])) == 0.0

    def test_zero_norm_labeled_row_ignored(self):
        reps = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert max_similarity(np.array([1.0, 0.0]), reps) == pytest.approx(1.0)

    def test_empty_labeled_set_rejected(self):
        with pytest.raises(SamplingError):
            sd.diversity_score(np.array([1.0]), np.zeros((0, 1)))


def random_pool(rng, n, dim=4):
    items = []
    for i in range(n):
        items.append(
            PoolItem(
                span_id=f"s{rng.integers(0, 10**6):07d}_{i}",
                margin=float(rng.random()),
                entropy=float(rng.random()),
                representation=rng.normal(size=dim),
                weak_label=f"w{rng.integers(0, 3)}",
            )
        )
    return items


def brute_force_bi_criteria(items, labeled_reps, beta, k):
    """Independent reranking: per-span score computed with plain python."""
    def score(item):
        uncertainty = -item.margin
        best = -2.0
        for row in labeled_reps:
            na = math.sqrt(sum(x * x for x in row))
            nb = math.sqrt(sum(x * x for x in item.representation))
            sim = 0.0 if na == 0 or nb == 0 else sum(a * b for a, b in zip(row, item.representation)) / (na * nb)
            best = max(best, sim)
        return beta * uncertainty + (1 - beta) * (-best)

    ranked = sorted(items, key=lambda i: (-score(i), i.span_id))
    return [i.span_id for i in ranked[:k]]


class TestBiCriteria:
    def test_beta_one_equals_margin_ordering(self):
        """Full-permutation equality with ascending-margin ordering."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            items = random_pool(rng, int(rng.integers(2, 51)))
            ordering = sd.bi_criteria_select(items, None, beta=1.0, k=len(items))
            margin_order = [i.span_id for i in sorted(items, key=lambda i: (i.margin, i.span_id))]
            assert ordering == margin_order

    def test_beta_zero_equals_diversity_ordering(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            items = random_pool(rng, int(rng.integers(2, 51)))
            labeled = rng.normal(size=(int(rng.integers(1, 8)), 4))
            ordering = sd.bi_criteria_select(items, labeled, beta=0.0, k=len(items))
            div = {i.span_id: sd.diversity_score(i.representation, labeled) for i in items}
            diversity_order = [i.span_id for i in sorted(items, key=lambda i: (-div[i.span_id], i.span_id))]
            assert ordering == diversity_order

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            items = random_pool(rng, int(rng.integers(4, 13)))
            labeled = rng.normal(size=(int(rng.integers(1, 6)), 4))
            k = int(rng.integers(1, 5))
            beta = float(rng.choice([0.3, 0.5, 0.9]))
            assert sd.bi_criteria_select(items, labeled, beta, k) == brute_force_bi_criteria(
                items, labeled, beta, k
            )

    def test_six_span_pool_oracle(self):
        rng = np.random.default_rng(3)
        items = random_pool(rng, 6)
        labeled = rng.normal(size=(3, 4))
        assert sd.bi_criteria_select(items, labeled, beta=0.9, k=3) == brute_force_bi_criteria(
            items, labeled, 0.9, 3
        )

    def test_empty_labeled_set_rejected_when_beta_below_one(self):
        items = random_pool(np.random.default_rng(4), 5)
        with pytest.raises(SamplingError, match="labeled set is empty"):
            sd.bi_criteria_select(items, np.zeros((0, 4)), beta=0.5, k=2)

    def test_incremental_variant_penalizes_redundancy(self):
        """Two near-duplicates: one-shot picks both, greedy MMR spreads out."""
        reps = {
            "s0": np.array([1.0, 0.0]),
            "s1": np.array([0.999, 0.01]),
            "s2": np.array([0.0, 1.0]),
        }
        items = [PoolItem(sid, margin=0.1, entropy=0.0, representation=r) for sid, r in reps.items()]
        labeled = np.array([[-1.0, 0.0]])
        static = sd.bi_criteria_select(items, labeled, beta=0.2, k=2, incremental=False)
        greedy = sd.bi_criteria_select(items, labeled, beta=0.2, k=2, incremental=True)
        assert set(static) == {"s0", "s1"}
        assert set(greedy) == {"s0", "s2"} or set(greedy) == {"s1", "s2"}


class TestHybrid:
    def test_single_weak_label_reduces_to_margin(self):
        rng = np.random.default_rng(5)
        items = [
            PoolItem(f"s{i}", margin=float(rng.random()), entropy=0.0, representation=np.zeros(2), weak_label="w")
            for i in range(8)
        ]
        top = sd.hybrid_select(items, k=3, coarse_multiplier=2.0)
        margin_top = [i.span_id for i in sorted(items, key=lambda i: (i.margin, i.span_id))][:3]
        assert top == margin_top

    def test_two_groups_one_each(self):
        items = [
            PoolItem("s0", margin=0.1, entropy=0.0, representation=np.zeros(2), weak_label="wa"),
            PoolItem("s1", margin=0.2, entropy=0.0, representation=np.zeros(2), weak_label="wa"),
            PoolItem("s2", margin=0.3, entropy=0.0, representation=np.zeros(2), weak_label="wb"),
            PoolItem("s3", margin=0.4, entropy=0.0, representation=np.zeros(2), weak_label="wb"),
        ]
        picked = sd.hybrid_select(items, k=2, coarse_multiplier=2.0)
        assert picked == ["s0", "s2"]

    def test_nine_span_three_group_hand_trace(self):
        """Hand-simulated two stages: coarse = 6 lowest margins, groups
        ordered by their most uncertain member, round-robin one per group."""
        margins = {"s0": 0.05, "s1": 0.10, "s2": 0.15, "s3": 0.20, "s4": 0.25, "s5": 0.30,
                   "s6": 0.70, "s7": 0.80, "s8": 0.90}
        weak = {"s0": "wb", "s1": "wa", "s2": "wb", "s3": "wc", "s4": "wa", "s5": "wc",
                "s6": "wa", "s7": "wb", "s8": "wc"}
        items = [
            PoolItem(sid, margin=margins[sid], entropy=0.0, representation=np.zeros(2), weak_label=weak[sid])
            for sid in margins
        ]
        # stage 1 -> {s0..s5}; groups: wb=[s0,s2], wa=[s1,s4], wc=[s3,s5]
        # group order by best margin: wb (0.05), wa (0.10), wc (0.20)
        # round robin -> s0, s1, s3
        assert sd.hybrid_select(items, k=3, coarse_multiplier=2.0) == ["s0", "s1", "s3"]

    def test_coarse_stage_too_large(self):
        items = [PoolItem("s0", 0.5, 0.0, np.zeros(2), "w")]
        with pytest.raises(SamplingError, match="coarse"):
            sd.hybrid_select(items, k=1, coarse_multiplier=2.0)


class TestRandomSelect:
    def test_exhaustion_returns_whole_pool(self):
        ids = [f"s{i}" for i in range(7)]
        assert sorted(sd.random_select(ids, 7, seed=0)) == sorted(ids)

    def test_determinism(self):
        ids = [f"s{i}" for i in range(30)]
        assert sd.random_select(ids, 5, seed=3) == sd.random_select(ids, 5, seed=3)

    def test_empty_selection(self):
        assert sd.random_select(["a", "b"], 0, seed=0) == []

    def test_oversized_request_rejected(self):
        with pytest.raises(SamplingError):
            sd.random_select(["a"], 2, seed=0)


@pytest.fixture(scope="module")
def scored_setup(small_synth):
    return sd.initialize_state(small_synth, fast_run_config())


class TestSelectBatch:
    @pytest.mark.parametrize("strategy", ["random", "entropy", "margin", "bald", "diversity", "bi_criteria"])
    def test_top_k_consistency(self, scored_setup, strategy):
        """The selected set equals the k best spans by independent rescoring."""
        state = scored_setup
        config = SelectionConfig(strategy=strategy, batch_fraction=0.05, beta=0.9, t_passes=3, seed=5)
        result = sd.select_batch(
            state.model, state.dataset, state.catalog.mask(),
            sorted(state.pools.labeled), sorted(state.pools.unlabeled), 6, config, round_id=2,
        )
        by_score = sorted(result.scores, key=lambda s: (-s.combined, s.span_id))
        assert result.selected == [s.span_id for s in by_score[:6]]
        assert not set(result.selected) & state.pools.labeled

    def test_leakage_probe_sees_zero_mass_on_unknown(self, scored_setup):
        state = scored_setup
        mask = state.catalog.mask()
        unknown = np.where(mask == 0.0)[0]
        assert unknown.size > 0
        seen = []

        def probe(round_id, sid, dist, m):
            seen.append(dist[unknown])

        sd.select_batch(
            state.model, state.dataset, mask,
            sorted(state.pools.labeled), sorted(state.pools.unlabeled), 4,
            SelectionConfig(strategy="margin", seed=1), round_id=1, probe=probe,
        )
        assert seen and all(np.all(chunk == 0.0) for chunk in seen)

    def test_oversized_batch_rejected(self, scored_setup):
        state = scored_setup
        with pytest.raises(SamplingError, match="exceeds pool"):
            sd.select_batch(
                state.model, state.dataset, state.catalog.mask(),
                sorted(state.pools.labeled), sorted(state.pools.unlabeled),
                len(state.pools.unlabeled) + 1, SelectionConfig(strategy="margin", seed=1),
            )


class TestSelectionConfig:
    def test_validation(self):
        with pytest.raises(SamplingError):
            SelectionConfig(strategy="nope")
        with pytest.raises(SamplingError):
            SelectionConfig(beta=1.5)
        with pytest.raises(SamplingError):
            SelectionConfig(t_passes=0)
        with pytest.raises(SamplingError):
            SelectionConfig(hybrid_coarse_multiplier=1.0)
