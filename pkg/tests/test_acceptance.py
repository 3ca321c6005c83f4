"""Acceptance suite: one test per criterion, each printing a pass line.

The directional criteria run the full annotation-cycle emulation on the
bundled synthetic corpus (4 common / 5 rare slots) across five seeds with the
protocol settings: 5% warm-up drawn with seed 0, 2% batches, 21% budget,
beta 0.9, alpha 0.05, five dropout passes. Patience is disabled so every run
reaches the same labeled endpoint.
"""

import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

import slotdiscovery as sd
from slotdiscovery import loop as al
from slotdiscovery import classifier as clf
from slotdiscovery.cli import main as cli_main
from slotdiscovery.encoder import GradAccumulator
from slotdiscovery.evaluation import span_f1
from slotdiscovery.sampling import bald_disagreement, bi_criteria_select
from slotdiscovery.synthetic import hotel_like_spec

from test_classifier import toy_example, toy_model
from test_evaluation import oracle_span_f1, random_case
from test_sampling import brute_force_bi_criteria, random_pool

ACCEPT_MODEL = sd.ModelConfig(encoder_dim=48, projection_dim=64, n_buckets=4096, dropout_rate=0.1)
ACCEPT_LR = 0.03
ACCEPT_BATCH = 32
N_SEEDS = 5


def _announce(name, detail=""):
    print(f"\nACCEPTANCE PASS: {name}" + (f" ({detail})" if detail else ""))


def _timed(budget_seconds):
    start = time.monotonic()

    def check():
        elapsed = time.monotonic() - start
        assert elapsed < budget_seconds, f"runtime {elapsed:.1f}s exceeds {budget_seconds}s budget"
        return elapsed

    return check


def accept_config(strategy, seed, mode="multitask", alpha=0.05):
    return sd.RunConfig(
        selection=sd.SelectionConfig(strategy=strategy, batch_fraction=0.02, beta=0.9, t_passes=5, seed=seed),
        training=sd.TrainingConfig(
            alpha=alpha,
            learning_rate=ACCEPT_LR,
            batch_size=ACCEPT_BATCH,
            max_initial_epochs=30,
            epochs_per_iteration=2,
            seed=seed,
            mode=mode,
        ),
        model=ACCEPT_MODEL,
        stopping=sd.StoppingRule(budget_fraction=0.21, patience=None),
        warmup_fraction=0.05,
        split_seed=0,
        warmup_seed=0,
    )


@pytest.fixture(scope="session")
def bundled_corpus():
    """The directional-criteria corpus: WOZ-hotel-like 4 common / 5 rare slots."""
    return sd.generate(hotel_like_spec(n_utterances=2000, seed=0, noise_rate=0.1))


@pytest.fixture(scope="session")
def protocol_corpus():
    """1250 utterances so the 0.8 train split holds exactly 1000 spans."""
    return sd.generate(hotel_like_spec(n_utterances=1250, seed=0, noise_rate=0.1))


@pytest.fixture(scope="session")
def strategy_matrix(bundled_corpus):
    """All directional runs, computed once: four strategies plus the
    no-weak-supervision ablation, five seeds each."""
    check = _timed(900)  # the stated 15-minute budget covers the whole matrix
    finals = {}
    leakage_max = {"value": 0.0}

    def probe(round_id, sid, dist, mask):
        off = dist[mask == 0.0]
        if off.size:
            leakage_max["value"] = max(leakage_max["value"], float(np.abs(off).max()))

    for strategy in ("random", "margin", "diversity", "bi_criteria"):
        finals[strategy] = []
        for seed in range(N_SEEDS):
            state = al.initialize_state(bundled_corpus, accept_config(strategy, seed))
            al.run(state, al.OracleAnnotator(bundled_corpus), probe=probe)
            assert len(state.history) == 8
            finals[strategy].append(state.history[-1].test_f1)
    finals["no_weak"] = []
    for seed in range(N_SEEDS):
        state = al.initialize_state(bundled_corpus, accept_config("bi_criteria", seed, mode="no_weak"))
        al.run(state, al.OracleAnnotator(bundled_corpus), probe=probe)
        finals["no_weak"].append(state.history[-1].test_f1)
    elapsed = check()
    return {"finals": finals, "leakage_max": leakage_max["value"], "elapsed": elapsed}


class TestCriterionAnalytics:
    def test_uncertainty_unit_values(self):
        """Entropy, margin and BALD match their analytic values exactly."""
        check = _timed(1.0)
        assert sd.entropy_score(np.full(4, 0.25)) == pytest.approx(math.log(4), abs=1e-9)
        assert sd.entropy_score(np.array([1.0, 0.0, 0.0])) == 0.0
        assert sd.entropy_score(np.array([0.5, 0.5, 0.0, 0.0])) == pytest.approx(math.log(2), abs=1e-9)
        assert sd.margin_score(np.array([0.0, 1.0, 0.0])) == 1.0
        assert sd.margin_score(np.array([0.6, 0.3, 0.1])) == pytest.approx(0.3, abs=1e-12)
        assert bald_disagreement([0, 0, 1, 0, 2]) == pytest.approx(0.4, abs=1e-12)
        assert bald_disagreement([7, 7, 7]) == 0.0
        elapsed = check()
        _announce("criterion analytics", f"{elapsed:.2f}s")


class TestReductionIdentities:
    def test_beta_endpoints_reduce_exactly(self):
        """bi_criteria(beta=1) == margin ordering and bi_criteria(beta=0) ==
        diversity ordering as exact permutations on 200 random pools."""
        check = _timed(10.0)
        rng = np.random.default_rng(2024)
        for trial in range(200):
            items = random_pool(rng, int(rng.integers(2, 51)))
            labeled = rng.normal(size=(int(rng.integers(1, 6)), 4))
            margin_order = [i.span_id for i in sorted(items, key=lambda i: (i.margin, i.span_id))]
            assert bi_criteria_select(items, labeled, beta=1.0, k=len(items)) == margin_order
            div = {i.span_id: sd.diversity_score(i.representation, labeled) for i in items}
            diversity_order = [i.span_id for i in sorted(items, key=lambda i: (-div[i.span_id], i.span_id))]
            assert bi_criteria_select(items, labeled, beta=0.0, k=len(items)) == diversity_order
        elapsed = check()
        _announce("reduction identities", f"200 pools, {elapsed:.2f}s")


class TestMMROracle:
    def test_selection_matches_exhaustive_rescoring(self):
        check = _timed(10.0)
        rng = np.random.default_rng(77)
        for trial in range(100):
            items = random_pool(rng, int(rng.integers(2, 13)))
            labeled = rng.normal(size=(int(rng.integers(1, 6)), 4))
            k = int(rng.integers(1, min(4, len(items)) + 1))
            beta = float(rng.choice([0.2, 0.5, 0.9]))
            assert bi_criteria_select(items, labeled, beta, k) == brute_force_bi_criteria(
                items, labeled, beta, k
            )
        elapsed = check()
        _announce("MMR brute-force oracle", f"100 pools, {elapsed:.2f}s")


class TestMaskLeakage:
    def test_zero_mass_on_unknown_labels_every_iteration(self, strategy_matrix):
        """Every distribution scored during sampling, across every run and
        iteration of the matrix, puts exactly zero mass outside the known set."""
        assert strategy_matrix["leakage_max"] == 0.0
        _announce("mask leakage", "max off-mask mass 0.0 across all runs")


class TestMetricOracle:
    def test_span_f1_exact(self):
        check = _timed(5.0)
        rng = np.random.default_rng(5)
        for _ in range(500):
            gold, predicted = random_case(rng)
            ours = span_f1(gold, predicted)
            p, r, f1 = oracle_span_f1(gold, predicted)
            assert ours.precision == pytest.approx(p, abs=1e-12)
            assert ours.recall == pytest.approx(r, abs=1e-12)
            assert ours.f1 == pytest.approx(f1, abs=1e-12)
        hand = span_f1({"A": {"s1", "s2"}, "B": {"s3"}}, {"A": {"s1"}, "B": {"s3", "s4"}})
        assert hand.precision == pytest.approx(0.6667, abs=5e-5)
        assert hand.recall == pytest.approx(0.6667, abs=5e-5)
        assert hand.f1 == pytest.approx(0.6667, abs=5e-5)
        elapsed = check()
        _announce("metric oracle", f"500 cases + hand case, {elapsed:.2f}s")


class TestGradientChecks:
    def test_loss_gradients_match_finite_differences(self):
        """Analytic gradients of the blended loss for the projection and both
        heads agree with central differences within 1e-3 relative error."""
        check = _timed(30.0)
        model = toy_model()
        ex = toy_example()
        mask = np.array([1.0, 1.0, 0.0])
        alpha = 0.3

        def loss():
            pred = clf.predict(model, ex.span, ex.utterance, mask)
            return clf.multi_task_loss(pred.slot_dist, pred.weak_dist, np.eye(3)[1], np.eye(2)[1], alpha)

        grads = GradAccumulator()
        clf._forward_backward(model, ex, mask, alpha, grads, None)
        params = model.parameters()
        eps = 1e-6
        for name in ("w1", "b1", "slot_w", "slot_b", "weak_w", "weak_b"):
            p = params[name]
            numeric = np.zeros_like(p)
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = p[idx]
                p[idx] = orig + eps
                up = loss()
                p[idx] = orig - eps
                down = loss()
                p[idx] = orig
                numeric[idx] = (up - down) / (2 * eps)
            analytic = grads.dense[name]
            denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
            rel = np.linalg.norm(analytic - numeric) / denom
            assert rel < 1e-3, f"{name}: relative error {rel:.2e}"
        elapsed = check()
        _announce("gradient checks", f"{elapsed:.2f}s")


class TestProtocolArithmetic:
    def test_eight_iterations_of_twenty(self, protocol_corpus):
        """1000 train spans, 5% warm-up, 2% batches, 21% budget: exactly 8
        selection iterations of 20 spans each after the 50-span warm-up."""
        config = accept_config("margin", seed=0)
        state = al.initialize_state(protocol_corpus, config)
        assert len(state.split.train) == 1000
        assert len(state.pools.labeled) == 50
        al.run(state, al.OracleAnnotator(protocol_corpus))
        assert len(state.history) == 8
        assert all(len(r.selected) == 20 for r in state.history)
        assert len(state.pools.labeled) == 210
        _announce("protocol arithmetic", "50-span warm-up + 8 iterations x 20 spans = 210")


class TestDirectionalReproduction:
    def test_strategy_ordering(self, strategy_matrix):
        """Mean final span-F1 over 5 seeds: bi-criteria beats random by at
        least 2 points and stays within 0.5 points of the best single
        strategy."""
        finals = strategy_matrix["finals"]
        means = {s: float(np.mean(v)) for s, v in finals.items()}
        detail = ", ".join(f"{s}={means[s]:.4f}" for s in ("bi_criteria", "random", "margin", "diversity"))
        assert means["bi_criteria"] >= means["random"] + 0.02, detail
        assert means["bi_criteria"] >= max(means["margin"], means["diversity"]) - 0.005, detail
        _announce("directional strategy ordering", f"{detail}; {strategy_matrix['elapsed']:.0f}s")


class TestWeakSupervisionEffect:
    def test_multitask_beats_no_weak(self, strategy_matrix):
        """Per-seed finals are reported; the means must differ strictly."""
        finals = strategy_matrix["finals"]
        multitask = finals["bi_criteria"]
        no_weak = finals["no_weak"]
        per_seed = "; ".join(
            f"seed{i}: multitask={m:.4f} no_weak={n:.4f}" for i, (m, n) in enumerate(zip(multitask, no_weak))
        )
        print(f"\nweak-supervision per-seed finals: {per_seed}")
        assert float(np.mean(multitask)) > float(np.mean(no_weak)), per_seed
        _announce(
            "weak supervision direction",
            f"multitask={np.mean(multitask):.4f} > no_weak={np.mean(no_weak):.4f}",
        )


class TestDeterminism:
    def test_simulate_rerun_byte_identical(self, tmp_path):
        """Identical manifests produce byte-identical learning-curve CSVs."""
        data = tmp_path / "toy.jsonl"
        sd.generate_file(sd.SynthSpec(n_slots=4, n_new_slots=2, n_utterances=160, new_slot_share=0.2, seed=0), data)
        runner = CliRunner()
        args = [
            "--strategy", "bi_criteria", "--seeds", "0",
            "--encoder-dim", "12", "--projection-dim", "16", "--buckets", "256",
            "--initial-epochs", "3", "--incremental-epochs", "1", "--learning-rate", "0.02",
            "--batch-fraction", "0.05", "--budget", "0.15", "--no-early-stop",
        ]
        outputs = []
        for name in ("run_a", "run_b"):
            outdir = tmp_path / name
            result = runner.invoke(cli_main, ["simulate", "--data", str(data), "--outdir", str(outdir)] + args)
            assert result.exit_code == 0, result.output
            outputs.append((outdir / "curves" / "bi_criteria_seed0.csv").read_bytes())
        assert outputs[0] == outputs[1]
        _announce("determinism", "byte-identical curve CSV on rerun")
