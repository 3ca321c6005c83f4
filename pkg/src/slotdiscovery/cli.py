"""Command-line entry point tying the modules into reproducible workflows.

Every command writes a run manifest (config snapshot, input digests, seeds,
planned outputs) before producing any output, so a run can be audited and
repeated byte-for-byte. Exit codes: 0 success, 1 runtime failure, 2 usage
error.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import socket
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import __version__, persistence
from . import loop as al
from .classifier import ModelConfig, TrainingConfig, TRAINING_MODES
from .corpus import CandidateSpan, Dataset, SlotCatalog, Utterance, load_dataset, save_dataset
from .evaluation import curve_report, mean_of_differences
from .extraction import (
    FilterConfig,
    GazetteerMatcher,
    assign_weak_labels,
    default_extractors,
    extract_candidates,
    filter_candidates,
    load_stopwords,
    load_wordlist,
    span_text_frequencies,
)
from .loop import RunConfig, StoppingRule
from .sampling import STRATEGIES, SelectionConfig, select_batch
from .synthetic import SynthSpec, generate_file

logger = logging.getLogger(__name__)


def _command_errors(fn):
    """Map runtime failures to exit code 1 (click handles usage errors as 2)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, click.Abort, SystemExit):
            raise
        except Exception as exc:  # noqa: BLE001 - boundary of the process
            logger.debug("command failed", exc_info=True)
            raise click.ClickException(str(exc)) from exc

    return wrapper


def write_manifest(path: Path, command: str, params: dict, inputs: list[Path], outputs: list[str]) -> None:
    manifest = {
        "schema": "1",
        "command": command,
        "version": __version__,
        "params": params,
        "inputs": [{"path": str(p), "sha256": persistence.file_digest(p)} for p in inputs],
        "outputs": outputs,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_seeds(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part.strip() != ""]


def _parse_strategies(text: str) -> list[str]:
    if text == "all":
        return list(STRATEGIES)
    names = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [n for n in names if n not in STRATEGIES]
    if unknown:
        raise click.BadParameter(f"unknown strategies {unknown}; choose from {STRATEGIES} or 'all'")
    return names


def _fmt(x: float) -> str:
    return f"{x:.6f}"


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Active discovery of new dialogue slot types and values."""
    level = os.environ.get("SLOTDISCOVERY_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


# -- generate ---------------------------------------------------------------


@main.command()
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--utterances", default=1000, show_default=True)
@click.option("--slots", default=9, show_default=True)
@click.option("--new-slots", default=5, show_default=True)
@click.option("--vocab-per-slot", default=12, show_default=True)
@click.option("--templates-per-slot", default=4, show_default=True)
@click.option("--new-slot-share", default=0.15, show_default=True)
@click.option("--noise", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_command_errors
def generate(out_path, utterances, slots, new_slots, vocab_per_slot, templates_per_slot, new_slot_share, noise, seed):
    """Generate a synthetic corpus with a known/new slot structure."""
    spec = SynthSpec(
        n_slots=slots,
        n_new_slots=new_slots,
        n_utterances=utterances,
        vocab_per_slot=vocab_per_slot,
        templates_per_slot=templates_per_slot,
        new_slot_share=new_slot_share,
        noise_rate=noise,
        seed=seed,
    )
    out = Path(out_path)
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "generate", asdict(spec), [], [str(out)])
    dataset = generate_file(spec, out)
    click.echo(f"wrote {len(dataset.utterances)} utterances / {len(dataset.spans)} spans to {out}")


# -- convert ----------------------------------------------------------------


def _read_bio(path: Path) -> list[list[tuple[str, str]]]:
    sentences: list[list[tuple[str, str]]] = []
    current: list[tuple[str, str]] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            if current:
                sentences.append(current)
                current = []
            continue
        parts = line.split()
        if len(parts) < 2:
            raise click.ClickException(f"{path.name}:{lineno}: expected 'token TAG', got {line!r}")
        current.append((parts[0], parts[-1]))
    if current:
        sentences.append(current)
    return sentences


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--turns-per-dialogue", default=8, show_default=True)
@_command_errors
def convert(in_path, out_path, turns_per_dialogue):
    """Convert BIO-tagged two-column text into the dataset format."""
    sentences = _read_bio(Path(in_path))
    if not sentences:
        raise click.ClickException(f"{in_path} contains no sentences")
    out = Path(out_path)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        "convert",
        {"turns_per_dialogue": turns_per_dialogue},
        [Path(in_path)],
        [str(out)],
    )
    utterances: dict[str, Utterance] = {}
    spans: dict[str, CandidateSpan] = {}
    for i, sentence in enumerate(sentences):
        tokens = tuple(tok for tok, _ in sentence)
        utt = Utterance(
            id=f"u{i:05d}",
            tokens=tokens,
            dialogue_id=f"d{i // turns_per_dialogue:04d}",
            turn_index=i % turns_per_dialogue,
        )
        utterances[utt.id] = utt
        n_span = 0
        start, label = None, None
        tags = [tag for _, tag in sentence] + ["O"]
        for pos, tag in enumerate(tags):
            if tag.startswith("B-") or (tag.startswith("I-") and start is None):
                if start is not None:
                    sid = f"{utt.id}_s{n_span}"
                    spans[sid] = CandidateSpan(sid, utt.id, start, pos - start, gold_label=label)
                    n_span += 1
                start, label = pos, tag.split("-", 1)[1]
            elif tag.startswith("I-") and label == tag.split("-", 1)[1]:
                continue
            else:
                if start is not None:
                    sid = f"{utt.id}_s{n_span}"
                    spans[sid] = CandidateSpan(sid, utt.id, start, pos - start, gold_label=label)
                    n_span += 1
                start, label = None, None
    gold = sorted({s.gold_label for s in spans.values() if s.gold_label})
    dataset = Dataset(utterances=utterances, spans=spans, catalog=SlotCatalog(labels=gold), weak_vocabulary=[])
    save_dataset(dataset, out)
    click.echo(f"wrote {len(utterances)} utterances / {len(spans)} spans ({len(gold)} slot labels) to {out}")


# -- extract ----------------------------------------------------------------


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--min-freq", default=2, show_default=True)
@click.option("--gazetteer", "gazetteer_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--blocklist", "blocklist_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--no-stopwords", is_flag=True, help="Skip the bundled stopword filter.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False))
@_command_errors
def extract(in_path, out_path, min_freq, gazetteer_path, blocklist_path, no_stopwords, report_path):
    """Extract, filter and weakly label candidate value spans."""
    dataset = load_dataset(in_path)
    out = Path(out_path)
    outputs = [str(out)] + ([report_path] if report_path else [])
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        "extract",
        {"min_freq": min_freq, "gazetteer": gazetteer_path, "blocklist": blocklist_path},
        [Path(in_path)],
        outputs,
    )
    gaz = GazetteerMatcher.from_file(gazetteer_path) if gazetteer_path else None
    extractors = default_extractors(gaz)
    output = extract_candidates(dataset.utterances.values(), extractors)
    candidates = [e.span for e in output.spans]
    config = FilterConfig(
        stopword_list=frozenset() if no_stopwords else load_stopwords(),
        min_frequency=min_freq,
        blocklist=load_wordlist(blocklist_path) if blocklist_path else frozenset(),
    )
    frequencies = span_text_frequencies(candidates, dataset.utterances)
    kept = filter_candidates(candidates, dataset.utterances, config, frequencies)
    kept = assign_weak_labels(kept, dataset.utterances)
    # carry gold labels over for spans that line up exactly with annotated ones
    gold_by_pos = {
        (s.utterance_id, s.start, s.length): s.gold_label
        for s in dataset.spans.values()
        if s.gold_label is not None
    }
    final = [
        CandidateSpan(
            span_id=s.span_id,
            utterance_id=s.utterance_id,
            start=s.start,
            length=s.length,
            weak_label=s.weak_label,
            gold_label=gold_by_pos.get((s.utterance_id, s.start, s.length)),
        )
        for s in kept
    ]
    votes = {e.span.span_id: e.vote_count for e in output.spans}
    per_extractor: dict[str, int] = {}
    for e in output.spans:
        for source in e.sources:
            per_extractor[source] = per_extractor.get(source, 0) + 1
    report = {
        "schema": "1",
        "extractors": output.source,
        "per_extractor_spans": per_extractor,
        "merged_candidates": len(output.spans),
        "multi_source_candidates": sum(1 for v in votes.values() if v > 1),
        "removed_by_filters": len(candidates) - len(kept),
        "kept": len(final),
        "with_gold_alignment": sum(1 for s in final if s.gold_label is not None),
        "extractor_errors": output.errors,
    }
    result = Dataset(
        utterances=dataset.utterances,
        spans={s.span_id: s for s in final},
        catalog=dataset.catalog,
        weak_vocabulary=sorted({s.weak_label for s in final if s.weak_label}),
    )
    save_dataset(result, out)
    if report_path:
        Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(json.dumps(report, indent=2, sort_keys=True))


# -- simulate ---------------------------------------------------------------


def _run_config(kwargs: dict, strategy: str, seed: int, dataset_path: str) -> RunConfig:
    return RunConfig(
        selection=SelectionConfig(
            strategy=strategy,
            batch_fraction=kwargs["batch_fraction"],
            beta=kwargs["beta"],
            t_passes=kwargs["t_passes"],
            seed=seed,
            hybrid_coarse_multiplier=kwargs["coarse_multiplier"],
        ),
        training=TrainingConfig(
            alpha=kwargs["alpha"],
            learning_rate=kwargs["learning_rate"],
            batch_size=kwargs["batch_size"],
            max_initial_epochs=kwargs["initial_epochs"],
            epochs_per_iteration=kwargs["incremental_epochs"],
            seed=seed,
            mode=kwargs["mode"],
        ),
        model=ModelConfig(
            encoder_dim=kwargs["encoder_dim"],
            projection_dim=kwargs["projection_dim"],
            n_buckets=kwargs["buckets"],
            dropout_rate=kwargs["dropout"],
        ),
        stopping=StoppingRule(budget_fraction=kwargs["budget"], patience=kwargs["patience"]),
        warmup_fraction=kwargs["warmup_fraction"],
        split_seed=kwargs["split_seed"],
        warmup_seed=kwargs["warmup_seed"],
        dataset_path=dataset_path,
    )


def _write_curve_csv(path: Path, rows) -> None:
    lines = ["iteration,labeled_fraction,span_f1,known_slots,new_slots_discovered"]
    for r in rows:
        lines.append(
            f"{r.iteration},{_fmt(r.labeled_fraction)},{_fmt(r.span_f1)},{r.known_slots},{r.new_slots_discovered}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--outdir", type=click.Path(file_okay=False), required=True)
@click.option("--strategy", default="bi_criteria", show_default=True, help="Strategy name, comma list, or 'all'.")
@click.option("--seeds", default="0", show_default=True, help="Run seeds: '0..4' or '0,1,2'.")
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--beta", default=0.9, show_default=True)
@click.option("--t-passes", default=5, show_default=True)
@click.option("--batch-fraction", default=0.02, show_default=True)
@click.option("--warmup-fraction", default=0.05, show_default=True)
@click.option("--budget", default=0.21, show_default=True)
@click.option("--patience", default=3, show_default=True, type=int)
@click.option("--no-early-stop", is_flag=True, help="Disable the validation patience rule.")
@click.option("--mode", default="multitask", show_default=True, type=click.Choice(TRAINING_MODES))
@click.option("--learning-rate", default=0.05, show_default=True, help="Tuned for the built-in trainable encoder.")
@click.option("--batch-size", default=128, show_default=True)
@click.option("--initial-epochs", default=30, show_default=True)
@click.option("--incremental-epochs", default=2, show_default=True)
@click.option("--encoder-dim", default=64, show_default=True)
@click.option("--projection-dim", default=128, show_default=True)
@click.option("--buckets", default=2**15, show_default=True)
@click.option("--dropout", default=0.1, show_default=True)
@click.option("--coarse-multiplier", default=2.0, show_default=True)
@click.option("--split-seed", default=0, show_default=True)
@click.option("--warmup-seed", default=0, show_default=True)
@_command_errors
def simulate(data_path, outdir, strategy, seeds, no_early_stop, **kwargs):
    """Emulate the annotation cycle with oracle labels for each strategy/seed."""
    kwargs["patience"] = None if no_early_stop else kwargs["patience"]
    strategies = _parse_strategies(strategy)
    seed_list = _parse_seeds(seeds)
    out = Path(outdir)
    for sub in ("curves", "checkpoints", "events"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    runs = [(s, seed) for s in strategies for seed in seed_list]
    write_manifest(
        out / "manifest.json",
        "simulate",
        {
            "strategies": strategies,
            "seeds": seed_list,
            **{k: v for k, v in kwargs.items()},
        },
        [Path(data_path)],
        [f"curves/{s}_seed{seed}.csv" for s, seed in runs] + ["plotdata.csv", "aggregated.csv"],
    )
    dataset = load_dataset(data_path)
    failures = []
    plot_rows = []
    curves, labels = [], []
    for strat, seed in runs:
        name = f"{strat}_seed{seed}"
        try:
            config = _run_config(kwargs, strat, seed, str(data_path))
            state = al.initialize_state(dataset, config)
            events_path = out / "events" / f"{name}.jsonl"
            with events_path.open("w", encoding="utf-8") as events:
                al.run(
                    state,
                    al.OracleAnnotator(dataset),
                    event_sink=lambda e: events.write(json.dumps(e, sort_keys=True) + "\n"),
                    checkpoint_path=str(out / "checkpoints" / f"{name}.npz"),
                )
            persistence.save_state(state, out / "checkpoints" / f"{name}.npz")
            rows = al.learning_curve(state)
            _write_curve_csv(out / "curves" / f"{name}.csv", rows)
            curves.append([(r.labeled_fraction, r.span_f1) for r in rows])
            labels.append(strat)
            plot_rows.extend((strat, r.labeled_fraction, seed, r.span_f1) for r in rows)
            click.echo(f"{name}: final span-F1 {rows[-1].span_f1:.4f} at {rows[-1].labeled_fraction:.0%} labeled")
        except Exception as exc:  # noqa: BLE001 - one run must not kill the matrix
            logger.debug("run %s failed", name, exc_info=True)
            failures.append((name, str(exc)))
            click.echo(f"{name}: FAILED: {exc}", err=True)
    if plot_rows:
        lines = ["strategy,labeled_fraction,seed,span_f1"]
        lines += [f"{s},{_fmt(f)},{seed},{_fmt(v)}" for s, f, seed, v in plot_rows]
        (out / "plotdata.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        report = curve_report(curves, labels)
        agg = ["strategy,labeled_fraction,mean_f1,std_f1,n_seeds"]
        agg += [
            f"{p.strategy},{_fmt(p.labeled_fraction)},{_fmt(p.mean_f1)},{_fmt(p.std_f1)},{p.n_seeds}"
            for p in report.points
        ]
        (out / "aggregated.csv").write_text("\n".join(agg) + "\n", encoding="utf-8")
    if failures:
        raise click.ClickException(f"{len(failures)} of {len(runs)} runs failed: {failures[:3]}")


# -- evaluate ---------------------------------------------------------------


@main.command()
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--json", "as_json", is_flag=True, help="Emit a machine-readable result.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
@_command_errors
def evaluate(checkpoint_path, data_path, as_json, out_path):
    """Score a model checkpoint against a labeled test file."""
    model, catalog = persistence.load_model(checkpoint_path)
    dataset = load_dataset(data_path)
    span_ids = dataset.gold_span_ids()
    if not span_ids:
        raise click.ClickException(f"{data_path} contains no gold-labeled spans to evaluate")
    result = al.evaluate_split(model, dataset, span_ids, catalog.mask())
    payload = {
        "schema": "1",
        "checkpoint": str(checkpoint_path),
        "data": str(data_path),
        "precision": result.precision,
        "recall": result.recall,
        "span_f1": result.f1,
        "per_slot": {
            slot: {
                "precision": s.precision,
                "recall": s.recall,
                "n_predicted": s.n_predicted,
                "n_gold": s.n_gold,
            }
            for slot, s in sorted(result.per_slot.items())
        },
    }
    if out_path:
        Path(out_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if as_json:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        click.echo(f"{'slot':<24} {'P':>8} {'R':>8} {'#pred':>6} {'#gold':>6}")
        for slot, s in sorted(result.per_slot.items()):
            click.echo(f"{slot:<24} {s.precision:>8.4f} {s.recall:>8.4f} {s.n_predicted:>6} {s.n_gold:>6}")
        click.echo(f"{'overall':<24} {result.precision:>8.4f} {result.recall:>8.4f}  span-F1 {result.f1:.4f}")


# -- report -----------------------------------------------------------------


@main.command()
@click.option("--plotdata", "plotdata_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--focal", default=None, help="Strategy for the mean-of-differences summary.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
@_command_errors
def report(plotdata_path, focal, out_path):
    """Aggregate per-seed curves into a strategy comparison table."""
    rows = Path(plotdata_path).read_text(encoding="utf-8").splitlines()
    if not rows or rows[0] != "strategy,labeled_fraction,seed,span_f1":
        raise click.ClickException(f"{plotdata_path} is not a plot-data CSV")
    curves: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for line in rows[1:]:
        strategy, fraction, seed, f1 = line.split(",")
        curves.setdefault((strategy, seed), []).append((float(fraction), float(f1)))
    histories = [sorted(points) for points in curves.values()]
    labels = [strategy for strategy, _ in curves.keys()]
    rep = curve_report(histories, labels)
    if out_path:
        agg = ["strategy,labeled_fraction,mean_f1,std_f1,n_seeds"]
        agg += [
            f"{p.strategy},{_fmt(p.labeled_fraction)},{_fmt(p.mean_f1)},{_fmt(p.std_f1)},{p.n_seeds}"
            for p in rep.points
        ]
        Path(out_path).write_text("\n".join(agg) + "\n", encoding="utf-8")
    click.echo(f"{'strategy':<14} {'fraction':>9} {'mean F1':>9} {'std':>8} {'seeds':>6}")
    for p in rep.points:
        click.echo(f"{p.strategy:<14} {p.labeled_fraction:>9.4f} {p.mean_f1:>9.4f} {p.std_f1:>8.4f} {p.n_seeds:>6}")
    strategies = rep.strategies()
    focal = focal or ("bi_criteria" if "bi_criteria" in strategies else strategies[0])
    if len(strategies) > 1:
        diff = mean_of_differences(rep, focal)
        click.echo(f"mean of differences ({focal} vs best other): {diff:+.4f}")


# -- score-dump -------------------------------------------------------------


@main.command("score-dump")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", default=None, help="Override the checkpoint's strategy.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@_command_errors
def score_dump(checkpoint_path, data_path, strategy, out_path):
    """Dump per-span selection scores for the current unlabeled pool."""
    dataset = load_dataset(data_path) if data_path else None
    state = persistence.resume(checkpoint_path, dataset=dataset)
    config = state.config.selection
    if strategy:
        config = SelectionConfig(**{**asdict(config), "strategy": strategy})
    out = Path(out_path)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        "score-dump",
        {"strategy": config.strategy, "checkpoint": str(checkpoint_path)},
        [Path(checkpoint_path)],
        [str(out)],
    )
    pool = sorted(state.pools.unlabeled)
    result = select_batch(
        state.model,
        state.dataset,
        state.catalog.mask(),
        sorted(state.pools.labeled),
        pool,
        min(state.batch_size(), len(pool)),
        config,
        round_id=state.iteration + 1,
    )
    lines = ["span_id,strategy,uncertainty,diversity,combined"]
    for s in sorted(result.scores, key=lambda s: s.span_id):
        lines.append(f"{s.span_id},{s.strategy},{_fmt(s.uncertainty)},{_fmt(s.diversity)},{_fmt(s.combined)}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"wrote {len(result.scores)} scores to {out}")


# -- serve ------------------------------------------------------------------


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--resume", "resume_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(dir_okay=False), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8712, show_default=True)
@click.option("--static", "static_dir", type=click.Path(file_okay=False, exists=True))
@click.option("--lease-seconds", default=600.0, show_default=True)
@click.option("--strategy", default="bi_criteria", show_default=True)
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--beta", default=0.9, show_default=True)
@click.option("--t-passes", default=5, show_default=True)
@click.option("--batch-fraction", default=0.02, show_default=True)
@click.option("--warmup-fraction", default=0.05, show_default=True)
@click.option("--budget", default=0.21, show_default=True)
@click.option("--patience", default=None, type=int)
@click.option("--mode", default="multitask", show_default=True, type=click.Choice(TRAINING_MODES))
@click.option("--learning-rate", default=0.05, show_default=True)
@click.option("--batch-size", default=128, show_default=True)
@click.option("--initial-epochs", default=30, show_default=True)
@click.option("--incremental-epochs", default=2, show_default=True)
@click.option("--encoder-dim", default=64, show_default=True)
@click.option("--projection-dim", default=128, show_default=True)
@click.option("--buckets", default=2**15, show_default=True)
@click.option("--dropout", default=0.1, show_default=True)
@click.option("--coarse-multiplier", default=2.0, show_default=True)
@click.option("--split-seed", default=0, show_default=True)
@click.option("--warmup-seed", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_command_errors
def serve(data_path, resume_path, checkpoint_path, host, port, static_dir, lease_seconds, strategy, seed, **kwargs):
    """Run the human-in-the-loop annotation service."""
    import uvicorn

    from .service import AnnotationSession, create_app

    if (data_path is None) == (resume_path is None):
        raise click.UsageError("provide exactly one of --data or --resume")
    if resume_path:
        session = AnnotationSession.from_checkpoint(resume_path, lease_seconds=lease_seconds)
        session.checkpoint_path = checkpoint_path
    else:
        dataset = load_dataset(data_path)
        config = _run_config(kwargs, strategy, seed, str(data_path))
        click.echo("training the warm-up model ...")
        state = al.initialize_state(dataset, config, simulation=False)
        session = AnnotationSession(state, lease_seconds=lease_seconds, checkpoint_path=checkpoint_path)
    session.start()
    if port == 0:
        with socket.socket() as probe_socket:
            probe_socket.bind((host, 0))
            port = probe_socket.getsockname()[1]
    app = create_app(session, static_dir=static_dir)
    click.echo(f"listening on http://{host}:{port}")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        with session.lock:
            session._checkpoint()
        click.echo(f"state checkpointed to {checkpoint_path}")


if __name__ == "__main__":
    sys.exit(main())
