"""Span-level evaluation and learning-curve aggregation.

Span-F1 counts exact (utterance, start, length) matches per slot, weights
each slot's precision by its share of predicted spans and its recall by its
share of gold spans, and combines the weighted totals harmonically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence


@dataclass(frozen=True)
class SlotScores:
    precision: float
    recall: float
    n_predicted: int
    n_gold: int


@dataclass(frozen=True)
class SlotEvalResult:
    per_slot: dict[str, SlotScores]
    precision: float
    recall: float
    f1: float


def span_f1(
    gold: Mapping[str, Iterable[Hashable]],
    predicted: Mapping[str, Iterable[Hashable]],
) -> SlotEvalResult:
    """Slot-weighted precision/recall/F1 over exact span matches.

    ``gold`` and ``predicted`` map slot label -> collection of span
    identities (any hashable; conventionally (utterance_id, start, length)).
    A slot with no predicted spans has precision 0 and contributes weight 0
    to the overall precision; symmetrically for recall.
    """
    slots = sorted(set(gold) | set(predicted))
    per_slot: dict[str, SlotScores] = {}
    total_predicted = 0
    total_gold = 0
    weighted_p = 0.0
    weighted_r = 0.0
    for slot in slots:
        gold_set = set(gold.get(slot, ()))
        pred_set = set(predicted.get(slot, ()))
        hits = len(gold_set & pred_set)
        p = hits / len(pred_set) if pred_set else 0.0
        r = hits / len(gold_set) if gold_set else 0.0
        per_slot[slot] = SlotScores(precision=p, recall=r, n_predicted=len(pred_set), n_gold=len(gold_set))
        total_predicted += len(pred_set)
        total_gold += len(gold_set)
        weighted_p += len(pred_set) * p
        weighted_r += len(gold_set) * r
    precision = weighted_p / total_predicted if total_predicted else 0.0
    recall = weighted_r / total_gold if total_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return SlotEvalResult(per_slot=per_slot, precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class CurvePoint:
    strategy: str
    labeled_fraction: float
    mean_f1: float
    std_f1: float
    n_seeds: int


@dataclass(frozen=True)
class CurveReport:
    points: list[CurvePoint]
    fractions: tuple[float, ...]

    def strategies(self) -> list[str]:
        seen: list[str] = []
        for p in self.points:
            if p.strategy not in seen:
                seen.append(p.strategy)
        return seen

    def series(self, strategy: str) -> list[CurvePoint]:
        return [p for p in self.points if p.strategy == strategy]


def _round_fraction(x: float) -> float:
    # shared labeled-fraction axis; absorb float noise from round(f*n)/n
    return round(x, 9)


def curve_report(
    histories: Sequence[Sequence[tuple[float, float]]],
    labels: Sequence[str],
) -> CurveReport:
    """Aggregate learning curves into per-strategy mean/std per labeled fraction.

    ``histories[i]`` is one run's curve as (labeled_fraction, span_f1) pairs
    and ``labels[i]`` names its strategy; runs sharing a label are treated as
    seeds of the same strategy. All curves must share the fraction axis.
    """
    if len(histories) != len(labels):
        raise ValueError("histories and labels must have equal length")
    if not histories:
        raise ValueError("no curves given")
    axes = [tuple(_round_fraction(f) for f, _ in curve) for curve in histories]
    if len(set(axes)) != 1:
        raise ValueError(f"curves do not share a labeled-fraction axis: {sorted(set(axes))[:2]} ...")
    fractions = axes[0]
    by_strategy: dict[str, list[Sequence[tuple[float, float]]]] = {}
    for curve, label in zip(histories, labels):
        by_strategy.setdefault(label, []).append(curve)
    points: list[CurvePoint] = []
    for strategy, curves in by_strategy.items():
        for j, fraction in enumerate(fractions):
            values = [curve[j][1] for curve in curves]
            n = len(values)
            mean = sum(values) / n
            std = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
            points.append(CurvePoint(strategy, fraction, mean, std, n))
    return CurveReport(points=points, fractions=fractions)


def mean_of_differences(report: CurveReport, focal: str) -> float:
    """Mean over the fraction axis of (focal mean F1 - best other mean F1).

    The summary statistic used to compare a focal strategy against the best
    competitor at every sampling step.
    """
    others = [s for s in report.strategies() if s != focal]
    if not others:
        raise ValueError("need at least one non-focal strategy")
    focal_series = {p.labeled_fraction: p.mean_f1 for p in report.series(focal)}
    diffs = []
    for fraction in report.fractions:
        best_other = max(
            p.mean_f1 for p in report.points if p.strategy != focal and p.labeled_fraction == fraction
        )
        diffs.append(focal_series[fraction] - best_other)
    return sum(diffs) / len(diffs)
