"""Span-matching evaluation: exact and fuzzy matchers, P/R/F1 reports.

Matching is one-to-one and class-segregated. The fuzzy matcher runs two
passes: exact-boundary pairs are committed first, then remaining
predictions are greedily paired with remaining gold spans by descending
overlap length (ties: smaller gold start, then smaller prediction start).
Pass 1 makes exact matches a subset of fuzzy matches by construction.

Metrics are kept as exact rationals; percentages are rendered with two
decimals, round half up. 0/0 is defined as 0 for both precision and
recall, and macro averages always run over the fixed three classes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .model import Annotation, Corpus, EntityType, Prediction, spans_overlap


class MatchMode(Enum):
    EXACT = "exact"
    FUZZY = "fuzzy"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "ClassCounts") -> "ClassCounts":
        return ClassCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass
class MatchResult:
    """Per-class tp/fp/fn plus the matched pairs for diagnostics."""

    counts: dict[EntityType, ClassCounts] = field(
        default_factory=lambda: {t: ClassCounts() for t in EntityType}
    )
    pairs: list[tuple[Annotation, Prediction]] = field(default_factory=list)

    def pooled(self) -> ClassCounts:
        total = ClassCounts()
        for c in self.counts.values():
            total = total + c
        return total


def _group(spans: Iterable, key=lambda s: (s.doc_id, s.etype)) -> dict:
    groups: dict = {}
    for s in spans:
        groups.setdefault(key(s), []).append(s)
    return groups


def _exact_pass(
    gold: list[Annotation], preds: list[Prediction]
) -> tuple[list[tuple[Annotation, Prediction]], list[Annotation], list[Prediction]]:
    """Commit pairs with equal boundaries, each span used at most once."""
    unused_preds: dict[tuple[int, int], list[Prediction]] = {}
    for p in preds:
        unused_preds.setdefault((p.start_pos, p.end_pos), []).append(p)
    pairs = []
    rest_gold = []
    for g in gold:
        bucket = unused_preds.get((g.start_pos, g.end_pos))
        if bucket:
            pairs.append((g, bucket.pop(0)))
        else:
            rest_gold.append(g)
    rest_preds = [p for bucket in unused_preds.values() for p in bucket]
    return pairs, rest_gold, rest_preds


def match_exact(gold: Sequence[Annotation], preds: Sequence[Prediction]) -> MatchResult:
    """Match predictions to gold requiring identical class and boundaries."""
    _require_disjoint_gold(gold)
    result = MatchResult()
    gold_groups = _group(gold)
    pred_groups = _group(preds)
    for key in sorted(set(gold_groups) | set(pred_groups), key=lambda k: (k[0], k[1].value)):
        g = gold_groups.get(key, [])
        p = pred_groups.get(key, [])
        pairs, rest_gold, rest_preds = _exact_pass(g, p)
        etype = key[1]
        result.counts[etype] = result.counts[etype] + ClassCounts(
            tp=len(pairs), fp=len(rest_preds), fn=len(rest_gold)
        )
        result.pairs.extend(pairs)
    return result


def match_fuzzy(gold: Sequence[Annotation], preds: Sequence[Prediction]) -> MatchResult:
    """Match with partial-overlap credit after committing exact pairs."""
    _require_disjoint_gold(gold)
    result = MatchResult()
    gold_groups = _group(gold)
    pred_groups = _group(preds)
    for key in sorted(set(gold_groups) | set(pred_groups), key=lambda k: (k[0], k[1].value)):
        g = gold_groups.get(key, [])
        p = pred_groups.get(key, [])
        pairs, rest_gold, rest_preds = _exact_pass(g, p)
        # Pass 2: greedy on remaining spans, descending overlap, ties by
        # smaller gold start then smaller prediction start.
        candidates = []
        for gi, ga in enumerate(rest_gold):
            for pi, pr in enumerate(rest_preds):
                if spans_overlap(ga, pr):
                    overlap = min(ga.end_pos, pr.end_pos) - max(ga.start_pos, pr.start_pos)
                    candidates.append((-overlap, ga.start_pos, pr.start_pos, gi, pi))
        candidates.sort()
        used_gold: set[int] = set()
        used_pred: set[int] = set()
        for _neg, _gs, _ps, gi, pi in candidates:
            if gi in used_gold or pi in used_pred:
                continue
            used_gold.add(gi)
            used_pred.add(pi)
            pairs.append((rest_gold[gi], rest_preds[pi]))
        etype = key[1]
        result.counts[etype] = result.counts[etype] + ClassCounts(
            tp=len(pairs),
            fp=len(rest_preds) - len(used_pred),
            fn=len(rest_gold) - len(used_gold),
        )
        result.pairs.extend(pairs)
    return result


def _require_disjoint_gold(gold: Sequence[Annotation]) -> None:
    by_doc: dict[str, list[Annotation]] = {}
    for a in gold:
        by_doc.setdefault(a.doc_id, []).append(a)
    for doc_id, anns in by_doc.items():
        ordered = sorted(anns, key=lambda a: (a.start_pos, a.end_pos))
        for prev, cur in zip(ordered, ordered[1:]):
            if spans_overlap(prev, cur):
                raise ValueError(
                    f"gold annotations overlap in {doc_id}: "
                    f"[{prev.start_pos},{prev.end_pos}) and [{cur.start_pos},{cur.end_pos})"
                )


@dataclass(frozen=True)
class Metrics:
    """Precision/recall/F1 as exact rationals in [0, 1]."""

    precision: Fraction
    recall: Fraction
    f1: Fraction


def prf(tp: int, fp: int, fn: int) -> Metrics:
    """Standard P/R/F1 with the 0/0 -> 0 convention."""
    p = Fraction(tp, tp + fp) if tp + fp > 0 else Fraction(0)
    r = Fraction(tp, tp + fn) if tp + fn > 0 else Fraction(0)
    f1 = 2 * p * r / (p + r) if p + r > 0 else Fraction(0)
    return Metrics(p, r, f1)


def percentage(value: Fraction) -> Decimal:
    """value*100 rounded half-up to two decimals, exactly."""
    scaled = value * 10000  # hundredths of a percent
    q, rem = divmod(scaled.numerator, scaled.denominator)
    if 2 * rem >= scaled.denominator:
        q += 1
    return Decimal(q).scaleb(-2)


@dataclass
class EvaluationReport:
    mode: MatchMode
    per_class: dict[EntityType, Metrics]
    micro: Metrics
    macro: Metrics
    totals: MatchResult


class UnknownDocumentError(ValueError):
    pass


def evaluate(gold_corpus: Corpus, preds: Sequence[Prediction], mode: MatchMode) -> EvaluationReport:
    """Score predictions against a gold corpus in the selected mode.

    Micro metrics come from pooled counts; macro is the unweighted mean
    over PER/LOC/WORK, zero-valued classes included.
    """
    unknown = sorted({p.doc_id for p in preds} - set(gold_corpus.documents))
    if unknown:
        raise UnknownDocumentError(
            "predictions reference unknown documents: " + ", ".join(unknown)
        )
    matcher = match_exact if mode is MatchMode.EXACT else match_fuzzy
    totals = matcher(gold_corpus.annotations, preds)
    per_class = {t: prf(c.tp, c.fp, c.fn) for t, c in totals.counts.items()}
    pooled = totals.pooled()
    micro = prf(pooled.tp, pooled.fp, pooled.fn)
    macro = Metrics(
        precision=sum((m.precision for m in per_class.values()), Fraction(0)) / len(EntityType),
        recall=sum((m.recall for m in per_class.values()), Fraction(0)) / len(EntityType),
        f1=sum((m.f1 for m in per_class.values()), Fraction(0)) / len(EntityType),
    )
    return EvaluationReport(mode=mode, per_class=per_class, micro=micro, macro=macro, totals=totals)


def _metrics_dict(m: Metrics) -> dict[str, float]:
    return {
        "precision": float(percentage(m.precision)),
        "recall": float(percentage(m.recall)),
        "f1": float(percentage(m.f1)),
    }


def report_to_dict(report: EvaluationReport) -> dict:
    """Canonical machine-readable form with stable key order."""
    out: dict = {"mode": report.mode.value}
    out["per_class"] = {t.value: _metrics_dict(report.per_class[t]) for t in EntityType}
    out["micro"] = _metrics_dict(report.micro)
    out["macro"] = _metrics_dict(report.macro)
    pooled = report.totals.pooled()
    counts = {t.value: vars(report.totals.counts[t]) for t in EntityType}
    counts["ALL"] = vars(pooled)
    out["counts"] = counts
    return out


def render_report(report: EvaluationReport, format: str = "json") -> str:
    """Render a report as json (canonical), text-table, or csv."""
    if format == "json":
        return json.dumps(report_to_dict(report), indent=2, ensure_ascii=False)
    if format == "text-table":
        return _render_table(report)
    if format == "csv":
        return _render_csv(report)
    raise ValueError(f"unknown report format {format!r}")


def _cell(value: Fraction) -> str:
    return f"{percentage(value):.2f}"


def _render_table(report: EvaluationReport) -> str:
    cols = [t.value for t in EntityType] + ["Avg."]
    rows = []
    for name, attr in (("Precision", "precision"), ("Recall", "recall"), ("F1", "f1")):
        cells = [_cell(getattr(report.per_class[t], attr)) for t in EntityType]
        cells.append(_cell(getattr(report.macro, attr)))
        rows.append((name, cells))
    width = 9
    lines = [f"Mode: {report.mode.value}"]
    lines.append(" " * 10 + "".join(c.rjust(width) for c in cols))
    for name, cells in rows:
        lines.append(name.ljust(10) + "".join(c.rjust(width) for c in cells))
    lines.append(
        "Micro     "
        + f"P={_cell(report.micro.precision)} R={_cell(report.micro.recall)} F1={_cell(report.micro.f1)}"
    )
    return "\n".join(lines) + "\n"


def _render_csv(report: EvaluationReport) -> str:
    lines = ["class,precision,recall,f1"]
    for t in EntityType:
        m = report.per_class[t]
        lines.append(f"{t.value},{_cell(m.precision)},{_cell(m.recall)},{_cell(m.f1)}")
    lines.append(f"micro,{_cell(report.micro.precision)},{_cell(report.micro.recall)},{_cell(report.micro.f1)}")
    lines.append(f"macro,{_cell(report.macro.precision)},{_cell(report.macro.recall)},{_cell(report.macro.f1)}")
    return "\n".join(lines) + "\n"
