"""Measurement: per-label confusion counts, averaged P/R/F1, AUC curves.

Zero-denominator metrics are 0 rather than NaN so averages stay total.
Macro averages are unweighted means over labels with positive support, with
macro-F1 the mean of per-label F1 values.  Micro averages come from summed
counts.  "Cumulative accuracy" is the micro-averaged per-label-decision
accuracy: correct decisions over all decisions across the evaluated labels.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .corpus import LabelVocabulary
from .errors import AlignmentError, DataError, UndefinedMetricError


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def f1_score(precision: float, recall: float) -> float:
    return _safe_div(2.0 * precision * recall, precision + recall)


@dataclass(frozen=True)
class LabelCounts:
    """tp/fp/fn/tn tallies for a single label."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def support(self) -> int:
        return self.tp + self.fn

    @property
    def precision(self) -> float:
        return _safe_div(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _safe_div(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    def add(self, other: "LabelCounts") -> "LabelCounts":
        return LabelCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


@dataclass
class ConfusionCounts:
    """Per-label confusion tallies over one evaluated citation set."""

    per_label: dict[str, LabelCounts]

    def summed(self) -> LabelCounts:
        total = LabelCounts()
        for counts in self.per_label.values():
            total = total.add(counts)
        return total


def _predicted_pairs(predicted: Sequence[object]) -> list[tuple[str, frozenset[str]]]:
    pairs = []
    for item in predicted:
        if hasattr(item, "citation_id") and hasattr(item, "tags"):
            pairs.append((item.citation_id, frozenset(item.tags)))
        else:
            cid, tags = item  # type: ignore[misc]
            pairs.append((cid, frozenset(tags)))
    return pairs


def _gold_sets(
    gold: Sequence[object], predicted_ids: Sequence[str]
) -> list[frozenset[str]]:
    sets = []
    for position, item in enumerate(gold):
        is_pair = (
            isinstance(item, tuple)
            and len(item) == 2
            and isinstance(item[0], str)
            and isinstance(item[1], (set, frozenset, list, tuple))
        )
        if is_pair:
            cid, labels = item
            if cid != predicted_ids[position]:
                raise AlignmentError(
                    f"position {position}: predicted citation {predicted_ids[position]!r} "
                    f"but gold citation {cid!r}"
                )
            sets.append(frozenset(labels))
        else:
            sets.append(frozenset(item))  # type: ignore[arg-type]
    return sets


def confusion_counts(
    predicted: Sequence[object],
    gold: Sequence[object],
    vocab: LabelVocabulary,
    labels: Sequence[str] | None = None,
) -> ConfusionCounts:
    """Tally per-label tp/fp/fn/tn over aligned prediction/gold pairs.

    ``predicted`` holds tag lists (anything with citation_id and tags, or
    (id, tags) pairs); ``gold`` holds label sets, optionally as (id, labels)
    pairs which are then checked against the predicted ids.  ``labels``
    restricts the evaluated label set (default: the whole vocabulary).
    """
    if len(predicted) != len(gold):
        raise AlignmentError(
            f"{len(predicted)} predictions but {len(gold)} gold label sets"
        )
    pred_pairs = _predicted_pairs(predicted)
    gold_sets = _gold_sets(gold, [cid for cid, _ in pred_pairs])
    evaluated = tuple(labels) if labels is not None else vocab.labels
    for name in evaluated:
        if name not in vocab:
            raise DataError(f"evaluated label {name!r} is not in the vocabulary")
    for (cid, tags), gold_set in zip(pred_pairs, gold_sets):
        for label in tags | gold_set:
            if label not in vocab:
                raise DataError(f"citation {cid!r}: unknown label {label!r}")

    tallies = {name: [0, 0, 0, 0] for name in evaluated}
    for (_, tags), gold_set in zip(pred_pairs, gold_sets):
        for name in evaluated:
            hit = name in tags
            truth = name in gold_set
            if hit and truth:
                tallies[name][0] += 1
            elif hit:
                tallies[name][1] += 1
            elif truth:
                tallies[name][2] += 1
            else:
                tallies[name][3] += 1
    return ConfusionCounts(
        per_label={
            name: LabelCounts(tp=t[0], fp=t[1], fn=t[2], tn=t[3])
            for name, t in tallies.items()
        }
    )


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricReport:
    """Per-label and averaged classification metrics."""

    per_label: dict[str, LabelMetrics]
    macro: tuple[float, float, float]
    micro: tuple[float, float, float]
    cumulative_accuracy: float

    def to_json(self) -> dict:
        return {
            "per_label": {
                name: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for name, m in self.per_label.items()
            },
            "macro": {"precision": self.macro[0], "recall": self.macro[1], "f1": self.macro[2]},
            "micro": {"precision": self.micro[0], "recall": self.micro[1], "f1": self.micro[2]},
            "cumulative_accuracy": self.cumulative_accuracy,
        }


def macro_average(
    rows: Mapping[str, tuple[float, ...]] | Iterable[tuple[float, ...]],
) -> tuple[float, float, float]:
    """Unweighted macro averages from per-label metric rows.

    Rows are (precision, recall) or (precision, recall, f1); a missing F1 is
    computed from the row's own precision and recall before averaging.
    """
    values = list(rows.values()) if isinstance(rows, Mapping) else list(rows)
    if not values:
        raise UndefinedMetricError("macro average of zero labels is undefined")
    precisions, recalls, f1s = [], [], []
    for row in values:
        if len(row) not in (2, 3):
            raise DataError(f"metric row must have 2 or 3 values, got {row!r}")
        precision, recall = float(row[0]), float(row[1])
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(float(row[2]) if len(row) == 3 else f1_score(precision, recall))
    n = len(values)
    return (sum(precisions) / n, sum(recalls) / n, sum(f1s) / n)


def metric_report(counts: ConfusionCounts) -> MetricReport:
    """Per-label P/R/F1 plus macro, micro, and cumulative-accuracy summaries."""
    per_label = {
        name: LabelMetrics(
            precision=c.precision, recall=c.recall, f1=c.f1, support=c.support
        )
        for name, c in counts.per_label.items()
    }
    supported = {
        name: (m.precision, m.recall, m.f1)
        for name, m in per_label.items()
        if m.support > 0
    }
    if supported:
        macro = macro_average(supported)
    else:
        macro = (0.0, 0.0, 0.0)
    total = counts.summed()
    micro_p = total.precision
    micro_r = total.recall
    micro = (micro_p, micro_r, f1_score(micro_p, micro_r))
    cumulative = _safe_div(total.tp + total.tn, total.total)
    return MetricReport(
        per_label=per_label, macro=macro, micro=micro, cumulative_accuracy=cumulative
    )


def format_metric_report(report: MetricReport) -> str:
    """Aligned-column plain-text rendering of a metric report."""
    width = max([len("label")] + [len(name) for name in report.per_label])
    lines = [
        f"{'label':<{width}}  {'precision':>9}  {'recall':>9}  {'f1':>9}  {'support':>8}"
    ]
    for name in sorted(report.per_label):
        m = report.per_label[name]
        lines.append(
            f"{name:<{width}}  {m.precision:>9.4f}  {m.recall:>9.4f}  "
            f"{m.f1:>9.4f}  {m.support:>8d}"
        )
    macro_p, macro_r, macro_f1 = report.macro
    micro_p, micro_r, micro_f1 = report.micro
    lines.append(f"{'macro':<{width}}  {macro_p:>9.4f}  {macro_r:>9.4f}  {macro_f1:>9.4f}")
    lines.append(f"{'micro':<{width}}  {micro_p:>9.4f}  {micro_r:>9.4f}  {micro_f1:>9.4f}")
    lines.append(f"cumulative accuracy: {report.cumulative_accuracy:.4f}")
    return "\n".join(lines) + "\n"


def report_to_json_text(report: MetricReport) -> str:
    return json.dumps(report.to_json(), indent=2) + "\n"


def _validate_binary_inputs(
    scores: Sequence[float], gold: Sequence[bool]
) -> tuple[list[float], list[bool]]:
    if len(scores) != len(gold):
        raise AlignmentError(f"{len(scores)} scores but {len(gold)} gold flags")
    return [float(s) for s in scores], [bool(g) for g in gold]


def auc_roc(scores: Sequence[float], gold: Sequence[bool]) -> float:
    """Probability a random positive outscores a random negative, ties half.

    Computed by the rank formulation with midranks for ties, which equals
    the trapezoidal area under the ROC curve.
    """
    values, flags = _validate_binary_inputs(scores, gold)
    n_pos = sum(flags)
    n_neg = len(flags) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC-ROC needs at least one positive and one negative")
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    position = 0
    while position < len(order):
        tail = position
        while tail + 1 < len(order) and values[order[tail + 1]] == values[order[position]]:
            tail += 1
        midrank = (position + tail) / 2.0 + 1.0
        for k in range(position, tail + 1):
            ranks[order[k]] = midrank
        position = tail + 1
    positive_rank_sum = sum(r for r, flag in zip(ranks, flags) if flag)
    return (positive_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc_pr(scores: Sequence[float], gold: Sequence[bool]) -> float:
    """Step-interpolated average precision with tied scores grouped."""
    values, flags = _validate_binary_inputs(scores, gold)
    n_pos = sum(flags)
    if n_pos == 0:
        raise UndefinedMetricError("AUC-PR needs at least one positive")
    order = sorted(range(len(values)), key=lambda i: -values[i])
    average_precision = 0.0
    tp = fp = 0
    position = 0
    while position < len(order):
        tail = position
        while tail + 1 < len(order) and values[order[tail + 1]] == values[order[position]]:
            tail += 1
        group_tp = sum(1 for k in range(position, tail + 1) if flags[order[k]])
        group_fp = (tail - position + 1) - group_tp
        tp += group_tp
        fp += group_fp
        if group_tp:
            average_precision += (group_tp / n_pos) * (tp / (tp + fp))
        position = tail + 1
    return average_precision
