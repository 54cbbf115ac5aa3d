"""The configuration sweep: max-tags limit crossed with reliability cutoff.

Scoring happens once; each grid cell recompiles the same score vectors under
its own policy and measures the outcome over the labels that survive that
cell's reliability filter.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

from .assembler import Tokenizer, WhitespaceTokenizer, assemble_input
from .compiler import CompilerPolicy, compile_tags, reliable_labels
from .corpus import Citation, LabelVocabulary
from .errors import ConfigError
from .metrics import confusion_counts, metric_report
from .scoring import Scorer, ensemble_score
from .textnorm import normalize_text

CUMULATIVE_METRICS_DEFINITION = (
    "cumulative accuracy, precision, and recall are micro-averaged over "
    "per-label decisions across the labels surviving the reliability filter"
)

DEFAULT_MAX_TAGS_GRID = tuple(range(1, 7))
DEFAULT_MIN_RECALL_GRID = (0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class SweepRow:
    """One grid cell's outcome."""

    max_tags: int
    min_recall: float
    surviving_classes: int
    cumulative_accuracy: float
    cumulative_precision: float
    cumulative_recall: float
    micro_f1: float

    def to_json(self) -> dict:
        return {
            "max_tags": self.max_tags,
            "min_recall": self.min_recall,
            "surviving_classes": self.surviving_classes,
            "cumulative_accuracy": self.cumulative_accuracy,
            "cumulative_precision": self.cumulative_precision,
            "cumulative_recall": self.cumulative_recall,
            "micro_f1": self.micro_f1,
        }


@dataclass
class SweepTable:
    """All grid rows plus the metric definition they were computed under."""

    rows: list[SweepRow]
    definition: str = CUMULATIVE_METRICS_DEFINITION

    def sorted_by_micro_f1(self) -> list[SweepRow]:
        return sorted(
            self.rows, key=lambda r: (-r.micro_f1, r.max_tags, r.min_recall)
        )

    def to_json(self) -> dict:
        return {
            "definition": self.definition,
            "rows": [row.to_json() for row in self.rows],
        }


def format_sweep_table(table: SweepTable) -> str:
    lines = [
        f"# {table.definition}",
        f"{'max_tags':>8}  {'min_recall':>10}  {'classes':>7}  "
        f"{'cum_acc':>8}  {'cum_prec':>8}  {'cum_rec':>8}  {'micro_f1':>8}",
    ]
    for row in table.rows:
        lines.append(
            f"{row.max_tags:>8d}  {row.min_recall:>10.1f}  {row.surviving_classes:>7d}  "
            f"{row.cumulative_accuracy:>8.4f}  {row.cumulative_precision:>8.4f}  "
            f"{row.cumulative_recall:>8.4f}  {row.micro_f1:>8.4f}"
        )
    return "\n".join(lines) + "\n"


def sweep_table_json_text(table: SweepTable) -> str:
    return json.dumps(table.to_json(), indent=2) + "\n"


def _score_corpus(
    corpus: Sequence[Citation],
    scorers: Sequence[Scorer],
    tokenizer: Tokenizer,
    budget: int,
    symbol_map,
):
    inputs = []
    for citation in corpus:
        normalized = Citation(
            id=citation.id,
            journal_id=citation.journal_id,
            title=normalize_text(citation.title, symbol_map),
            abstract=normalize_text(citation.abstract, symbol_map),
            labels=citation.labels,
        )
        inputs.append(assemble_input(normalized, tokenizer, budget))
    if len(scorers) == 1:
        return scorers[0].score_batch(inputs)
    return ensemble_score(scorers, inputs)


def evaluate_run(
    corpus: Sequence[Citation],
    scorers: Scorer | Sequence[Scorer],
    vocab: LabelVocabulary,
    policy: CompilerPolicy | None = None,
    max_tags_grid: Iterable[int] = DEFAULT_MAX_TAGS_GRID,
    min_recall_grid: Iterable[float] = DEFAULT_MIN_RECALL_GRID,
    tokenizer: Tokenizer | None = None,
    budget: int = 512,
    symbol_map=None,
) -> SweepTable:
    """Evaluate every (max_tags, reliability cutoff) cell on a test corpus.

    Every scorer must carry validation metrics; the reliability filter has
    nothing to act on otherwise.
    """
    members: list[Scorer] = (
        list(scorers) if isinstance(scorers, (list, tuple)) else [scorers]
    )
    if not members:
        raise ConfigError("sweep needs at least one scorer")
    descriptors = [member.descriptor() for member in members]
    for descriptor in descriptors:
        if not descriptor.validation_metrics:
            raise ConfigError(
                f"sweep requires validation metrics on every scorer; "
                f"{descriptor.name!r} has none"
            )
    scored_labels = sorted({l for d in descriptors for l in d.vocabulary})
    base = policy if policy is not None else CompilerPolicy()
    tokenizer = tokenizer if tokenizer is not None else WhitespaceTokenizer()

    citations = list(corpus)
    vectors = _score_corpus(citations, members, tokenizer, budget, symbol_map)
    gold = [(c.id, c.labels) for c in citations]

    rows = []
    for max_tags in max_tags_grid:
        for min_recall in min_recall_grid:
            cell_policy = replace(
                base, max_tags=max_tags, reliability_min_recall=min_recall
            )
            surviving = sorted(
                reliable_labels(scored_labels, min_recall, descriptors)
            )
            tag_lists = [
                compile_tags(vector, cell_policy, vocab, descriptors)
                for vector in vectors
            ]
            report = metric_report(
                confusion_counts(tag_lists, gold, vocab, labels=surviving)
            )
            rows.append(
                SweepRow(
                    max_tags=max_tags,
                    min_recall=min_recall,
                    surviving_classes=len(surviving),
                    cumulative_accuracy=report.cumulative_accuracy,
                    cumulative_precision=report.micro[0],
                    cumulative_recall=report.micro[1],
                    micro_f1=report.micro[2],
                )
            )
    return SweepTable(rows=rows)
