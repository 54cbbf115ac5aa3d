"""Turning score vectors into final tag lists.

The compilation pipeline runs in a fixed order: reliability filter,
threshold filter, co-occurrence rules, prevalence-ordered truncation, and
the base-label fallback.  Each emitted tag carries provenance: its score,
the threshold it cleared, and any rule actions that touched it.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import LabelVocabulary
from .errors import AlignmentError, ConfigError, DataError
from .metrics import f1_score
from .scoring import ScoreVector, ScorerDescriptor
from .validation import check_choice, check_positive_int, check_unit_interval

logger = logging.getLogger(__name__)

RULE_EXCLUDES = "excludes"
RULE_IMPLIES = "implies"

THRESHOLD_FIXED = "fixed"
THRESHOLD_PER_LABEL = "per_label"

# A label with no tuned threshold falls back to the probability midpoint.
DEFAULT_LABEL_THRESHOLD = 0.5


@dataclass(frozen=True)
class Rule:
    """One co-occurrence or priority rule.

    ``excludes`` drops one of two co-predicted labels (``keep`` decides
    which survives); ``implies`` adds label b whenever label a is emitted.
    """

    kind: str
    a: str
    b: str
    keep: str | None = None

    def __post_init__(self):
        check_choice("rule kind", self.kind, (RULE_EXCLUDES, RULE_IMPLIES))
        if self.a == self.b:
            raise ConfigError(f"rule labels must differ, got {self.a!r} twice")
        if self.kind == RULE_EXCLUDES:
            if self.keep is None:
                object.__setattr__(self, "keep", "higher_score")
            check_choice("rule keep", self.keep, ("a", "b", "higher_score"))
        elif self.keep is not None:
            raise ConfigError("'keep' applies only to excludes rules")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "a": self.a, "b": self.b}
        if self.kind == RULE_EXCLUDES:
            out["keep"] = self.keep
        return out

    @classmethod
    def from_json(cls, obj: object) -> "Rule":
        if not isinstance(obj, dict):
            raise ConfigError(f"rule must be a JSON object, got {obj!r}")
        for key in ("kind", "a", "b"):
            if not isinstance(obj.get(key), str):
                raise ConfigError(f"rule field {key!r} must be a string")
        keep = obj.get("keep")
        if keep is not None and not isinstance(keep, str):
            raise ConfigError("rule field 'keep' must be a string")
        return cls(kind=obj["kind"], a=obj["a"], b=obj["b"], keep=keep)


@dataclass
class CompilerPolicy:
    """Everything governing how scores become tags."""

    threshold_mode: str = THRESHOLD_FIXED
    thresholds: float | dict[str, float] = 0.5
    reliability_min_recall: float | None = None
    max_tags: int = 6
    rules: tuple[Rule, ...] = ()
    base_label_fallback: bool = True

    def __post_init__(self):
        check_choice(
            "threshold_mode", self.threshold_mode, (THRESHOLD_FIXED, THRESHOLD_PER_LABEL)
        )
        if self.threshold_mode == THRESHOLD_FIXED:
            if isinstance(self.thresholds, Mapping):
                raise ConfigError("fixed threshold mode takes a single number")
            self.thresholds = check_unit_interval("threshold", self.thresholds)
        else:
            if not isinstance(self.thresholds, Mapping):
                raise ConfigError("per-label threshold mode takes a label→threshold map")
            self.thresholds = {
                label: check_unit_interval(f"threshold for {label!r}", value)
                for label, value in self.thresholds.items()
            }
        if self.reliability_min_recall is not None:
            self.reliability_min_recall = check_unit_interval(
                "reliability_min_recall", self.reliability_min_recall
            )
        check_positive_int("max_tags", self.max_tags)
        self.rules = tuple(self.rules)
        self.base_label_fallback = bool(self.base_label_fallback)

    def threshold_for(self, label: str) -> float:
        if self.threshold_mode == THRESHOLD_FIXED:
            return float(self.thresholds)  # type: ignore[arg-type]
        return float(self.thresholds.get(label, DEFAULT_LABEL_THRESHOLD))  # type: ignore[union-attr]

    def validate_labels(self, vocab: LabelVocabulary) -> None:
        """Reject rules (and per-label thresholds) naming unknown labels."""
        for rule in self.rules:
            for name in (rule.a, rule.b):
                if name not in vocab:
                    raise ConfigError(
                        f"policy rule references unknown label {name!r}"
                    )
        if self.threshold_mode == THRESHOLD_PER_LABEL:
            for name in self.thresholds:  # type: ignore[union-attr]
                if name not in vocab:
                    raise ConfigError(
                        f"policy threshold references unknown label {name!r}"
                    )

    def to_json(self) -> dict:
        return {
            "threshold_mode": self.threshold_mode,
            "thresholds": self.thresholds,
            "reliability_min_recall": self.reliability_min_recall,
            "max_tags": self.max_tags,
            "rules": [rule.to_json() for rule in self.rules],
            "base_label_fallback": self.base_label_fallback,
        }

    @classmethod
    def from_json(cls, obj: object) -> "CompilerPolicy":
        if not isinstance(obj, dict):
            raise ConfigError("policy must be a JSON object")
        unknown = set(obj) - {
            "threshold_mode",
            "thresholds",
            "reliability_min_recall",
            "max_tags",
            "rules",
            "base_label_fallback",
        }
        if unknown:
            raise ConfigError(f"policy has unknown fields: {sorted(unknown)}")
        rules = obj.get("rules", [])
        if not isinstance(rules, list):
            raise ConfigError("policy 'rules' must be an array")
        return cls(
            threshold_mode=obj.get("threshold_mode", THRESHOLD_FIXED),
            thresholds=obj.get("thresholds", 0.5),
            reliability_min_recall=obj.get("reliability_min_recall"),
            max_tags=obj.get("max_tags", 6),
            rules=tuple(Rule.from_json(r) for r in rules),
            base_label_fallback=obj.get("base_label_fallback", True),
        )

    @classmethod
    def load(cls, path: str | Path) -> "CompilerPolicy":
        try:
            with open(path, encoding="utf-8") as handle:
                return cls.from_json(json.load(handle))
        except OSError as exc:
            raise ConfigError(f"cannot read policy {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"policy {path} is not valid JSON: {exc}") from exc

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json(), handle, indent=2)
            handle.write("\n")


@dataclass(frozen=True)
class TagProvenance:
    """How one emitted tag came to be."""

    score: float | None
    threshold: float | None
    rules: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"score": self.score, "threshold": self.threshold, "rules": list(self.rules)}


@dataclass
class TagList:
    """The final, ordered tags for one citation."""

    citation_id: str
    tags: list[str]
    provenance: dict[str, TagProvenance] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "id": self.citation_id,
            "tags": list(self.tags),
            "provenance": {tag: p.to_json() for tag, p in self.provenance.items()},
        }


def reliable_labels(
    labels: Iterable[str],
    min_recall: float,
    descriptors: Sequence[ScorerDescriptor],
) -> set[str]:
    """Labels whose known validation recall clears the bar.

    A label with no recorded validation recall is kept: the filter only
    removes scorers measured to miss too much.
    """
    known: dict[str, float] = {}
    for descriptor in descriptors:
        if descriptor.validation_metrics:
            for label, metrics in descriptor.validation_metrics.items():
                known[label] = float(metrics["recall"])
    return {
        label
        for label in labels
        if label not in known or known[label] >= min_recall
    }


def compile_tags(
    scores: ScoreVector,
    policy: CompilerPolicy,
    vocab: LabelVocabulary,
    descriptors: Sequence[ScorerDescriptor] | None = None,
) -> TagList:
    """Run the full compilation pipeline on one score vector."""
    for label in scores.scores:
        if label not in vocab:
            raise DataError(
                f"citation {scores.citation_id!r}: scored label {label!r} "
                f"is not in the vocabulary"
            )

    candidates = dict(scores.scores)
    if policy.reliability_min_recall is not None and descriptors:
        kept = reliable_labels(
            candidates, policy.reliability_min_recall, descriptors
        )
        candidates = {label: s for label, s in candidates.items() if label in kept}

    survivors: dict[str, TagProvenance] = {}
    for label, score in candidates.items():
        threshold = policy.threshold_for(label)
        if score >= threshold:
            survivors[label] = TagProvenance(score=float(score), threshold=threshold)

    def annotate(label: str, note: str) -> None:
        previous = survivors[label]
        survivors[label] = replace(previous, rules=previous.rules + (note,))

    for rule in policy.rules:
        if rule.kind == RULE_EXCLUDES:
            if rule.a in survivors and rule.b in survivors:
                if rule.keep == "a":
                    dropped, kept = rule.b, rule.a
                elif rule.keep == "b":
                    dropped, kept = rule.a, rule.b
                else:
                    score_a = scores.scores.get(rule.a)
                    score_b = scores.scores.get(rule.b)
                    a_wins = (score_b is None) or (
                        score_a is not None and score_a >= score_b
                    )
                    dropped, kept = (rule.b, rule.a) if a_wins else (rule.a, rule.b)
                del survivors[dropped]
                annotate(kept, f"excludes({rule.a},{rule.b}): removed {dropped}")
        else:
            if rule.a in survivors and rule.b not in survivors:
                survivors[rule.b] = TagProvenance(
                    score=scores.scores.get(rule.b),
                    threshold=None,
                    rules=(f"implied by {rule.a}",),
                )

    ordered = vocab.prevalence_sorted(survivors)[: policy.max_tags]
    if not ordered and policy.base_label_fallback:
        ordered = [vocab.base_label]
        survivors[vocab.base_label] = TagProvenance(
            score=scores.scores.get(vocab.base_label),
            threshold=None,
            rules=("fallback",),
        )
    return TagList(
        citation_id=scores.citation_id,
        tags=ordered,
        provenance={tag: survivors[tag] for tag in ordered},
    )


def _parse_objective(objective: str) -> tuple[str, float | None]:
    if objective == "max_f1":
        return "max_f1", None
    prefix = "recall_at_least:"
    if objective.startswith(prefix):
        value = check_unit_interval("recall target", objective[len(prefix):])
        return "recall_at_least", value
    raise ConfigError(
        f"objective must be 'max_f1' or 'recall_at_least:<r>', got {objective!r}"
    )


def tune_thresholds(
    scores: Sequence[ScoreVector],
    gold: Mapping[str, Iterable[str]],
    objective: str = "max_f1",
) -> dict[str, float]:
    """Pick one threshold per scored label on an evaluation split.

    Candidates are every distinct observed score plus 0 and 1.  ``max_f1``
    takes the candidate with the best F1; ``recall_at_least:<r>`` takes the
    lowest candidate whose recall still reaches r.  Ties always resolve to
    the lowest threshold.  Labels without a positive gold example are
    omitted with a warning.
    """
    kind, target = _parse_objective(objective)
    gold_sets: dict[str, frozenset[str]] = {}
    for vector in scores:
        if vector.citation_id not in gold:
            raise AlignmentError(
                f"no gold labels for scored citation {vector.citation_id!r}"
            )
        gold_sets[vector.citation_id] = frozenset(gold[vector.citation_id])

    labels = sorted({label for vector in scores for label in vector.scores})
    thresholds: dict[str, float] = {}
    for label in labels:
        pairs = [
            (vector.scores[label], label in gold_sets[vector.citation_id])
            for vector in scores
            if label in vector.scores
        ]
        positives = sum(1 for _, positive in pairs if positive)
        if positives == 0:
            logger.warning(
                "label %r has no positive gold example; threshold omitted", label
            )
            continue
        candidates = sorted({score for score, _ in pairs} | {0.0, 1.0})
        best: tuple[float, float] | None = None
        for candidate in candidates:
            tp = sum(1 for score, positive in pairs if positive and score >= candidate)
            fp = sum(1 for score, positive in pairs if not positive and score >= candidate)
            recall = tp / positives
            if kind == "max_f1":
                precision = tp / (tp + fp) if tp + fp else 0.0
                f1 = f1_score(precision, recall)
                if best is None or f1 > best[0]:
                    best = (f1, candidate)
            else:
                if recall >= target:
                    best = (recall, candidate)
                    break
        if best is not None:
            thresholds[label] = best[1]
        else:
            logger.warning(
                "label %r cannot reach recall %s at any threshold; omitted",
                label,
                target,
            )
    return thresholds


class TagCompiler(BaseEstimator, TransformerMixin):
    """Estimator wrapper compiling batches of score vectors to tag lists."""

    def __init__(
        self,
        policy: CompilerPolicy | None = None,
        vocab: LabelVocabulary | None = None,
        descriptors: Sequence[ScorerDescriptor] | None = None,
    ):
        self.policy = policy
        self.vocab = vocab
        self.descriptors = descriptors

    def _resolved(self) -> tuple[CompilerPolicy, LabelVocabulary]:
        if self.vocab is None:
            raise ConfigError("TagCompiler needs a vocabulary")
        policy = self.policy if self.policy is not None else CompilerPolicy()
        return policy, self.vocab

    def fit(self, X: Sequence[ScoreVector], y: object = None) -> "TagCompiler":
        policy, vocab = self._resolved()
        policy.validate_labels(vocab)
        return self

    def transform(self, X: Sequence[ScoreVector]) -> list[TagList]:
        policy, vocab = self._resolved()
        return [compile_tags(v, policy, vocab, self.descriptors) for v in X]
