"""Multi-label stratified splitting and balanced binary dataset construction.

The splitter is a greedy iterative stratifier: it repeatedly takes the label
with the fewest unassigned bearers and deals those citations to whichever
partition still wants that label most.  Rare labels are placed first, while
every partition can still honor their quotas; abundant labels and label-free
citations then fill the remaining capacity.
"""

from __future__ import annotations

import json
import random
from collections import Counter, defaultdict
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Citation, LabelVocabulary, _check_label_known
from .errors import ConfigError, DataError
from .validation import check_ratios

PARTITION_NAMES = ("train", "eval", "test")

DEFAULT_RATIOS = (0.9, 0.05, 0.05)


@dataclass
class Partition:
    """A three-way split of a corpus, stored as citation-id lists."""

    train: list[str]
    eval: list[str]
    test: list[str]
    seed: int
    ratios: tuple[float, float, float]
    per_label_shares: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    def part(self, name: str) -> list[str]:
        if name not in PARTITION_NAMES:
            raise ConfigError(f"unknown partition name {name!r}")
        return getattr(self, name)

    def to_json(self) -> dict:
        return {
            "train": list(self.train),
            "eval": list(self.eval),
            "test": list(self.test),
            "seed": self.seed,
            "ratios": list(self.ratios),
        }

    @classmethod
    def from_json(cls, obj: object) -> "Partition":
        if not isinstance(obj, dict):
            raise ConfigError("partition must be a JSON object")
        lists = {}
        for name in PARTITION_NAMES:
            value = obj.get(name)
            if not isinstance(value, list) or any(not isinstance(i, str) for i in value):
                raise ConfigError(f"partition {name!r} must be an array of citation ids")
            lists[name] = value
        seed = obj.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("partition 'seed' must be an integer")
        ratios = obj.get("ratios", list(DEFAULT_RATIOS))
        if not isinstance(ratios, list) or len(ratios) != 3:
            raise ConfigError("partition 'ratios' must be an array of three numbers")
        return cls(
            train=lists["train"],
            eval=lists["eval"],
            test=lists["test"],
            seed=seed,
            ratios=check_ratios(tuple(ratios)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Partition":
        try:
            with open(path, encoding="utf-8") as handle:
                return cls.from_json(json.load(handle))
        except OSError as exc:
            raise ConfigError(f"cannot read partition {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"partition {path} is not valid JSON: {exc}") from exc

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json(), handle)
            handle.write("\n")


def label_shares(
    partition: Partition, corpus: Sequence[Citation]
) -> dict[str, tuple[float, float, float]]:
    """Percentage of each label's bearers landing in train/eval/test."""
    membership = {}
    for index, name in enumerate(PARTITION_NAMES):
        for cid in partition.part(name):
            membership[cid] = index
    counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for citation in corpus:
        where = membership.get(citation.id)
        if where is None:
            raise DataError(f"citation {citation.id!r} missing from partition")
        for label in citation.labels:
            counts[label][where] += 1
    return {
        label: tuple(100.0 * c / sum(per_part) for c in per_part)
        for label, per_part in counts.items()
    }


def stratified_split(
    corpus: Sequence[Citation],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> Partition:
    """Iteratively stratified train/eval/test split.

    Rarest-remaining label first; each of its unassigned bearers goes to the
    partition with the largest remaining demand for that label, ties broken
    by largest remaining total capacity, then by seeded RNG.  Label-free
    citations are dealt last by remaining capacity.  Deterministic per seed.
    """
    ratios = check_ratios(ratios)
    citations = list(corpus)
    if not citations:
        raise DataError("cannot split an empty corpus")
    ids = [c.id for c in citations]
    if len(set(ids)) != len(ids):
        duplicate = next(cid for cid, n in Counter(ids).items() if n > 1)
        raise DataError(f"duplicate citation id {duplicate!r} in corpus")

    rng = random.Random(seed)
    total = len(citations)
    capacity = [r * total for r in ratios]
    label_totals: Counter[str] = Counter()
    bearers: dict[str, list[int]] = defaultdict(list)
    for index, citation in enumerate(citations):
        for label in citation.labels:
            label_totals[label] += 1
            bearers[label].append(index)
    demand = {label: [r * n for r in ratios] for label, n in label_totals.items()}

    assignment: list[int | None] = [None] * total

    def place(index: int, part: int) -> None:
        assignment[index] = part
        capacity[part] -= 1
        for label in citations[index].labels:
            demand[label][part] -= 1

    def pick_partition(scores: list[float]) -> int:
        best = max(scores)
        tied = [p for p, s in enumerate(scores) if s == best]
        if len(tied) > 1:
            cap_best = max(capacity[p] for p in tied)
            tied = [p for p in tied if capacity[p] == cap_best]
        return tied[0] if len(tied) == 1 else rng.choice(tied)

    open_labels = set(label_totals)
    while open_labels:
        remaining = {}
        for label in list(open_labels):
            bearers[label] = [i for i in bearers[label] if assignment[i] is None]
            if bearers[label]:
                remaining[label] = len(bearers[label])
            else:
                open_labels.discard(label)
        if not remaining:
            break
        rarest = min(remaining, key=lambda l: (remaining[l], l))
        for index in bearers[rarest]:
            if assignment[index] is None:
                place(index, pick_partition(demand[rarest]))
        open_labels.discard(rarest)

    for index in range(total):
        if assignment[index] is None:
            place(index, pick_partition(capacity))

    parts: tuple[list[str], ...] = ([], [], [])
    for index, part in enumerate(assignment):
        parts[part].append(ids[index])
    partition = Partition(
        train=parts[0], eval=parts[1], test=parts[2], seed=seed, ratios=ratios
    )
    partition.per_label_shares = label_shares(partition, citations)
    return partition


@dataclass(frozen=True)
class ShareDeviation:
    """One out-of-tolerance label share."""

    label: str
    partition: str
    share_pct: float
    target_pct: float

    @property
    def deviation_pct(self) -> float:
        return abs(self.share_pct - self.target_pct)


@dataclass
class StratificationReport:
    """Per-label share deviations beyond tolerance; empty means pass."""

    tolerance_pct: float
    violations: list[ShareDeviation]
    shares: dict[str, tuple[float, float, float]]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "tolerance_pct": self.tolerance_pct,
            "passed": self.passed,
            "violations": [
                {
                    "label": v.label,
                    "partition": v.partition,
                    "share_pct": v.share_pct,
                    "target_pct": v.target_pct,
                    "deviation_pct": v.deviation_pct,
                }
                for v in self.violations
            ],
        }


def verify_stratification(
    partition: Partition,
    corpus: Sequence[Citation],
    vocab: LabelVocabulary,
    tolerance_pct: float,
) -> StratificationReport:
    """Check every label's partition shares against the split ratios.

    The partition id lists must cover the corpus exactly, with no overlap
    and no stray ids.  Labels with no bearers have no defined share and are
    skipped.
    """
    citations = list(corpus)
    corpus_ids = {c.id for c in citations}
    seen: set[str] = set()
    for name in PARTITION_NAMES:
        for cid in partition.part(name):
            if cid in seen:
                raise DataError(f"citation {cid!r} appears in two partitions")
            if cid not in corpus_ids:
                raise DataError(f"partition contains unknown citation {cid!r}")
            seen.add(cid)
    if seen != corpus_ids:
        missing = sorted(corpus_ids - seen)[0]
        raise DataError(f"partition does not cover corpus: {missing!r} unassigned")
    for citation in citations:
        _check_label_known(citation, vocab)

    shares = label_shares(partition, citations)
    targets = tuple(100.0 * r for r in partition.ratios)
    violations = []
    for label in sorted(shares):
        for name, share, target in zip(PARTITION_NAMES, shares[label], targets):
            if abs(share - target) > tolerance_pct:
                violations.append(
                    ShareDeviation(
                        label=label, partition=name, share_pct=share, target_pct=target
                    )
                )
    return StratificationReport(
        tolerance_pct=tolerance_pct, violations=violations, shares=shares
    )


@dataclass
class BinaryDataset:
    """A 50/50 positive/negative id sample for one label."""

    label: str
    positives: list[str]
    negatives: list[str]
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "positives": list(self.positives),
            "negatives": list(self.negatives),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: object) -> "BinaryDataset":
        if not isinstance(obj, dict) or not isinstance(obj.get("label"), str):
            raise ConfigError("binary dataset must be a JSON object with a 'label'")
        for side in ("positives", "negatives"):
            value = obj.get(side)
            if not isinstance(value, list) or any(not isinstance(i, str) for i in value):
                raise ConfigError(f"binary dataset {side!r} must be an array of citation ids")
        seed = obj.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("binary dataset 'seed' must be an integer")
        return cls(
            label=obj["label"],
            positives=obj["positives"],
            negatives=obj["negatives"],
            seed=seed,
        )


def _stratum_quotas(
    strata: dict[tuple[str, ...], list[str]], wanted: int, total: int
) -> dict[tuple[str, ...], int]:
    """Largest-remainder proportional quotas over label-set strata."""
    exact = {key: wanted * len(members) / total for key, members in strata.items()}
    quotas = {key: int(value) for key, value in exact.items()}
    shortfall = wanted - sum(quotas.values())
    by_remainder = sorted(
        strata, key=lambda key: (-(exact[key] - quotas[key]), key)
    )
    for key in by_remainder[:shortfall]:
        quotas[key] += 1
    return quotas


def build_binary_dataset(
    corpus: Sequence[Citation],
    label: str,
    seed: int = 0,
    min_size: int = 0,
) -> BinaryDataset:
    """Assemble an exactly balanced presence/absence dataset for one label.

    Positives are every bearer of the label, oversampled with replacement
    only when fewer than min_size/2 exist.  Negatives are drawn without
    replacement from the non-bearers, proportionally to their label-set
    strata.  When non-bearers are scarcer than positives, the positives are
    subsampled instead so the 50/50 balance always holds exactly.
    """
    rng = random.Random(seed)
    positives = [c.id for c in corpus if label in c.labels]
    non_bearers = [c for c in corpus if label not in c.labels]
    if not positives:
        raise DataError(f"label {label!r}: no positive examples in corpus")
    if not non_bearers:
        raise DataError(f"label {label!r}: no negative examples in corpus")

    if len(positives) < min_size / 2:
        target = (min_size + 1) // 2
        positives = positives + [
            rng.choice(positives) for _ in range(target - len(positives))
        ]
    if len(non_bearers) < len(positives):
        positives = rng.sample(positives, len(non_bearers))

    strata: dict[tuple[str, ...], list[str]] = defaultdict(list)
    for citation in non_bearers:
        strata[tuple(sorted(citation.labels))].append(citation.id)
    quotas = _stratum_quotas(dict(strata), len(positives), len(non_bearers))
    negatives = []
    for key in sorted(strata):
        take = quotas.get(key, 0)
        if take:
            negatives.extend(rng.sample(strata[key], take))
    return BinaryDataset(label=label, positives=positives, negatives=negatives, seed=seed)
