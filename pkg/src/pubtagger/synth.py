"""Synthetic corpora for benchmarks, determinism checks, and fixtures.

Two generators: a free-form one that draws labels from a skewed default
distribution, and an exact one that consumes a prescribed per-label
occurrence budget to the last occurrence, for fixtures that must mirror
published label-count tables.
"""

from __future__ import annotations

import random
from collections.abc import Mapping, Sequence

from .corpus import Citation
from .errors import ConfigError

_WORDS = (
    "analysis assay baseline biopsy carcinoma clinical cohort combined "
    "comparison control correlation crossover diagnosis disease dosage "
    "efficacy enrollment expression factor findings gene genome group "
    "hazard hospital imaging incidence infection inhibitor intervention "
    "lesion marker measure mechanism model mortality mutation outcome "
    "patient pathway placebo population prognosis protein protocol "
    "randomized receptor response risk sample screening serum signal "
    "survival symptom syndrome therapy tissue treatment trial tumor "
    "validation variant"
).split()

# Skewed label mix: one dominant base label, a tail of rarer specific ones.
DEFAULT_SYNTH_LABELS: tuple[tuple[str, int], ...] = (
    ("Journal Article", 50),
    ("Review", 12),
    ("Case Reports", 8),
    ("Comparative Study", 6),
    ("Letter", 5),
    ("Randomized Controlled Trial", 4),
    ("Editorial", 3),
    ("Meta-Analysis", 2),
)

_SET_SIZES = (1, 2, 3)
_SET_SIZE_WEIGHTS = (0.6, 0.3, 0.1)


def _words(rng: random.Random, low: int, high: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(low, high)))


def _citation(rng: random.Random, cid: str, labels: Sequence[str]) -> Citation:
    abstract = "" if rng.random() < 0.1 else _words(rng, 8, 30)
    return Citation(
        id=cid,
        journal_id=f"J{rng.randint(1, 200):04d}",
        title=_words(rng, 3, 7),
        abstract=abstract,
        labels=frozenset(labels),
    )


def synthetic_corpus(
    n: int,
    seed: int = 0,
    labels: Sequence[tuple[str, int]] = DEFAULT_SYNTH_LABELS,
) -> list[Citation]:
    """n random citations with skew-weighted label sets."""
    if n < 0:
        raise ConfigError(f"corpus size must be non-negative, got {n}")
    if not labels:
        raise ConfigError("synthetic corpus needs at least one weighted label")
    rng = random.Random(seed)
    names = [name for name, _ in labels]
    weights = [weight for _, weight in labels]
    corpus = []
    for i in range(n):
        size = min(rng.choices(_SET_SIZES, weights=_SET_SIZE_WEIGHTS)[0], len(names))
        chosen: list[str] = []
        while len(chosen) < size:
            pick = rng.choices(names, weights=weights)[0]
            if pick not in chosen:
                chosen.append(pick)
        corpus.append(_citation(rng, f"S{i:07d}", chosen))
    return corpus


def corpus_from_label_counts(
    counts: Mapping[str, int],
    seed: int = 0,
    id_prefix: str = "F",
) -> list[Citation]:
    """Citations whose label occurrences sum exactly to the given counts.

    Label-set sizes follow the usual 1/2/3 mix, shrinking when too few
    distinct labels remain; within a citation, labels are drawn in
    proportion to their remaining budgets.  Every label appears exactly
    counts[label] times in the result.
    """
    remaining: dict[str, int] = {}
    for label, count in counts.items():
        if isinstance(count, bool) or not isinstance(count, int) or count < 0:
            raise ConfigError(f"count for {label!r} must be a non-negative integer")
        if count > 0:
            remaining[label] = count
    rng = random.Random(seed)
    corpus = []
    serial = 0
    while remaining:
        names = sorted(remaining)
        size = min(rng.choices(_SET_SIZES, weights=_SET_SIZE_WEIGHTS)[0], len(names))
        chosen: list[str] = []
        for _ in range(size):
            pool = [name for name in names if name not in chosen]
            if not pool:
                break
            pick = rng.choices(pool, weights=[remaining[name] for name in pool])[0]
            chosen.append(pick)
            remaining[pick] -= 1
            if remaining[pick] == 0:
                del remaining[pick]
                names = sorted(remaining)
        corpus.append(_citation(rng, f"{id_prefix}{serial:07d}", chosen))
        serial += 1
    return corpus
