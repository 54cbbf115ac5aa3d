"""Citation records, label vocabularies, corpus statistics and correlations.

Corpora are line-oriented JSON (one citation object per line), which streams
comfortably at millions of records.  The vocabulary carries the label
universe, per-label corpus counts for prevalence ordering, the excluded
labels dropped during normalization, and the designated base label used as a
fallback tag.
"""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO

import numpy as np

from .errors import ConfigError, DataError, ParseError, SchemaError

DEFAULT_BASE_LABEL = "Journal Article"


@dataclass(frozen=True)
class Citation:
    """One bibliographic record.

    ``labels`` holds the gold tag set and may be empty for inference input;
    ``abstract`` may be empty, the other text fields may not.
    """

    id: str
    journal_id: str
    title: str
    abstract: str = ""
    labels: frozenset[str] = frozenset()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "journal_id": self.journal_id,
            "title": self.title,
            "abstract": self.abstract,
            "labels": sorted(self.labels),
        }


def parse_citation_record(line: str, line_number: int | None = None) -> Citation:
    """Parse one JSONL corpus line into a :class:`Citation`.

    A missing abstract becomes the empty string and missing labels the empty
    set.  Raises :class:`ParseError` for malformed JSON (carrying the line
    number when known) and :class:`SchemaError` for missing, mistyped, or
    empty required fields.
    """
    prefix = "" if line_number is None else f"line {line_number}: "
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}", line_number) from exc
    if not isinstance(obj, dict):
        raise SchemaError(f"{prefix}record must be a JSON object, got {type(obj).__name__}")

    def required(name: str) -> str:
        if name not in obj:
            raise SchemaError(f"{prefix}missing required field {name!r}")
        value = obj[name]
        if not isinstance(value, str):
            raise SchemaError(f"{prefix}field {name!r} must be a string, got {type(value).__name__}")
        if not value:
            raise SchemaError(f"{prefix}field {name!r} must be non-empty")
        return value

    cid = required("id")
    journal_id = required("journal_id")
    title = required("title")
    abstract = obj.get("abstract", "")
    if not isinstance(abstract, str):
        raise SchemaError(f"{prefix}field 'abstract' must be a string, got {type(abstract).__name__}")
    raw_labels = obj.get("labels", [])
    if not isinstance(raw_labels, list) or any(not isinstance(l, str) for l in raw_labels):
        raise SchemaError(f"{prefix}field 'labels' must be an array of strings")
    return Citation(id=cid, journal_id=journal_id, title=title, abstract=abstract,
                    labels=frozenset(raw_labels))


def iter_corpus(source: str | Path | IO[str] | Iterable[str]) -> Iterator[Citation]:
    """Stream citations from a path, open text file, or iterable of lines.

    Blank lines are skipped; parse and schema errors surface with 1-based
    line numbers.
    """
    if isinstance(source, (str, Path)):
        try:
            handle: IO[str] | Iterable[str] = open(source, encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read corpus {source}: {exc}") from exc
        own = True
    else:
        handle = source
        own = False
    try:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            yield parse_citation_record(line, number)
    finally:
        if own:
            handle.close()  # type: ignore[union-attr]


def read_corpus(source: str | Path | IO[str] | Iterable[str]) -> list[Citation]:
    return list(iter_corpus(source))


def write_corpus(citations: Iterable[Citation], sink: str | Path | IO[str]) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as handle:
            write_corpus(citations, handle)
        return
    for citation in citations:
        sink.write(json.dumps(citation.to_json(), ensure_ascii=True) + "\n")


class LabelVocabulary:
    """The ordered label universe with prevalence counts.

    Entries sort by descending corpus count, ties broken lexicographically,
    so prevalence rank is deterministic.  ``excluded`` labels are out of
    scope and stripped by :func:`normalize_corpus`; the ``base_label`` must
    itself be an entry and serves as the fallback tag.
    """

    def __init__(
        self,
        entries: Mapping[str, int] | Iterable[tuple[str, int]],
        excluded: Iterable[str] = (),
        base_label: str = DEFAULT_BASE_LABEL,
    ):
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        seen: dict[str, int] = {}
        for label, count in items:
            if not isinstance(label, str) or not label:
                raise ConfigError(f"vocabulary labels must be non-empty strings, got {label!r}")
            if isinstance(count, bool) or not isinstance(count, int) or count < 0:
                raise ConfigError(f"vocabulary count for {label!r} must be a non-negative integer")
            if label in seen:
                raise ConfigError(f"duplicate vocabulary label {label!r}")
            seen[label] = count
        if not seen:
            raise ConfigError("vocabulary must contain at least one entry")
        self.entries: tuple[tuple[str, int], ...] = tuple(
            sorted(seen.items(), key=lambda kv: (-kv[1], kv[0]))
        )
        self.labels: tuple[str, ...] = tuple(label for label, _ in self.entries)
        self.counts: dict[str, int] = dict(self.entries)
        self.excluded: frozenset[str] = frozenset(excluded)
        overlap = self.excluded & set(self.labels)
        if overlap:
            raise ConfigError(f"labels present in both entries and excluded: {sorted(overlap)}")
        if base_label not in self.counts:
            raise ConfigError(f"base label {base_label!r} is not a vocabulary entry")
        self.base_label = base_label
        self._rank = {label: i for i, label in enumerate(self.labels)}

    def __contains__(self, label: str) -> bool:
        return label in self.counts

    def __len__(self) -> int:
        return len(self.labels)

    def rank(self, label: str) -> int:
        """Prevalence rank; 0 is the most prevalent label."""
        return self._rank[label]

    def prevalence_sorted(self, labels: Iterable[str]) -> list[str]:
        return sorted(labels, key=self._rank.__getitem__)

    def to_json(self) -> dict:
        return {
            "entries": [{"label": label, "count": count} for label, count in self.entries],
            "excluded": sorted(self.excluded),
            "base_label": self.base_label,
        }

    @classmethod
    def from_json(cls, obj: object) -> "LabelVocabulary":
        if not isinstance(obj, dict):
            raise ConfigError("vocabulary must be a JSON object")
        raw_entries = obj.get("entries")
        if not isinstance(raw_entries, list):
            raise ConfigError("vocabulary 'entries' must be an array")
        pairs = []
        for entry in raw_entries:
            if not isinstance(entry, dict) or "label" not in entry or "count" not in entry:
                raise ConfigError(f"vocabulary entries must be objects with label and count, got {entry!r}")
            pairs.append((entry["label"], entry["count"]))
        excluded = obj.get("excluded", [])
        if not isinstance(excluded, list):
            raise ConfigError("vocabulary 'excluded' must be an array")
        base_label = obj.get("base_label", DEFAULT_BASE_LABEL)
        return cls(pairs, excluded=excluded, base_label=base_label)

    @classmethod
    def load(cls, path: str | Path) -> "LabelVocabulary":
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read vocabulary {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"vocabulary {path} is not valid JSON: {exc}") from exc
        return cls.from_json(data)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json(), handle, indent=2, sort_keys=False)
            handle.write("\n")


@dataclass
class CorpusStats:
    """Per-label occurrence counts plus the label-set size histogram."""

    total_citations: int
    per_label_count: dict[str, int]
    tags_per_citation_histogram: dict[int, int]

    def to_json(self) -> dict:
        return {
            "total_citations": self.total_citations,
            "per_label_count": dict(sorted(self.per_label_count.items())),
            "tags_per_citation_histogram": {
                str(k): v for k, v in sorted(self.tags_per_citation_histogram.items())
            },
        }


def _check_label_known(citation: Citation, vocab: LabelVocabulary) -> None:
    for label in citation.labels:
        if label not in vocab:
            raise DataError(f"citation {citation.id!r}: unknown label {label!r}")


def compute_corpus_stats(corpus: Sequence[Citation], vocab: LabelVocabulary) -> CorpusStats:
    """Count every label occurrence and histogram the label-set sizes.

    Every citation label must be a vocabulary entry; an unknown label raises
    a data error naming the citation and the label.
    """
    per_label = {label: 0 for label in vocab.labels}
    histogram: Counter[int] = Counter()
    total = 0
    for citation in corpus:
        _check_label_known(citation, vocab)
        total += 1
        histogram[len(citation.labels)] += 1
        for label in citation.labels:
            per_label[label] += 1
    return CorpusStats(
        total_citations=total,
        per_label_count=per_label,
        tags_per_citation_histogram=dict(histogram),
    )


@dataclass
class CorrelationMatrix:
    """Pairwise phi coefficients between label presence indicators."""

    labels: tuple[str, ...]
    values: np.ndarray

    def value(self, a: str, b: str) -> float:
        index = {label: i for i, label in enumerate(self.labels)}
        return float(self.values[index[a], index[b]])

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "values": self.values.tolist()}


def compute_label_correlations(corpus: Sequence[Citation], vocab: LabelVocabulary) -> CorrelationMatrix:
    """Phi coefficient of label-presence indicators for every label pair.

    Labels present on every citation or on none have zero variance; their
    rows and columns are 0 by convention.  All other diagonal entries are
    exactly 1 and the matrix equals its transpose exactly.
    """
    citations = list(corpus)
    if not citations:
        raise DataError("cannot compute correlations over an empty corpus")
    labels = vocab.labels
    index = {label: i for i, label in enumerate(labels)}
    indicators = np.zeros((len(citations), len(labels)), dtype=np.float64)
    for row, citation in enumerate(citations):
        _check_label_known(citation, vocab)
        for label in citation.labels:
            indicators[row, index[label]] = 1.0
    n = float(len(citations))
    counts = indicators.sum(axis=0)
    both = indicators.T @ indicators
    numerator = n * both - np.outer(counts, counts)
    variances = counts * (n - counts)
    denominator = np.sqrt(np.outer(variances, variances))
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(denominator > 0.0, numerator / denominator, 0.0)
    degenerate = variances == 0.0
    phi[degenerate, :] = 0.0
    phi[:, degenerate] = 0.0
    np.fill_diagonal(phi, np.where(degenerate, 0.0, 1.0))
    np.clip(phi, -1.0, 1.0, out=phi)
    return CorrelationMatrix(labels=labels, values=phi)


def normalize_corpus(corpus: Sequence[Citation], vocab: LabelVocabulary) -> list[Citation]:
    """Project every citation's label set onto the active vocabulary.

    Labels outside the vocabulary entries (the excluded set included) are
    dropped, and the base label is removed wherever a more specific label
    remains; citations whose only surviving label is the base label keep it.
    Corpus order is preserved and the operation is idempotent.
    """
    result = []
    for citation in corpus:
        labels = {label for label in citation.labels if label in vocab}
        if vocab.base_label in labels and len(labels) > 1:
            labels.discard(vocab.base_label)
        if labels != set(citation.labels):
            citation = replace(citation, labels=frozenset(labels))
        result.append(citation)
    return result
