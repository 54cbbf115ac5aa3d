"""End-to-end orchestration: configuration, batch tagging, benchmarking.

The tagging pipeline is normalize → assemble → score → compile, processed
in fixed-size citation chunks.  Chunk boundaries and per-record processing
never depend on the worker count, and results are merged in input order, so
output is byte-identical whether the pool has one worker or many.  A record
that fails any stage is emitted as an ``{"id", "error"}`` marker and the
run continues.
"""

from __future__ import annotations

import itertools
import json
import logging
import time
from collections import deque
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Callable

from .assembler import WhitespaceTokenizer, assemble_input
from .compiler import CompilerPolicy, compile_tags
from .corpus import Citation, LabelVocabulary, iter_corpus
from .errors import ConfigError, DataError, PubTaggerError, RecordScoringError
from .remote import RemoteScorer, sidecar_address
from .scoring import (
    Scorer,
    ScoreVector,
    ensemble_score,
    load_scorer,
)
from .synth import synthetic_corpus
from .textnorm import load_symbol_map, normalize_text
from .validation import check_choice, check_positive_int

logger = logging.getLogger(__name__)

ARCH_MONOLITHIC = "monolithic"
ARCH_ENSEMBLE = "ensemble"

# Fixed so chunk boundaries (and thus output bytes) never depend on workers.
CHUNK_SIZE = 256

_CONFIG_FIELDS = (
    "corpus",
    "vocabulary",
    "policy",
    "scorers",
    "sidecar",
    "architecture",
    "budget",
    "seed",
    "workers",
    "symbol_map",
)


@dataclass
class PipelineConfig:
    """Paths and knobs shared by the tagging and benchmark entry points."""

    corpus: str | None = None
    vocabulary: str | None = None
    policy: str | None = None
    scorers: list[str] = field(default_factory=list)
    sidecar: str | None = None
    architecture: str = ARCH_MONOLITHIC
    budget: int = 512
    seed: int = 0
    workers: int = 1
    symbol_map: str | None = None

    def validate(self) -> "PipelineConfig":
        check_choice("architecture", self.architecture, (ARCH_MONOLITHIC, ARCH_ENSEMBLE))
        check_positive_int("workers", self.workers)
        check_positive_int("budget", self.budget)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if not isinstance(self.scorers, list) or any(
            not isinstance(p, str) for p in self.scorers
        ):
            raise ConfigError("scorers must be a list of file paths")
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as handle:
                obj = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        unknown = set(obj) - set(_CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"config has unknown fields: {sorted(unknown)}")
        return cls(**obj).validate()

    def merged(self, **overrides: object) -> "PipelineConfig":
        """A copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes).validate()


def load_scorer_stack(config: PipelineConfig) -> list[Scorer]:
    """Load the scorer(s) the configured architecture calls for."""
    address = sidecar_address(config.sidecar)
    if config.architecture == ARCH_MONOLITHIC:
        if address and config.scorers:
            raise ConfigError("give either a scorer file or a sidecar address, not both")
        if address:
            return [RemoteScorer(address)]
        if len(config.scorers) != 1:
            raise ConfigError(
                f"monolithic architecture takes exactly one scorer file, "
                f"got {len(config.scorers)}"
            )
        return [load_scorer(config.scorers[0])]
    if address:
        raise ConfigError("ensemble architecture loads scorer files, not a sidecar")
    if not config.scorers:
        raise ConfigError("ensemble architecture needs at least one scorer file")
    members = [load_scorer(path) for path in config.scorers]
    ensemble_score(members, [])
    return members


def _chunked(iterable: Iterable, size: int) -> Iterator[list]:
    iterator = iter(iterable)
    while True:
        chunk = list(itertools.islice(iterator, size))
        if not chunk:
            return
        yield chunk


def _ordered_parallel_map(
    func: Callable, items: Iterable, workers: int
) -> Iterator:
    """executor.map with bounded in-flight submissions, preserving order."""
    with ThreadPoolExecutor(max_workers=workers) as executor:
        iterator = iter(items)
        pending = deque(
            executor.submit(func, item)
            for item in itertools.islice(iterator, workers * 2)
        )
        while pending:
            result = pending.popleft().result()
            for item in itertools.islice(iterator, 1):
                pending.append(executor.submit(func, item))
            yield result


def _score_vectors(scorers: Sequence[Scorer], inputs: Sequence[object]) -> list[ScoreVector]:
    if len(scorers) == 1:
        return scorers[0].score_batch(inputs)
    return ensemble_score(scorers, inputs)


def _score_with_isolation(
    scorers: Sequence[Scorer], inputs: Sequence[object]
) -> list[ScoreVector | dict]:
    """Score a chunk; on a per-record backend rejection, isolate the record."""
    try:
        return list(_score_vectors(scorers, inputs))
    except RecordScoringError:
        out: list[ScoreVector | dict] = []
        for item in inputs:
            try:
                out.extend(_score_vectors(scorers, [item]))
            except RecordScoringError as exc:
                logger.warning("%s", exc)
                out.append({"id": item.citation_id, "error": str(exc)})
        return out


def run_tagging(
    config: PipelineConfig,
    source: object | None = None,
    input_sink: IO[str] | None = None,
    scorers: Sequence[Scorer] | None = None,
    vocab: LabelVocabulary | None = None,
    policy: CompilerPolicy | None = None,
) -> Iterator[dict]:
    """Tag a corpus, yielding one JSON-ready row per input citation.

    Rows are tag lists ``{"id", "tags", "provenance"}`` or, for records that
    failed a stage, ``{"id", "error"}`` markers.  ``input_sink`` optionally
    receives the assembled model inputs as JSONL.  ``scorers``, ``vocab``,
    and ``policy`` override the config-named files when supplied directly.
    Setup errors (bad config, unloadable scorers, unreachable sidecar) raise
    before any row is produced.
    """
    config.validate()
    if vocab is None:
        if config.vocabulary is None:
            raise ConfigError("tagging needs a vocabulary file")
        vocab = LabelVocabulary.load(config.vocabulary)
    if policy is None:
        policy = CompilerPolicy.load(config.policy) if config.policy else CompilerPolicy()
    policy.validate_labels(vocab)
    symbol_map = load_symbol_map(config.symbol_map) if config.symbol_map else None
    if scorers is None:
        scorers = load_scorer_stack(config)
    elif len(scorers) > 1:
        ensemble_score(scorers, [])
    descriptors = [scorer.descriptor() for scorer in scorers]
    tokenizer = WhitespaceTokenizer()
    if source is None:
        if config.corpus is None:
            raise ConfigError("tagging needs an input corpus")
        source = config.corpus
    citations = iter_corpus(source)

    def process(chunk: list[Citation]) -> tuple[list[dict], list[dict]]:
        rows: list[dict | None] = [None] * len(chunk)
        assembled: list[dict] = []
        inputs = []
        positions = []
        for pos, citation in enumerate(chunk):
            try:
                clean = replace(
                    citation,
                    title=normalize_text(citation.title, symbol_map),
                    abstract=normalize_text(citation.abstract, symbol_map),
                )
                model_input = assemble_input(clean, tokenizer, config.budget)
            except PubTaggerError as exc:
                logger.warning("citation %r: %s", citation.id, exc)
                rows[pos] = {"id": citation.id, "error": str(exc)}
                continue
            inputs.append(model_input)
            positions.append(pos)
            assembled.append(model_input.to_json())
        for item, pos in zip(_score_with_isolation(scorers, inputs), positions):
            if isinstance(item, dict):
                rows[pos] = item
                continue
            try:
                rows[pos] = compile_tags(item, policy, vocab, descriptors).to_json()
            except PubTaggerError as exc:
                logger.warning("citation %r: %s", item.citation_id, exc)
                rows[pos] = {"id": item.citation_id, "error": str(exc)}
        return rows, assembled  # type: ignore[return-value]

    def generate() -> Iterator[dict]:
        chunks = _chunked(citations, CHUNK_SIZE)
        if config.workers == 1:
            results: Iterable = map(process, chunks)
        else:
            results = _ordered_parallel_map(process, chunks, config.workers)
        for rows, assembled in results:
            if input_sink is not None:
                for obj in assembled:
                    input_sink.write(json.dumps(obj, ensure_ascii=True) + "\n")
            yield from rows

    return generate()


@dataclass
class BenchReport:
    """Throughput measurements for one end-to-end tagging pass."""

    citations: int
    wall_seconds: float
    citations_per_second: float
    stage_seconds: dict[str, float]
    per_scorer_seconds: dict[str, float] | None = None

    def to_json(self) -> dict:
        out = {
            "citations": self.citations,
            "wall_seconds": self.wall_seconds,
            "citations_per_second": self.citations_per_second,
            "stage_seconds": dict(self.stage_seconds),
        }
        if self.per_scorer_seconds is not None:
            out["per_scorer_seconds"] = dict(self.per_scorer_seconds)
        return out


def format_bench_report(report: BenchReport) -> str:
    lines = [
        f"citations processed: {report.citations}",
        f"wall seconds:        {report.wall_seconds:.3f}",
        f"citations/second:    {report.citations_per_second:.1f}",
        "stage seconds:",
    ]
    for stage, seconds in report.stage_seconds.items():
        lines.append(f"  {stage:<10} {seconds:.3f}")
    if report.per_scorer_seconds:
        lines.append("per-scorer seconds:")
        for name, seconds in report.per_scorer_seconds.items():
            lines.append(f"  {name:<24} {seconds:.3f}")
    return "\n".join(lines) + "\n"


def _bench_vocab(
    citations: Sequence[Citation], scorers: Sequence[Scorer]
) -> LabelVocabulary:
    """A vocabulary covering corpus and scorer labels, by corpus prevalence."""
    counts: dict[str, int] = {}
    for citation in citations:
        for label in citation.labels:
            counts[label] = counts.get(label, 0) + 1
    for scorer in scorers:
        for label in scorer.descriptor().vocabulary:
            counts.setdefault(label, 0)
    base = "Journal Article"
    if base not in counts:
        base = max(counts, key=lambda l: (counts[l], l))
    return LabelVocabulary(counts, base_label=base)


def bench(
    config: PipelineConfig,
    n_citations: int,
    citations: Sequence[Citation] | None = None,
    scorers: Sequence[Scorer] | None = None,
) -> BenchReport:
    """Time one single-threaded tagging pass over n citations.

    The corpus is read from config when available, otherwise synthesized.
    Per-stage times are accumulated inside the loop; for ensembles the
    scoring stage is additionally broken down per member.
    """
    if not isinstance(n_citations, int) or isinstance(n_citations, bool) or n_citations < 1:
        raise ConfigError(f"empty benchmark: need a positive citation count, got {n_citations!r}")
    config.validate()
    if citations is None:
        if config.corpus:
            citations = list(
                itertools.islice(iter_corpus(config.corpus), n_citations)
            )
            if len(citations) < n_citations:
                raise DataError(
                    f"benchmark corpus holds {len(citations)} citations, "
                    f"need {n_citations}"
                )
        else:
            citations = synthetic_corpus(n_citations, seed=config.seed)
    else:
        citations = list(citations)[:n_citations]
        if len(citations) < n_citations:
            raise DataError(
                f"benchmark corpus holds {len(citations)} citations, "
                f"need {n_citations}"
            )
    if scorers is None:
        scorers = load_scorer_stack(config)
    else:
        scorers = list(scorers)
        if len(scorers) > 1:
            ensemble_score(scorers, [])
    if config.vocabulary:
        vocab = LabelVocabulary.load(config.vocabulary)
    else:
        vocab = _bench_vocab(citations, scorers)
    policy = CompilerPolicy.load(config.policy) if config.policy else CompilerPolicy()
    policy.validate_labels(vocab)
    symbol_map = load_symbol_map(config.symbol_map) if config.symbol_map else None
    descriptors = [scorer.descriptor() for scorer in scorers]
    tokenizer = WhitespaceTokenizer()

    stage = {"normalize": 0.0, "assemble": 0.0, "score": 0.0, "compile": 0.0}
    per_scorer: dict[str, float] | None = None
    if len(scorers) > 1:
        per_scorer = {
            f"{i}:{d.name}": 0.0 for i, d in enumerate(descriptors)
        }
    processed = 0
    clock = time.perf_counter
    started = clock()
    for chunk in _chunked(citations, CHUNK_SIZE):
        mark = clock()
        normalized = [
            replace(
                c,
                title=normalize_text(c.title, symbol_map),
                abstract=normalize_text(c.abstract, symbol_map),
            )
            for c in chunk
        ]
        stage["normalize"] += clock() - mark

        mark = clock()
        inputs = [assemble_input(c, tokenizer, config.budget) for c in normalized]
        stage["assemble"] += clock() - mark

        if len(scorers) == 1:
            mark = clock()
            vectors = scorers[0].score_batch(inputs)
            stage["score"] += clock() - mark
        else:
            merged: list[dict[str, float]] = [{} for _ in inputs]
            for index, scorer in enumerate(scorers):
                mark = clock()
                member_vectors = scorer.score_batch(inputs)
                elapsed = clock() - mark
                stage["score"] += elapsed
                per_scorer[f"{index}:{descriptors[index].name}"] += elapsed
                for row, vector in enumerate(member_vectors):
                    merged[row].update(vector.scores)
            vectors = [
                ScoreVector(citation_id=i.citation_id, scores=s)
                for i, s in zip(inputs, merged)
            ]

        mark = clock()
        for vector in vectors:
            compile_tags(vector, policy, vocab, descriptors)
        stage["compile"] += clock() - mark
        processed += len(chunk)
    wall = clock() - started

    return BenchReport(
        citations=processed,
        wall_seconds=wall,
        citations_per_second=processed / wall if wall > 0 else 0.0,
        stage_seconds=stage,
        per_scorer_seconds=per_scorer,
    )
