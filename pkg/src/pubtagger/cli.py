"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration problems, 2 data problems,
3 scorer backend or sidecar failures.  Logs go to standard error; data goes
to the requested output file or standard output.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from collections import Counter
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .compiler import CompilerPolicy
from .corpus import (
    CorpusStats,
    LabelVocabulary,
    compute_corpus_stats,
    compute_label_correlations,
    iter_corpus,
    normalize_corpus,
    read_corpus,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    PubTaggerError,
)
from .metrics import (
    confusion_counts,
    format_metric_report,
    metric_report,
    report_to_json_text,
)
from .partition import (
    BinaryDataset,
    Partition,
    build_binary_dataset,
    stratified_split,
    verify_stratification,
)
from .pipeline import (
    PipelineConfig,
    bench,
    format_bench_report,
    load_scorer_stack,
    run_tagging,
)
from .scoring import (
    KIND_BINARY,
    KIND_MONOLITHIC,
    StubScorer,
    TrainingConfig,
    ensemble_score,
    hash_score_fn,
    save_scorer,
    train_reference_scorer,
)
from .sweep import evaluate_run, format_sweep_table, sweep_table_json_text
from .textnorm import load_symbol_map, normalize_text
from .assembler import assemble_input, WhitespaceTokenizer
from .compiler import tune_thresholds

logger = logging.getLogger("pubtagger")


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message: str):
        raise ConfigError(message)


@contextmanager
def _open_output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as handle:
            yield handle


def _corpus_source(path: str):
    return sys.stdin if path == "-" else path


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    config = (
        PipelineConfig.from_file(args.config)
        if getattr(args, "config", None)
        else PipelineConfig()
    )
    return config.merged(
        corpus=getattr(args, "corpus", None),
        vocabulary=getattr(args, "vocabulary", None),
        policy=getattr(args, "policy", None),
        scorers=getattr(args, "scorer", None),
        sidecar=getattr(args, "sidecar", None),
        architecture=getattr(args, "architecture", None),
        budget=getattr(args, "budget", None),
        seed=getattr(args, "seed", None),
        workers=getattr(args, "workers", None),
        symbol_map=getattr(args, "symbol_map", None),
    )


def _normalized_citation(citation, symbol_map):
    return replace(
        citation,
        title=normalize_text(citation.title, symbol_map),
        abstract=normalize_text(citation.abstract, symbol_map),
    )


def _select_part(corpus, partition_path: str | None, part: str):
    if partition_path is None:
        return corpus
    partition = Partition.load(partition_path)
    wanted = set(partition.part(part))
    return [c for c in corpus if c.id in wanted]


def _cmd_normalize(args: argparse.Namespace) -> int:
    symbol_map = load_symbol_map(args.symbol_map) if args.symbol_map else None
    vocab = LabelVocabulary.load(args.vocabulary) if args.vocabulary else None
    with _open_output(args.output) as out:
        for citation in iter_corpus(_corpus_source(args.corpus)):
            clean = _normalized_citation(citation, symbol_map)
            if vocab is not None:
                clean = normalize_corpus([clean], vocab)[0]
            out.write(json.dumps(clean.to_json(), ensure_ascii=True) + "\n")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    if args.write_vocab and args.vocabulary:
        raise ConfigError("--write-vocab derives a vocabulary; do not also pass --vocabulary")
    source = _corpus_source(args.corpus)
    if args.vocabulary:
        vocab = LabelVocabulary.load(args.vocabulary)
        stats = compute_corpus_stats(list(iter_corpus(source)), vocab)
    else:
        counts: Counter[str] = Counter()
        histogram: Counter[int] = Counter()
        total = 0
        for citation in iter_corpus(source):
            total += 1
            histogram[len(citation.labels)] += 1
            counts.update(citation.labels)
        stats = CorpusStats(
            total_citations=total,
            per_label_count=dict(counts),
            tags_per_citation_histogram=dict(histogram),
        )
        if args.write_vocab:
            if not counts:
                raise DataError("corpus carries no labels; cannot derive a vocabulary")
            if args.base_label not in counts:
                raise ConfigError(
                    f"base label {args.base_label!r} does not occur in the corpus"
                )
            LabelVocabulary(counts, base_label=args.base_label).save(args.write_vocab)
            logger.info("wrote vocabulary with %d labels to %s", len(counts), args.write_vocab)
    with _open_output(args.output) as out:
        out.write(json.dumps(stats.to_json(), indent=2) + "\n")
    return 0


def _cmd_correlate(args: argparse.Namespace) -> int:
    vocab = LabelVocabulary.load(args.vocabulary)
    matrix = compute_label_correlations(
        read_corpus(_corpus_source(args.corpus)), vocab
    )
    with _open_output(args.output) as out:
        out.write(json.dumps(matrix.to_json(), indent=2) + "\n")
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    corpus = read_corpus(_corpus_source(args.corpus))
    pieces = args.ratios.split(",")
    try:
        ratios = tuple(float(p) for p in pieces)
    except ValueError:
        raise ConfigError(
            f"--ratios must be three comma-separated numbers, got {args.ratios!r}"
        ) from None
    partition = stratified_split(corpus, ratios, args.seed)
    if args.output:
        partition.save(args.output)
        logger.info("wrote partition to %s", args.output)
    else:
        sys.stdout.write(json.dumps(partition.to_json()) + "\n")
    if args.verify_tolerance is not None:
        if not args.vocabulary:
            raise ConfigError("--verify-tolerance needs --vocabulary")
        vocab = LabelVocabulary.load(args.vocabulary)
        report = verify_stratification(partition, corpus, vocab, args.verify_tolerance)
        if not report.passed:
            for violation in report.violations:
                logger.error(
                    "label %r: %s share %.2f%% vs target %.2f%%",
                    violation.label,
                    violation.partition,
                    violation.share_pct,
                    violation.target_pct,
                )
            raise DataError(
                f"{len(report.violations)} label shares exceed "
                f"±{args.verify_tolerance} points"
            )
        logger.info(
            "stratification verified: all label shares within ±%s points",
            args.verify_tolerance,
        )
    return 0


def _slug(label: str) -> str:
    # lowercased so two labels never collide only on case-insensitive filesystems
    return re.sub(r"[^A-Za-z0-9]+", "_", label).strip("_").lower() or "label"


def _cmd_binary_datasets(args: argparse.Namespace) -> int:
    vocab = LabelVocabulary.load(args.vocabulary)
    corpus = read_corpus(_corpus_source(args.corpus))
    corpus = _select_part(corpus, args.partition, args.part)
    labels = args.label if args.label else list(vocab.labels)
    for label in labels:
        if label not in vocab:
            raise ConfigError(f"label {label!r} is not in the vocabulary")
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    taken: dict[str, int] = {}
    written = 0
    for label in labels:
        try:
            dataset = build_binary_dataset(corpus, label, args.seed, args.min_size)
        except DataError as exc:
            logger.warning("skipping %r: %s", label, exc)
            continue
        slug = _slug(label)
        serial = taken.get(slug, 0)
        taken[slug] = serial + 1
        name = f"{slug}.json" if serial == 0 else f"{slug}_{serial}.json"
        path = out_dir / name
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(dataset.to_json(), handle)
            handle.write("\n")
        written += 1
        logger.info(
            "%s: %d positives, %d negatives -> %s",
            label,
            len(dataset.positives),
            len(dataset.negatives),
            path,
        )
    logger.info("wrote %d binary datasets to %s", written, out_dir)
    return 0


def _assembled_by_id(corpus, vocab, symbol_map, budget):
    tokenizer = WhitespaceTokenizer()
    by_id = {}
    for citation in normalize_corpus(corpus, vocab):
        clean = _normalized_citation(citation, symbol_map)
        by_id[citation.id] = (
            assemble_input(clean, tokenizer, budget),
            citation.labels,
        )
    return by_id


def _pairs_for(ids, by_id, context: str):
    pairs = []
    for cid in ids:
        if cid not in by_id:
            raise DataError(f"{context} references unknown citation {cid!r}")
        pairs.append(by_id[cid])
    return pairs


def _cmd_train_ref(args: argparse.Namespace) -> int:
    vocab = LabelVocabulary.load(args.vocabulary)
    corpus = read_corpus(_corpus_source(args.corpus))
    symbol_map = load_symbol_map(args.symbol_map) if args.symbol_map else None
    by_id = _assembled_by_id(corpus, vocab, symbol_map, args.budget)
    partition = Partition.load(args.partition) if args.partition else None

    if args.binary_dataset:
        with open(args.binary_dataset, encoding="utf-8") as handle:
            dataset_spec = BinaryDataset.from_json(json.load(handle))
        target = f"{KIND_BINARY}:{dataset_spec.label}"
        if args.target and args.target != target:
            raise ConfigError(
                f"--target {args.target!r} conflicts with binary dataset "
                f"for {dataset_spec.label!r}"
            )
        train_ids = list(dataset_spec.positives) + list(dataset_spec.negatives)
    else:
        target = args.target or KIND_MONOLITHIC
        train_ids = partition.train if partition else [c.id for c in corpus]

    dataset = _pairs_for(train_ids, by_id, "training set")
    eval_set = _pairs_for(partition.eval, by_id, "eval split") if partition else None
    if eval_set is None:
        logger.warning(
            "no --partition given: the scorer descriptor will carry no "
            "validation metrics"
        )
    class_weights = None
    if args.class_weights:
        try:
            class_weights = json.loads(args.class_weights)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--class-weights must be a JSON object: {exc}") from None
        if not isinstance(class_weights, dict):
            raise ConfigError("--class-weights must be a JSON object of label weights")
    config = TrainingConfig(
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        hash_dim=args.hash_dim,
        class_weights=class_weights,
    )
    scorer = train_reference_scorer(
        dataset, target, config, seed=args.seed, eval_set=eval_set
    )
    save_scorer(scorer, args.output)
    logger.info(
        "trained %s over %d examples; final loss %.6f; saved to %s",
        target,
        len(dataset),
        scorer.losses_[-1],
        args.output,
    )
    if scorer.validation_metrics_:
        for label, metrics in scorer.validation_metrics_.items():
            logger.info(
                "validation %r: precision %.3f recall %.3f f1 %.3f",
                label,
                metrics["precision"],
                metrics["recall"],
                metrics["f1"],
            )
    return 0


def _scored_vectors(config: PipelineConfig, citations, symbol_map):
    scorers = load_scorer_stack(config)
    tokenizer = WhitespaceTokenizer()
    inputs = [
        assemble_input(_normalized_citation(c, symbol_map), tokenizer, config.budget)
        for c in citations
    ]
    if len(scorers) == 1:
        return scorers[0].score_batch(inputs), scorers
    return ensemble_score(scorers, inputs), scorers


def _cmd_tune_thresholds(args: argparse.Namespace) -> int:
    config = _build_config(args)
    if config.vocabulary is None:
        raise ConfigError("tune-thresholds needs a vocabulary")
    if config.corpus is None:
        raise ConfigError("tune-thresholds needs a corpus")
    vocab = LabelVocabulary.load(config.vocabulary)
    corpus = normalize_corpus(read_corpus(config.corpus), vocab)
    citations = _select_part(corpus, args.partition, args.part)
    symbol_map = load_symbol_map(config.symbol_map) if config.symbol_map else None
    vectors, _ = _scored_vectors(config, citations, symbol_map)
    gold = {c.id: c.labels for c in citations}
    thresholds = tune_thresholds(vectors, gold, args.objective)
    with _open_output(args.output) as out:
        out.write(json.dumps(thresholds, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_tag(args: argparse.Namespace) -> int:
    config = _build_config(args)
    source = sys.stdin if args.corpus == "-" else None
    dump = (
        open(args.dump_inputs, "w", encoding="utf-8") if args.dump_inputs else None
    )
    try:
        rows = run_tagging(config, source=source, input_sink=dump)
        with _open_output(args.output) as out:
            for row in rows:
                out.write(json.dumps(row, ensure_ascii=True) + "\n")
    finally:
        if dump is not None:
            dump.close()
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    vocab = LabelVocabulary.load(args.vocabulary)
    corpus = read_corpus(_corpus_source(args.corpus))
    predicted: dict[str, list[str]] = {}
    failures = 0
    with open(args.predictions, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"predictions line {number}: not valid JSON: {exc}") from None
            if not isinstance(row, dict) or not isinstance(row.get("id"), str):
                raise DataError(f"predictions line {number}: missing string 'id'")
            if row["id"] in predicted:
                raise DataError(f"predictions line {number}: duplicate id {row['id']!r}")
            if "error" in row:
                failures += 1
                predicted[row["id"]] = []
                continue
            tags = row.get("tags")
            if not isinstance(tags, list) or any(not isinstance(t, str) for t in tags):
                raise DataError(f"predictions line {number}: 'tags' must be an array")
            predicted[row["id"]] = tags
    if failures:
        logger.warning("%d prediction rows are error markers; scored as empty", failures)
    gold_ids = [c.id for c in corpus]
    missing = [cid for cid in gold_ids if cid not in predicted]
    if missing:
        raise AlignmentError(f"no prediction for citation {missing[0]!r}")
    extra = set(predicted) - set(gold_ids)
    if extra:
        raise AlignmentError(f"prediction for unknown citation {sorted(extra)[0]!r}")
    labels = args.label if args.label else None
    counts = confusion_counts(
        [(c.id, predicted[c.id]) for c in corpus],
        [(c.id, c.labels) for c in corpus],
        vocab,
        labels=labels,
    )
    report = metric_report(counts)
    with _open_output(args.output) as out:
        if args.format == "text":
            out.write(format_metric_report(report))
        else:
            out.write(report_to_json_text(report))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args)
    if config.vocabulary is None:
        raise ConfigError("sweep needs a vocabulary")
    if config.corpus is None:
        raise ConfigError("sweep needs a corpus")
    vocab = LabelVocabulary.load(config.vocabulary)
    corpus = read_corpus(config.corpus)
    citations = _select_part(corpus, args.partition, args.part)
    policy = CompilerPolicy.load(config.policy) if config.policy else None
    scorers = load_scorer_stack(config)
    symbol_map = load_symbol_map(config.symbol_map) if config.symbol_map else None
    table = evaluate_run(
        citations,
        scorers,
        vocab,
        policy=policy,
        budget=config.budget,
        symbol_map=symbol_map,
    )
    with _open_output(args.output) as out:
        if args.format == "text":
            out.write(format_sweep_table(table))
        else:
            out.write(sweep_table_json_text(table))
    return 0


def _stub_scorers(args: argparse.Namespace, seed: int):
    if args.stub_ensemble and args.stub_monolithic:
        raise ConfigError("choose one of --stub-ensemble or --stub-monolithic")
    if args.stub_ensemble:
        return [
            StubScorer(
                [f"Stub Label {i:02d}"],
                kind=KIND_BINARY,
                name=f"stub{i:02d}",
                score_fn=hash_score_fn(seed),
                batch_delay=args.stub_delay,
            )
            for i in range(args.stub_ensemble)
        ]
    if args.stub_monolithic:
        return [
            StubScorer(
                [f"Stub Label {i:02d}" for i in range(args.stub_monolithic)],
                kind=KIND_MONOLITHIC,
                name="stub-mono",
                score_fn=hash_score_fn(seed),
                batch_delay=args.stub_delay,
            )
        ]
    return None


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _build_config(args)
    stubs = _stub_scorers(args, config.seed)
    if stubs is not None and (config.scorers or config.sidecar):
        raise ConfigError("stub scorers replace --scorer/--sidecar; do not mix them")
    report = bench(config, args.n, scorers=stubs)
    with _open_output(args.output) as out:
        if args.format == "json":
            out.write(json.dumps(report.to_json(), indent=2) + "\n")
        else:
            out.write(format_bench_report(report))
    return 0


def _add_corpus(parser: _Parser, required: bool = True) -> None:
    parser.add_argument(
        "--corpus",
        required=required,
        help="input corpus JSONL ('-' for standard input)",
    )


def _add_output(parser: _Parser, what: str) -> None:
    parser.add_argument(
        "--output", default=None, help=f"write {what} here (default: standard output)"
    )


def _add_pipeline_flags(parser: _Parser) -> None:
    parser.add_argument("--config", default=None, help="pipeline config JSON file")
    parser.add_argument("--vocabulary", default=None, help="vocabulary JSON file")
    parser.add_argument(
        "--scorer",
        action="append",
        default=None,
        help="trained scorer file (repeat for ensemble members)",
    )
    parser.add_argument(
        "--sidecar",
        default=None,
        help="sidecar address tcp:host:port or stdio:<command> "
        "(default: PT_SIDECAR_ADDR)",
    )
    parser.add_argument(
        "--architecture",
        choices=("monolithic", "ensemble"),
        default=None,
        help="scorer composition (default monolithic)",
    )
    parser.add_argument("--budget", type=int, default=None, help="token budget (default 512)")
    parser.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    parser.add_argument("--symbol-map", default=None, help="symbol map JSON file")


def _add_part_selector(parser: _Parser, default_part: str) -> None:
    parser.add_argument("--partition", default=None, help="partition JSON file")
    parser.add_argument(
        "--part",
        choices=("train", "eval", "test"),
        default=default_part,
        help=f"partition slice to use (default {default_part})",
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="pubtagger",
        description="Corpus preparation, training, tagging, and evaluation "
        "for publication-type labeling.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("normalize", help="normalize citation text and labels")
    _add_corpus(p)
    p.add_argument("--vocabulary", default=None, help="vocabulary JSON (enables label projection)")
    p.add_argument("--symbol-map", default=None, help="symbol map JSON file")
    _add_output(p, "the normalized corpus JSONL")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("stats", help="corpus label statistics")
    _add_corpus(p)
    p.add_argument("--vocabulary", default=None, help="vocabulary JSON file")
    p.add_argument(
        "--write-vocab",
        default=None,
        help="derive a vocabulary from corpus counts and write it here",
    )
    p.add_argument(
        "--base-label",
        default="Journal Article",
        help="base label recorded in a derived vocabulary",
    )
    _add_output(p, "the statistics JSON")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("correlate", help="label co-occurrence correlation matrix")
    _add_corpus(p)
    p.add_argument("--vocabulary", required=True, help="vocabulary JSON file")
    _add_output(p, "the correlation matrix JSON")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("split", help="stratified train/eval/test split")
    _add_corpus(p)
    p.add_argument("--ratios", default="0.9,0.05,0.05", help="train,eval,test ratios")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vocabulary", default=None, help="vocabulary JSON (for verification)")
    p.add_argument(
        "--verify-tolerance",
        type=float,
        default=None,
        help="fail when any label share deviates more than this many points",
    )
    _add_output(p, "the partition JSON")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("binary-datasets", help="balanced per-label binary datasets")
    _add_corpus(p)
    p.add_argument("--vocabulary", required=True, help="vocabulary JSON file")
    p.add_argument(
        "--label",
        action="append",
        default=None,
        help="build only this label (repeatable; default: all vocabulary labels)",
    )
    _add_part_selector(p, "train")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-size", type=int, default=0, help="oversample positives below min_size/2")
    p.add_argument("--output-dir", required=True, help="directory for per-label JSON files")
    p.set_defaults(func=_cmd_binary_datasets)

    p = sub.add_parser("train-ref", help="train the reference scorer")
    _add_corpus(p)
    p.add_argument("--vocabulary", required=True, help="vocabulary JSON file")
    p.add_argument(
        "--target",
        default=None,
        help="'monolithic' (default) or 'binary:<label>'",
    )
    p.add_argument("--partition", default=None, help="partition JSON (train + eval splits)")
    p.add_argument("--binary-dataset", default=None, help="balanced binary dataset JSON")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--hash-dim", type=int, default=2**18)
    p.add_argument("--class-weights", default=None, help="JSON object of per-label weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=512, help="token budget")
    p.add_argument("--symbol-map", default=None, help="symbol map JSON file")
    p.add_argument("--output", required=True, help="scorer file to write")
    p.set_defaults(func=_cmd_train_ref)

    p = sub.add_parser("tune-thresholds", help="per-label threshold tuning")
    _add_corpus(p)
    _add_pipeline_flags(p)
    _add_part_selector(p, "eval")
    p.add_argument(
        "--objective",
        default="max_f1",
        help="'max_f1' or 'recall_at_least:<r>'",
    )
    _add_output(p, "the per-label threshold JSON")
    p.set_defaults(func=_cmd_tune_thresholds)

    p = sub.add_parser("tag", help="tag a corpus end to end")
    _add_corpus(p)
    _add_pipeline_flags(p)
    p.add_argument("--policy", default=None, help="compiler policy JSON file")
    p.add_argument("--workers", type=int, default=None, help="parallel workers (default 1)")
    p.add_argument(
        "--dump-inputs",
        default=None,
        help="also write assembled model inputs JSONL here",
    )
    _add_output(p, "the tag list JSONL")
    p.set_defaults(func=_cmd_tag)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    _add_corpus(p)
    p.add_argument("--predictions", required=True, help="tag list JSONL from 'tag'")
    p.add_argument("--vocabulary", required=True, help="vocabulary JSON file")
    p.add_argument(
        "--label",
        action="append",
        default=None,
        help="restrict evaluation to this label (repeatable)",
    )
    p.add_argument("--format", choices=("json", "text"), default="json")
    _add_output(p, "the metric report")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="max-tags × reliability-threshold grid")
    _add_corpus(p)
    _add_pipeline_flags(p)
    p.add_argument("--policy", default=None, help="base compiler policy JSON file")
    _add_part_selector(p, "test")
    p.add_argument("--format", choices=("json", "text"), default="json")
    _add_output(p, "the sweep table")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bench", help="throughput benchmark")
    _add_corpus(p, required=False)
    _add_pipeline_flags(p)
    p.add_argument("--policy", default=None, help="compiler policy JSON file")
    p.add_argument("--n", type=int, default=20000, help="citations to process")
    p.add_argument(
        "--stub-ensemble",
        type=int,
        default=None,
        help="bench with this many scripted binary scorers",
    )
    p.add_argument(
        "--stub-monolithic",
        type=int,
        default=None,
        help="bench with one scripted scorer over this many labels",
    )
    p.add_argument(
        "--stub-delay",
        type=float,
        default=0.0,
        help="fixed per-batch delay of each stub scorer, seconds",
    )
    p.add_argument("--format", choices=("json", "text"), default="text")
    _add_output(p, "the benchmark report")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            parser.print_help(sys.stderr)
            return 1
        return int(args.func(args) or 0)
    except PubTaggerError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
