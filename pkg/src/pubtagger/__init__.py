"""Desk-scale publication-type tagging for bibliographic citation records.

The package covers the full loop: corpus normalization and statistics,
stratified partitioning, scorer training (a hashed bag-of-tokens reference
model, persisted scorer files, or a remote sidecar process), rule-based tag
compilation, evaluation, grid sweeps, and a throughput benchmark.  Every
piece is available both as a library (this module re-exports the public
surface) and through the ``pubtagger`` command line.
"""

from .assembler import (
    DEFAULT_TOKEN_BUDGET,
    FIELD_SEPARATOR_1,
    FIELD_SEPARATOR_2,
    InputAssembler,
    ModelInput,
    Tokenizer,
    WhitespaceTokenizer,
    assemble_input,
    write_model_inputs,
)
from .compiler import (
    CompilerPolicy,
    Rule,
    TagCompiler,
    TagList,
    TagProvenance,
    compile_tags,
    reliable_labels,
    tune_thresholds,
)
from .corpus import (
    Citation,
    CorpusStats,
    CorrelationMatrix,
    LabelVocabulary,
    compute_corpus_stats,
    compute_label_correlations,
    iter_corpus,
    normalize_corpus,
    parse_citation_record,
    read_corpus,
    write_corpus,
)
from .errors import (
    AlignmentError,
    BackendError,
    ConfigError,
    DataError,
    ParseError,
    PubTaggerError,
    RecordScoringError,
    SchemaError,
    TrainingDivergedError,
    TrainingError,
    UndefinedMetricError,
)
from .metrics import (
    ConfusionCounts,
    LabelCounts,
    LabelMetrics,
    MetricReport,
    auc_pr,
    auc_roc,
    confusion_counts,
    f1_score,
    format_metric_report,
    macro_average,
    metric_report,
    report_to_json_text,
)
from .partition import (
    BinaryDataset,
    DEFAULT_RATIOS,
    Partition,
    ShareDeviation,
    StratificationReport,
    build_binary_dataset,
    label_shares,
    stratified_split,
    verify_stratification,
)
from .pipeline import (
    BenchReport,
    PipelineConfig,
    bench,
    format_bench_report,
    load_scorer_stack,
    run_tagging,
)
from .remote import RemoteScorer, parse_address, sidecar_address
from .scoring import (
    DEFAULT_HASH_DIM,
    ReferenceScorer,
    ScoreVector,
    Scorer,
    ScorerDescriptor,
    StubScorer,
    TrainingConfig,
    ensemble_score,
    hash_score_fn,
    load_scorer,
    save_scorer,
    train_reference_scorer,
)
from .sweep import (
    CUMULATIVE_METRICS_DEFINITION,
    SweepRow,
    SweepTable,
    evaluate_run,
    format_sweep_table,
    sweep_table_json_text,
)
from .synth import corpus_from_label_counts, synthetic_corpus
from .textnorm import (
    DEFAULT_SYMBOL_MAP,
    TextNormalizer,
    load_symbol_map,
    normalize_text,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BackendError",
    "BenchReport",
    "BinaryDataset",
    "CUMULATIVE_METRICS_DEFINITION",
    "Citation",
    "CompilerPolicy",
    "ConfigError",
    "ConfusionCounts",
    "CorpusStats",
    "CorrelationMatrix",
    "DEFAULT_HASH_DIM",
    "DEFAULT_RATIOS",
    "DEFAULT_SYMBOL_MAP",
    "DEFAULT_TOKEN_BUDGET",
    "DataError",
    "FIELD_SEPARATOR_1",
    "FIELD_SEPARATOR_2",
    "InputAssembler",
    "LabelCounts",
    "LabelMetrics",
    "LabelVocabulary",
    "MetricReport",
    "ModelInput",
    "ParseError",
    "Partition",
    "PipelineConfig",
    "PubTaggerError",
    "RecordScoringError",
    "ReferenceScorer",
    "RemoteScorer",
    "Rule",
    "SchemaError",
    "ScoreVector",
    "Scorer",
    "ScorerDescriptor",
    "ShareDeviation",
    "StratificationReport",
    "StubScorer",
    "SweepRow",
    "SweepTable",
    "TagCompiler",
    "TagList",
    "TagProvenance",
    "TextNormalizer",
    "Tokenizer",
    "TrainingConfig",
    "TrainingDivergedError",
    "TrainingError",
    "UndefinedMetricError",
    "WhitespaceTokenizer",
    "assemble_input",
    "auc_pr",
    "auc_roc",
    "bench",
    "build_binary_dataset",
    "compile_tags",
    "compute_corpus_stats",
    "compute_label_correlations",
    "confusion_counts",
    "corpus_from_label_counts",
    "ensemble_score",
    "evaluate_run",
    "f1_score",
    "format_bench_report",
    "format_metric_report",
    "format_sweep_table",
    "hash_score_fn",
    "iter_corpus",
    "label_shares",
    "load_scorer",
    "load_scorer_stack",
    "load_symbol_map",
    "macro_average",
    "metric_report",
    "normalize_corpus",
    "normalize_text",
    "parse_address",
    "parse_citation_record",
    "read_corpus",
    "reliable_labels",
    "report_to_json_text",
    "run_tagging",
    "save_scorer",
    "sidecar_address",
    "stratified_split",
    "sweep_table_json_text",
    "synthetic_corpus",
    "train_reference_scorer",
    "tune_thresholds",
    "verify_stratification",
    "write_corpus",
    "write_model_inputs",
]
