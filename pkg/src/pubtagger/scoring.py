"""The pluggable classification boundary.

A scorer turns assembled model inputs into per-label probabilities.  The
trainable reference scorer here is a hashed bag-of-tokens logistic model:
deliberately simple, deterministic, and fast enough to exercise every
downstream stage with real probabilistic scores.  Binary scorers compose
into ensembles over the union of their single-label vocabularies.

Trained scorers persist to a versioned binary file: magic "PTSC", a u32
format version, a length-prefixed JSON descriptor, then the weight matrix
and bias vector as little-endian float64.
"""

from __future__ import annotations

import json
import struct
import time
import zlib
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import (
    BackendError,
    ConfigError,
    TrainingDivergedError,
    TrainingError,
)
from .validation import check_choice, check_positive_int

SCORER_MAGIC = b"PTSC"
SCORER_FORMAT_VERSION = 1
DEFAULT_HASH_DIM = 2**18

KIND_MONOLITHIC = "monolithic"
KIND_BINARY = "binary"


@dataclass(frozen=True)
class ScoreVector:
    """Per-label probabilities for one citation."""

    citation_id: str
    scores: dict[str, float]


@dataclass(frozen=True)
class ScorerDescriptor:
    """What a scorer is: its kind, vocabulary, and validation quality."""

    name: str
    kind: str
    vocabulary: tuple[str, ...]
    validation_metrics: dict[str, dict[str, float]] | None = None

    def __post_init__(self):
        check_choice("scorer kind", self.kind, (KIND_MONOLITHIC, KIND_BINARY))
        if not self.vocabulary:
            raise ConfigError("scorer vocabulary must be non-empty")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ConfigError("scorer vocabulary labels must be unique")
        if self.kind == KIND_BINARY and len(self.vocabulary) != 1:
            raise ConfigError(
                f"binary scorer must have exactly one vocabulary label, "
                f"got {len(self.vocabulary)}"
            )
        if self.validation_metrics is not None:
            for label, metrics in self.validation_metrics.items():
                if label not in self.vocabulary:
                    raise ConfigError(
                        f"validation metrics for {label!r} outside scorer vocabulary"
                    )
                for key in ("precision", "recall", "f1"):
                    if key not in metrics:
                        raise ConfigError(f"validation metrics for {label!r} missing {key!r}")

    @property
    def label(self) -> str:
        if self.kind != KIND_BINARY:
            raise ConfigError("only binary scorers have a single target label")
        return self.vocabulary[0]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "vocabulary": list(self.vocabulary),
            "validation_metrics": self.validation_metrics,
        }

    @classmethod
    def from_json(cls, obj: object) -> "ScorerDescriptor":
        if not isinstance(obj, dict):
            raise ConfigError("scorer descriptor must be a JSON object")
        vocabulary = obj.get("vocabulary")
        if not isinstance(vocabulary, list) or any(
            not isinstance(v, str) for v in vocabulary
        ):
            raise ConfigError("scorer descriptor 'vocabulary' must be an array of labels")
        metrics = obj.get("validation_metrics")
        if metrics is not None and not isinstance(metrics, dict):
            raise ConfigError("scorer descriptor 'validation_metrics' must be an object")
        return cls(
            name=str(obj.get("name", "scorer")),
            kind=str(obj.get("kind", KIND_MONOLITHIC)),
            vocabulary=tuple(vocabulary),
            validation_metrics=metrics,
        )


@runtime_checkable
class Scorer(Protocol):
    """Anything that can score batches of model inputs."""

    def descriptor(self) -> ScorerDescriptor: ...

    def score_batch(self, inputs: Sequence[object]) -> list[ScoreVector]: ...


def _input_parts(inputs: Sequence[object]) -> tuple[list[str], list[str]]:
    """Citation ids and texts from ModelInputs (bare strings get index ids)."""
    ids, texts = [], []
    for position, item in enumerate(inputs):
        if isinstance(item, str):
            ids.append(str(position))
            texts.append(item)
        else:
            ids.append(item.citation_id)
            texts.append(item.text)
    return ids, texts


def _hash_features(text: str, hash_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Hashed bag-of-tokens: (feature indices, counts) for one text."""
    buckets: dict[int, int] = {}
    for token in text.split():
        index = zlib.crc32(token.encode("utf-8")) % hash_dim
        buckets[index] = buckets.get(index, 0) + 1
    if not buckets:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    indices = np.fromiter(buckets.keys(), dtype=np.int64, count=len(buckets))
    counts = np.fromiter(buckets.values(), dtype=np.float64, count=len(buckets))
    return indices, counts


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters for the reference scorer."""

    epochs: int = 10
    learning_rate: float = 0.5
    hash_dim: int = DEFAULT_HASH_DIM
    class_weights: dict[str, float] | None = None


class ReferenceScorer(BaseEstimator):
    """Hashed bag-of-tokens logistic model, one output per label.

    Training is plain per-example SGD over a seeded permutation each epoch,
    so results are bit-reproducible for a fixed seed.  ``class_weights``
    scales the gradient of positive examples per label, penalizing missed
    positives more heavily.
    """

    def __init__(
        self,
        epochs: int = 10,
        learning_rate: float = 0.5,
        hash_dim: int = DEFAULT_HASH_DIM,
        class_weights: dict[str, float] | None = None,
        seed: int = 0,
        kind: str = KIND_MONOLITHIC,
        name: str = "reference",
    ):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.hash_dim = hash_dim
        self.class_weights = class_weights
        self.seed = seed
        self.kind = kind
        self.name = name

    def _check_fitted(self) -> None:
        if not hasattr(self, "weights_"):
            raise NotFittedError("this scorer has not been trained; call fit first")

    def _features(self, texts: Iterable[str]) -> list[tuple[np.ndarray, np.ndarray]]:
        return [_hash_features(text, self.hash_dim) for text in texts]

    def _dataset_loss(
        self,
        features: list[tuple[np.ndarray, np.ndarray]],
        targets: np.ndarray,
        weights: np.ndarray,
        bias: np.ndarray,
    ) -> float:
        eps = 1e-12
        total = 0.0
        for row, (indices, counts) in enumerate(features):
            z = weights[:, indices] @ counts + bias
            p = np.clip(_sigmoid(z), eps, 1.0 - eps)
            y = targets[row]
            total += float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum())
        return total / (len(features) * targets.shape[1])

    def fit(
        self,
        X: Sequence[object],
        y: Sequence[Iterable[str]],
        labels: Sequence[str] | None = None,
        eval_set: tuple[Sequence[object], Sequence[Iterable[str]]] | None = None,
    ) -> "ReferenceScorer":
        check_positive_int("epochs", self.epochs)
        check_positive_int("hash_dim", self.hash_dim)
        check_choice("scorer kind", self.kind, (KIND_MONOLITHIC, KIND_BINARY))
        if float(self.learning_rate) <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if len(X) == 0:
            raise TrainingError("cannot train on an empty dataset")
        if len(X) != len(y):
            raise TrainingError(f"{len(X)} inputs but {len(y)} label sets")

        label_sets = [frozenset(ls) for ls in y]
        if labels is not None:
            order = tuple(labels)
        else:
            order = tuple(sorted(set().union(*label_sets))) if label_sets else ()
        if not order:
            raise TrainingError("dataset carries no labels to learn")
        if self.kind == KIND_BINARY and len(order) != 1:
            raise TrainingError(
                f"binary training needs exactly one target label, got {len(order)}"
            )
        index = {label: i for i, label in enumerate(order)}
        for ls in label_sets:
            for label in ls:
                if label not in index:
                    raise TrainingError(f"label {label!r} outside the declared label set")

        _, texts = _input_parts(X)
        features = self._features(texts)
        targets = np.zeros((len(X), len(order)), dtype=np.float64)
        for row, ls in enumerate(label_sets):
            for label in ls:
                targets[row, index[label]] = 1.0

        positive_weight = np.ones(len(order), dtype=np.float64)
        if self.class_weights:
            for label, weight in self.class_weights.items():
                if label in index:
                    positive_weight[index[label]] = float(weight)

        rng = np.random.default_rng(self.seed)
        weights = rng.normal(0.0, 0.01, size=(len(order), self.hash_dim))
        bias = np.zeros(len(order), dtype=np.float64)
        lr = float(self.learning_rate)
        losses = []
        # Overflow/invalid warnings are noise here: the end-of-epoch finite
        # check turns genuine divergence into a typed error.
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(self.epochs):
                for row in rng.permutation(len(features)):
                    indices, counts = features[row]
                    z = weights[:, indices] @ counts + bias
                    gradient = _sigmoid(z) - targets[row]
                    gradient *= np.where(targets[row] == 1.0, positive_weight, 1.0)
                    if indices.size:
                        weights[:, indices] -= lr * np.outer(gradient, counts)
                    bias -= lr * gradient
                loss = self._dataset_loss(features, targets, weights, bias)
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch)
                losses.append(loss)

        self.labels_ = order
        self.weights_ = weights
        self.bias_ = bias
        self.losses_ = losses
        self.validation_metrics_ = (
            self._validation_metrics(eval_set) if eval_set is not None else None
        )
        return self

    def _validation_metrics(
        self, eval_set: tuple[Sequence[object], Sequence[Iterable[str]]]
    ) -> dict[str, dict[str, float]]:
        inputs, gold = eval_set
        probabilities = self.predict_proba(inputs)
        metrics = {}
        for column, label in enumerate(self.labels_):
            tp = fp = fn = 0
            for row, labels in enumerate(gold):
                hit = probabilities[row, column] >= 0.5
                truth = label in labels
                if hit and truth:
                    tp += 1
                elif hit:
                    fp += 1
                elif truth:
                    fn += 1
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            f1 = (
                2.0 * precision * recall / (precision + recall)
                if precision + recall
                else 0.0
            )
            metrics[label] = {"precision": precision, "recall": recall, "f1": f1}
        return metrics

    def predict_proba(self, X: Sequence[object]) -> np.ndarray:
        self._check_fitted()
        _, texts = _input_parts(X)
        out = np.empty((len(texts), len(self.labels_)), dtype=np.float64)
        for row, (indices, counts) in enumerate(self._features(texts)):
            z = self.weights_[:, indices] @ counts + self.bias_
            out[row] = _sigmoid(z)
        return out

    def predict(self, X: Sequence[object], threshold: float = 0.5) -> list[list[str]]:
        probabilities = self.predict_proba(X)
        return [
            [label for col, label in enumerate(self.labels_) if probabilities[row, col] >= threshold]
            for row in range(probabilities.shape[0])
        ]

    def descriptor(self) -> ScorerDescriptor:
        self._check_fitted()
        return ScorerDescriptor(
            name=self.name,
            kind=self.kind,
            vocabulary=tuple(self.labels_),
            validation_metrics=self.validation_metrics_,
        )

    def score_batch(self, inputs: Sequence[object]) -> list[ScoreVector]:
        ids, _ = _input_parts(inputs)
        probabilities = self.predict_proba(inputs)
        return [
            ScoreVector(
                citation_id=cid,
                scores={
                    label: float(probabilities[row, col])
                    for col, label in enumerate(self.labels_)
                },
            )
            for row, cid in enumerate(ids)
        ]


def parse_target(target: str) -> tuple[str, str | None]:
    """Parse a training target: "monolithic" or "binary:<label>"."""
    if target == KIND_MONOLITHIC:
        return KIND_MONOLITHIC, None
    if target.startswith(KIND_BINARY + ":"):
        label = target[len(KIND_BINARY) + 1 :]
        if not label:
            raise ConfigError("binary target must name its label, e.g. binary:Review")
        return KIND_BINARY, label
    raise ConfigError(
        f"target must be 'monolithic' or 'binary:<label>', got {target!r}"
    )


def train_reference_scorer(
    dataset: Sequence[tuple[object, Iterable[str]]],
    target: str = KIND_MONOLITHIC,
    config: TrainingConfig | None = None,
    seed: int = 0,
    eval_set: Sequence[tuple[object, Iterable[str]]] | None = None,
    name: str | None = None,
) -> ReferenceScorer:
    """Train the reference scorer on (input, gold labels) pairs.

    A binary target reduces the gold sets to presence/absence of its label
    and requires both classes in the data.  When an eval set is given, the
    returned scorer's descriptor carries per-label validation metrics.
    """
    config = config or TrainingConfig()
    kind, binary_label = parse_target(target)
    if not dataset:
        raise TrainingError("cannot train on an empty dataset")

    inputs = [pair[0] for pair in dataset]
    gold = [frozenset(pair[1]) for pair in dataset]
    if kind == KIND_BINARY:
        assert binary_label is not None
        flags = [binary_label in ls for ls in gold]
        if all(flags) or not any(flags):
            present = "positive" if all(flags) else "negative"
            raise TrainingError(
                f"binary target {binary_label!r}: dataset contains only "
                f"{present} examples"
            )
        labels: tuple[str, ...] = (binary_label,)
        gold = [frozenset({binary_label}) if flag else frozenset() for flag in flags]
    else:
        labels = tuple(sorted(set().union(*gold))) if gold else ()
        if not labels:
            raise TrainingError("monolithic training needs at least one labeled example")

    scorer = ReferenceScorer(
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        hash_dim=config.hash_dim,
        class_weights=config.class_weights,
        seed=seed,
        kind=kind,
        name=name or (f"{KIND_BINARY}:{binary_label}" if binary_label else "reference"),
    )
    prepared_eval = None
    if eval_set is not None:
        eval_inputs = [pair[0] for pair in eval_set]
        eval_gold = [frozenset(pair[1]) for pair in eval_set]
        if kind == KIND_BINARY:
            eval_gold = [
                frozenset({binary_label}) if binary_label in ls else frozenset()
                for ls in eval_gold
            ]
        prepared_eval = (eval_inputs, eval_gold)
    scorer.fit(inputs, gold, labels=labels, eval_set=prepared_eval)
    return scorer


class StubScorer:
    """A deterministic scorer with scripted outputs, for tests and benches.

    ``score_fn(citation_id, text, label)`` supplies each score; without one,
    every score is ``constant``.  ``batch_delay`` adds a fixed sleep per
    score_batch call to emulate a scorer with real per-pass cost.
    """

    def __init__(
        self,
        labels: Sequence[str],
        kind: str = KIND_MONOLITHIC,
        name: str = "stub",
        score_fn=None,
        constant: float = 0.5,
        validation_metrics: dict[str, dict[str, float]] | None = None,
        batch_delay: float = 0.0,
    ):
        self._descriptor = ScorerDescriptor(
            name=name,
            kind=kind,
            vocabulary=tuple(labels),
            validation_metrics=validation_metrics,
        )
        self._score_fn = score_fn
        self._constant = float(constant)
        self._batch_delay = float(batch_delay)

    def descriptor(self) -> ScorerDescriptor:
        return self._descriptor

    def score_batch(self, inputs: Sequence[object]) -> list[ScoreVector]:
        if self._batch_delay > 0.0:
            time.sleep(self._batch_delay)
        ids, texts = _input_parts(inputs)
        vectors = []
        for cid, text in zip(ids, texts):
            if self._score_fn is not None:
                scores = {
                    label: float(self._score_fn(cid, text, label))
                    for label in self._descriptor.vocabulary
                }
            else:
                scores = {label: self._constant for label in self._descriptor.vocabulary}
            vectors.append(ScoreVector(citation_id=cid, scores=scores))
        return vectors


def hash_score_fn(seed: int = 0):
    """A stable pseudo-random score function: same inputs, same scores."""

    def score(citation_id: str, text: str, label: str) -> float:
        digest = zlib.crc32(f"{seed}|{citation_id}|{label}".encode("utf-8"))
        return digest / 0xFFFFFFFF

    return score


def ensemble_score(
    scorers: Sequence[Scorer], inputs: Sequence[object]
) -> list[ScoreVector]:
    """Merge per-label outputs of binary scorers over their union vocabulary.

    Each member scores the whole batch once; merged per-input, per-label
    values are exactly what each member would return alone.
    """
    seen: set[str] = set()
    for scorer in scorers:
        desc = scorer.descriptor()
        if desc.kind != KIND_BINARY:
            raise ConfigError(
                f"ensemble members must be binary scorers; {desc.name!r} is {desc.kind}"
            )
        if desc.label in seen:
            raise ConfigError(f"duplicate ensemble label {desc.label!r}")
        seen.add(desc.label)
    ids, _ = _input_parts(inputs)
    merged: list[dict[str, float]] = [{} for _ in ids]
    for scorer in scorers:
        vectors = scorer.score_batch(inputs)
        for row, vector in enumerate(vectors):
            merged[row].update(vector.scores)
    return [
        ScoreVector(citation_id=cid, scores=scores)
        for cid, scores in zip(ids, merged)
    ]


def save_scorer(scorer: ReferenceScorer, path: str | Path) -> None:
    """Persist a trained reference scorer to the versioned binary format."""
    scorer._check_fitted()
    descriptor = scorer.descriptor().to_json()
    descriptor["hash_dim"] = scorer.hash_dim
    payload = json.dumps(descriptor, ensure_ascii=True).encode("utf-8")
    flat = np.concatenate(
        [scorer.weights_.ravel(), scorer.bias_]
    ).astype("<f8", copy=False)
    with open(path, "wb") as handle:
        handle.write(SCORER_MAGIC)
        handle.write(struct.pack("<I", SCORER_FORMAT_VERSION))
        handle.write(struct.pack("<I", len(payload)))
        handle.write(payload)
        handle.write(flat.tobytes())


def load_scorer(path: str | Path) -> ReferenceScorer:
    """Load a trained reference scorer; corrupt content is a backend error."""
    try:
        with open(path, "rb") as handle:
            blob = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scorer {path}: {exc}") from exc
    header = len(SCORER_MAGIC) + 8
    if len(blob) < header or blob[: len(SCORER_MAGIC)] != SCORER_MAGIC:
        raise BackendError(f"{path}: not a scorer file (bad magic)")
    (version,) = struct.unpack_from("<I", blob, len(SCORER_MAGIC))
    if version != SCORER_FORMAT_VERSION:
        raise BackendError(f"{path}: unsupported scorer format version {version}")
    (descriptor_length,) = struct.unpack_from("<I", blob, len(SCORER_MAGIC) + 4)
    if header + descriptor_length > len(blob):
        raise BackendError(f"{path}: truncated scorer file (descriptor)")
    try:
        raw = json.loads(blob[header : header + descriptor_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BackendError(f"{path}: corrupt scorer descriptor: {exc}") from exc
    if not isinstance(raw, dict) or "hash_dim" not in raw:
        raise BackendError(f"{path}: scorer descriptor missing hash_dim")
    try:
        descriptor = ScorerDescriptor.from_json(raw)
        hash_dim = check_positive_int("hash_dim", raw["hash_dim"])
    except ConfigError as exc:
        raise BackendError(f"{path}: corrupt scorer descriptor: {exc}") from exc

    n_labels = len(descriptor.vocabulary)
    expected = n_labels * hash_dim * 8 + n_labels * 8
    body = blob[header + descriptor_length :]
    if len(body) != expected:
        raise BackendError(
            f"{path}: truncated scorer file (expected {expected} weight bytes, "
            f"got {len(body)})"
        )
    flat = np.frombuffer(body, dtype="<f8")
    scorer = ReferenceScorer(
        hash_dim=hash_dim, kind=descriptor.kind, name=descriptor.name
    )
    scorer.labels_ = descriptor.vocabulary
    scorer.weights_ = flat[: n_labels * hash_dim].reshape(n_labels, hash_dim).copy()
    scorer.bias_ = flat[n_labels * hash_dim :].copy()
    scorer.losses_ = []
    scorer.validation_metrics_ = descriptor.validation_metrics
    return scorer
