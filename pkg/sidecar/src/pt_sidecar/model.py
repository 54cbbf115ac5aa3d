"""Loading and scoring of a saved sequence-classification model.

The model directory is a standard saved checkpoint: weights, config with an
``id2label`` map, and a tokenizer.  An optional ``validation_metrics.json``
beside them is passed through to the handshake descriptor so clients can
apply reliability filtering.
"""

from __future__ import annotations

import json
from pathlib import Path


class SidecarError(Exception):
    """The model directory cannot be served."""


class TransformerScorer:
    """Sigmoid label probabilities from a sequence-classification checkpoint.

    ``batch_size`` chunks long input lists; it never leaks into the wire
    protocol.  Scoring runs under ``torch.no_grad`` on the given device.
    """

    def __init__(
        self,
        model_dir: str | Path,
        device: str = "cpu",
        batch_size: int = 16,
        max_length: int | None = None,
    ):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._torch = torch
        path = Path(model_dir)
        if not path.is_dir():
            raise SidecarError(f"model directory {path} does not exist")
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(path)
            self._model = AutoModelForSequenceClassification.from_pretrained(path)
        except Exception as exc:  # loader errors span many library types
            raise SidecarError(f"cannot load model from {path}: {exc}") from exc
        self._model.eval()
        try:
            self._model.to(device)
        except (RuntimeError, ValueError) as exc:
            raise SidecarError(f"cannot move model to device {device!r}: {exc}") from exc
        self._device = device
        if batch_size < 1:
            raise SidecarError(f"batch size must be positive, got {batch_size}")
        self._batch_size = batch_size
        self._max_length = max_length or min(
            getattr(self._model.config, "max_position_embeddings", 512), 512
        )

        id2label = getattr(self._model.config, "id2label", None)
        if not id2label:
            raise SidecarError(f"model config in {path} carries no id2label map")
        try:
            self.vocabulary = tuple(
                id2label[key] for key in sorted(id2label, key=int)
            )
        except (KeyError, ValueError) as exc:
            raise SidecarError(f"malformed id2label map in {path}: {exc}") from exc
        self.name = path.name or "transformer-sidecar"

        self.validation_metrics = None
        metrics_path = path / "validation_metrics.json"
        if metrics_path.exists():
            try:
                with open(metrics_path, encoding="utf-8") as handle:
                    self.validation_metrics = json.load(handle)
            except (OSError, json.JSONDecodeError) as exc:
                raise SidecarError(f"cannot read {metrics_path}: {exc}") from exc

    def descriptor(self) -> dict:
        """The handshake descriptor: monolithic scorer over id2label order."""
        return {
            "name": self.name,
            "kind": "monolithic",
            "vocabulary": list(self.vocabulary),
            "validation_metrics": self.validation_metrics,
        }

    def score(self, texts: list[str]) -> list[dict[str, float]]:
        """Per-text label probabilities, chunked by the configured batch size."""
        out: list[dict[str, float]] = []
        for start in range(0, len(texts), self._batch_size):
            chunk = texts[start : start + self._batch_size]
            encoded = self._tokenizer(
                chunk,
                padding=True,
                truncation=True,
                max_length=self._max_length,
                return_tensors="pt",
            ).to(self._device)
            with self._torch.no_grad():
                logits = self._model(**encoded).logits
            probabilities = self._torch.sigmoid(logits).cpu()
            for row in probabilities:
                out.append(
                    {
                        label: min(1.0, max(0.0, float(value)))
                        for label, value in zip(self.vocabulary, row)
                    }
                )
        return out
