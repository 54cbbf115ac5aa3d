"""Convenience fine-tuning entry point.

Untested tooling: this script is provided for preparing model directories
the server can load, and is deliberately outside the test suite.  Expect to
adapt hyperparameters to your corpus; nothing here is a quality target.

Corpus format: JSONL with ``{"id", "journal_id", "title", "abstract",
"labels"}`` per line.  The input text mirrors the tagging pipeline's
assembly: ``journal_id<1>title<2>abstract``.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

logger = logging.getLogger("pt_sidecar.train")


def read_corpus(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def assemble(row: dict) -> str:
    return f"{row.get('journal_id', '')}<1>{row.get('title', '')}<2>{row.get('abstract', '')}"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pt-sidecar-train", description=__doc__.splitlines()[0]
    )
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--base-model", required=True, help="checkpoint to start from")
    parser.add_argument("--output", required=True, help="directory to save into")
    parser.add_argument("--labels", default=None, help="JSON list file; default: observed")
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--learning-rate", type=float, default=2e-5)
    parser.add_argument("--max-length", type=int, default=512)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")

    import torch
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    torch.manual_seed(args.seed)
    random.seed(args.seed)

    rows = read_corpus(args.corpus)
    if args.labels:
        with open(args.labels, encoding="utf-8") as handle:
            labels = list(json.load(handle))
    else:
        labels = sorted({l for row in rows for l in row.get("labels", [])})
    if not labels:
        logger.error("no labels to train on")
        return 1
    index = {label: i for i, label in enumerate(labels)}

    tokenizer = AutoTokenizer.from_pretrained(args.base_model)
    model = AutoModelForSequenceClassification.from_pretrained(
        args.base_model,
        num_labels=len(labels),
        id2label={i: l for i, l in enumerate(labels)},
        label2id=index,
        problem_type="multi_label_classification",
        ignore_mismatched_sizes=True,
    )
    model.train()
    model.to(args.device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=args.learning_rate)
    loss_fn = torch.nn.BCEWithLogitsLoss()

    order = list(range(len(rows)))
    for epoch in range(args.epochs):
        random.shuffle(order)
        total = 0.0
        batches = 0
        for start in range(0, len(order), args.batch_size):
            batch = [rows[i] for i in order[start : start + args.batch_size]]
            encoded = tokenizer(
                [assemble(row) for row in batch],
                padding=True,
                truncation=True,
                max_length=args.max_length,
                return_tensors="pt",
            ).to(args.device)
            targets = torch.zeros(len(batch), len(labels))
            for r, row in enumerate(batch):
                for label in row.get("labels", []):
                    if label in index:
                        targets[r, index[label]] = 1.0
            targets = targets.to(args.device)
            optimizer.zero_grad()
            loss = loss_fn(model(**encoded).logits, targets)
            loss.backward()
            optimizer.step()
            total += float(loss)
            batches += 1
        logger.info("epoch %d: mean loss %.6f", epoch, total / max(batches, 1))

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    logger.info("saved %d-label model to %s", len(labels), out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
