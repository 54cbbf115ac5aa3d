"""Shared fixture: a tiny randomly initialised checkpoint the server can load.

Built once per session; real quality does not matter, only that the
directory round-trips through the standard loaders and produces
deterministic scores on CPU.
"""

from __future__ import annotations

import pytest

LABELS = ["Journal Article", "Review", "Case Reports"]

VOCAB = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "j01",
    "<",
    "1",
    ">",
    "2",
    "the",
    "a",
    "study",
    "of",
    "gene",
    "therapy",
    "review",
    "##s",
    "trial",
]


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory: pytest.TempPathFactory) -> str:
    import torch
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizer

    root = tmp_path_factory.mktemp("tiny-model")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(vocab_file=str(vocab_file))

    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=16,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
        num_labels=len(LABELS),
        id2label={i: label for i, label in enumerate(LABELS)},
        label2id={label: i for i, label in enumerate(LABELS)},
        problem_type="multi_label_classification",
    )
    torch.manual_seed(0)
    model = BertForSequenceClassification(config)

    target = root / "checkpoint"
    model.save_pretrained(target)
    tokenizer.save_pretrained(target)
    return str(target)
