"""Builders shared across test modules."""

from pubtagger import Citation, LabelVocabulary


def make_citation(
    cid,
    labels=(),
    journal_id="J01",
    title="A title about things",
    abstract="Some abstract text here.",
):
    return Citation(
        id=cid,
        journal_id=journal_id,
        title=title,
        abstract=abstract,
        labels=frozenset(labels),
    )


def make_vocab(counts, excluded=(), base_label=None):
    if base_label is None:
        base_label = max(counts, key=lambda k: (counts[k], k))
    return LabelVocabulary(counts, excluded=excluded, base_label=base_label)
