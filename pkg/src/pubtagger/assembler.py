"""Model input assembly: serialization format and token budgeting.

The serialized input is ``journal_id<1>title<2>abstract``.  The journal id,
the two separators, and the title are kept whole whenever they fit the token
budget; whatever budget remains is filled with the longest abstract prefix
that fits, cut at a token boundary.  Only when the fixed fields alone
overflow the budget is the title itself prefix-truncated (and the abstract
dropped entirely).
"""

from __future__ import annotations

import json
import re
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Protocol, runtime_checkable

from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import Citation
from .errors import DataError
from .validation import check_positive_int

FIELD_SEPARATOR_1 = "<1>"
FIELD_SEPARATOR_2 = "<2>"

DEFAULT_TOKEN_BUDGET = 512


@runtime_checkable
class Tokenizer(Protocol):
    """Counting and boundary-respecting truncation over one text.

    Implementations must guarantee count_tokens(prefix_tokens(t, n)) <= n and
    prefix_tokens(t, count_tokens(t)) == t, and token counts must not
    decrease when text is appended (assembly relies on this monotonicity).
    """

    def count_tokens(self, text: str) -> int: ...

    def prefix_tokens(self, text: str, n: int) -> str: ...


class WhitespaceTokenizer:
    """Tokens are maximal runs of non-whitespace characters.

    Separators carry no token weight of their own: ``a<1>b`` is a single
    token.  Prefixes are exact substrings of the input, so interior spacing
    survives truncation.
    """

    _TOKEN_RE = re.compile(r"\S+")

    def count_tokens(self, text: str) -> int:
        return len(self._TOKEN_RE.findall(text))

    def prefix_tokens(self, text: str, n: int) -> str:
        if n <= 0:
            return ""
        last_end = 0
        for count, match in enumerate(self._TOKEN_RE.finditer(text), start=1):
            last_end = match.end()
            if count == n:
                return text[:last_end]
        return text


@dataclass(frozen=True)
class ModelInput:
    """One serialized, budgeted scorer input."""

    citation_id: str
    text: str
    token_count: int
    truncated: bool

    def to_json(self) -> dict:
        return {"id": self.citation_id, "text": self.text, "truncated": self.truncated}


def _longest_fitting(
    build: Callable[[int], str], limit: int, tokenizer: Tokenizer, budget: int
) -> int:
    """Largest n in [0, limit] whose built text stays within budget.

    Assumes token counts are monotone in n; callers ensure build(0) fits.
    """
    low, high = 0, limit
    while low < high:
        mid = (low + high + 1) // 2
        if tokenizer.count_tokens(build(mid)) <= budget:
            low = mid
        else:
            high = mid - 1
    return low


def assemble_input(
    citation: Citation,
    tokenizer: Tokenizer | None = None,
    budget: int = DEFAULT_TOKEN_BUDGET,
) -> ModelInput:
    """Serialize one citation and enforce the token budget.

    Raises a data error when even ``journal_id<1><2>`` exceeds the budget,
    naming the citation.
    """
    tokenizer = tokenizer if tokenizer is not None else WhitespaceTokenizer()
    check_positive_int("budget", budget)
    skeleton = citation.journal_id + FIELD_SEPARATOR_1 + FIELD_SEPARATOR_2
    if tokenizer.count_tokens(skeleton) > budget:
        raise DataError(
            f"citation {citation.id!r}: token budget {budget} cannot hold "
            f"the journal id and separators alone"
        )
    title = citation.title
    abstract = citation.abstract

    def with_abstract(n: int) -> str:
        return (
            citation.journal_id
            + FIELD_SEPARATOR_1
            + title
            + FIELD_SEPARATOR_2
            + tokenizer.prefix_tokens(abstract, n)
        )

    abstract_total = tokenizer.count_tokens(abstract)
    if tokenizer.count_tokens(with_abstract(0)) <= budget:
        kept = _longest_fitting(with_abstract, abstract_total, tokenizer, budget)
        text = with_abstract(kept)
        truncated = kept < abstract_total
    else:
        # Fixed fields alone overflow: cut the title, drop the abstract.
        def with_title(n: int) -> str:
            return (
                citation.journal_id
                + FIELD_SEPARATOR_1
                + tokenizer.prefix_tokens(title, n)
                + FIELD_SEPARATOR_2
            )

        kept = _longest_fitting(with_title, tokenizer.count_tokens(title), tokenizer, budget)
        text = with_title(kept)
        truncated = True
    return ModelInput(
        citation_id=citation.id,
        text=text,
        token_count=tokenizer.count_tokens(text),
        truncated=truncated,
    )


def write_model_inputs(inputs: Iterable[ModelInput], sink: str | Path | IO[str]) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as handle:
            write_model_inputs(inputs, handle)
        return
    for item in inputs:
        sink.write(json.dumps(item.to_json(), ensure_ascii=True) + "\n")


class InputAssembler(BaseEstimator, TransformerMixin):
    """Estimator wrapper mapping citations to budgeted model inputs."""

    def __init__(self, tokenizer: Tokenizer | None = None, budget: int = DEFAULT_TOKEN_BUDGET):
        self.tokenizer = tokenizer
        self.budget = budget

    def fit(self, X: Sequence[Citation], y: object = None) -> "InputAssembler":
        check_positive_int("budget", self.budget)
        return self

    def transform(self, X: Sequence[Citation]) -> list[ModelInput]:
        return [assemble_input(c, self.tokenizer, self.budget) for c in X]
