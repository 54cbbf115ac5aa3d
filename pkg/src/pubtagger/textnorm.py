"""Citation text cleaning: markup removal, symbol folding, ASCII projection.

The cleaning contract is narrow on purpose: strip HTML-like tags, fold a
configurable set of symbols to ASCII spellings, replace everything else
outside printable ASCII with a space, and collapse whitespace.  ASCII
punctuation is never touched, so strings like "p < .05" survive intact.
"""

from __future__ import annotations

import json
import re
from collections.abc import Iterable, Sequence
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ConfigError

SymbolPair = tuple[str, str]

# Symbols folded to ASCII spellings before the blanket non-ASCII replacement.
# Order matters: the first pair matching at a position wins.
DEFAULT_SYMBOL_MAP: tuple[SymbolPair, ...] = (
    ("©", "(c)"),   # copyright sign
    ("®", "(R)"),   # registered sign
    ("™", "(TM)"),  # trade mark sign
    ("±", "+/-"),   # plus-minus sign
    ("°", " deg"),  # degree sign
    ("µ", "u"),     # micro sign
    ("μ", "u"),     # greek small mu
    ("×", "x"),     # multiplication sign
    ("–", "-"),     # en dash
    ("—", "-"),     # em dash
    ("‘", "'"),     # left single quote
    ("’", "'"),     # right single quote
    ("“", '"'),     # left double quote
    ("”", '"'),     # right double quote
)

# A tag is "<" plus an ASCII letter plus at most 64 further non-">" characters,
# then ">"; closers carry a "/" before the letter.  Requiring the letter keeps
# mathematical text like "p < .05" out of reach.
_TAG_RE = re.compile(r"</?[A-Za-z][^>]{0,64}>")
_NON_PRINTABLE_RE = re.compile(r"[^\x20-\x7e]")
_SPACE_RUN_RE = re.compile(r" {2,}")

# Pathologically self-feeding symbol maps (replacements that re-create their
# own patterns) could otherwise loop forever; the default map converges in at
# most three passes.
_MAX_PASSES = 32

_SubstEngine = tuple[re.Pattern[str], dict[str, str]]


def _compile_symbol_map(pairs: Iterable[SymbolPair]) -> _SubstEngine | None:
    table: dict[str, str] = {}
    for entry in pairs:
        try:
            pattern, replacement = entry
        except (TypeError, ValueError):
            raise ConfigError(f"symbol map entries must be [pattern, replacement] pairs, got {entry!r}") from None
        if not isinstance(pattern, str) or not isinstance(replacement, str):
            raise ConfigError(f"symbol map entries must pair two strings, got {entry!r}")
        if not pattern:
            raise ConfigError("symbol map patterns must be non-empty")
        if _NON_PRINTABLE_RE.search(replacement):
            raise ConfigError(f"symbol map replacement for {pattern!r} must be printable ASCII")
        table.setdefault(pattern, replacement)
    if not table:
        return None
    # Alternation order mirrors map order, so the regex engine realizes the
    # "first pattern at a position wins" rule.
    compiled = re.compile("|".join(re.escape(p) for p in table))
    return compiled, table


_DEFAULT_ENGINE = _compile_symbol_map(DEFAULT_SYMBOL_MAP)


def _normalize_pass(text: str, engine: _SubstEngine | None) -> str:
    # Tags become a space, not the empty string: deleting "<b>" outright would
    # let nested fragments like "<<b>i>" splice into a fresh tag.
    text = _TAG_RE.sub(" ", text)
    if engine is not None:
        pattern, table = engine
        text = pattern.sub(lambda m: table[m.group(0)], text)
    text = _NON_PRINTABLE_RE.sub(" ", text)
    return _SPACE_RUN_RE.sub(" ", text).strip()


def _normalize_with_engine(raw: str, engine: _SubstEngine | None) -> str:
    text = raw
    for _ in range(_MAX_PASSES):
        replaced = _normalize_pass(text, engine)
        if replaced == text:
            return replaced
        text = replaced
    return text


def normalize_text(raw: str, symbol_map: Sequence[SymbolPair] | None = None) -> str:
    """Project raw text onto single-spaced printable ASCII.

    One pass removes HTML-like tags, applies the symbol map (first pair
    matching at a position wins, scanning left to right), replaces every
    remaining character outside printable ASCII with a space, and collapses
    whitespace runs while trimming the ends.  Passes repeat until the text
    stops changing, so markup that only becomes recognizable after an earlier
    substitution (nested tags, folded symbols completing a tag) cannot leak
    through; the result is a fixed point and renormalizing it is a no-op.
    """
    if symbol_map is None:
        return _normalize_with_engine(raw, _DEFAULT_ENGINE)
    return _normalize_with_engine(raw, _compile_symbol_map(symbol_map))


def load_symbol_map(path: str | Path) -> tuple[SymbolPair, ...]:
    """Read a symbol map from a JSON array of [pattern, replacement] pairs."""
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read symbol map {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"symbol map {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ConfigError(f"symbol map {path} must be a JSON array of pairs")
    pairs = []
    for entry in data:
        if not isinstance(entry, list) or len(entry) != 2:
            raise ConfigError(f"symbol map {path}: entries must be [pattern, replacement] pairs, got {entry!r}")
        pairs.append((entry[0], entry[1]))
    _compile_symbol_map(pairs)  # validate eagerly
    return tuple(pairs)


class TextNormalizer(BaseEstimator, TransformerMixin):
    """Stateless transformer applying :func:`normalize_text` element-wise.

    Parameters
    ----------
    symbol_map : sequence of (pattern, replacement) pairs, optional
        Substitutions applied before the ASCII projection.  ``None`` selects
        the built-in default map.
    """

    def __init__(self, symbol_map: Sequence[SymbolPair] | None = None):
        self.symbol_map = symbol_map

    def fit(self, X: Iterable[str], y: object = None) -> "TextNormalizer":
        if self.symbol_map is not None:
            _compile_symbol_map(self.symbol_map)
        return self

    def transform(self, X: Iterable[str]) -> list[str]:
        engine = (
            _DEFAULT_ENGINE
            if self.symbol_map is None
            else _compile_symbol_map(self.symbol_map)
        )
        return [_normalize_with_engine(text, engine) for text in X]
