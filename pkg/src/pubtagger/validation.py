"""Small input-validation helpers used across the package."""

from __future__ import annotations

from collections.abc import Sequence

from .errors import ConfigError


def check_positive_int(name: str, value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_unit_interval(name: str, value: object) -> float:
    try:
        number = float(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number in [0, 1], got {value!r}") from None
    if not 0.0 <= number <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value!r}")
    return number


def check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    """Validate a (train, eval, test) ratio triple: positive, summing to 1."""
    if len(ratios) != 3:
        raise ConfigError(f"expected three partition ratios, got {len(ratios)}")
    try:
        triple = tuple(float(r) for r in ratios)
    except (TypeError, ValueError):
        raise ConfigError(f"partition ratios must be numbers, got {ratios!r}") from None
    if any(r <= 0.0 for r in triple):
        raise ConfigError(f"partition ratios must be positive, got {triple}")
    if abs(sum(triple) - 1.0) > 1e-9:
        raise ConfigError(f"partition ratios must sum to 1, got {triple} (sum {sum(triple)!r})")
    return triple  # type: ignore[return-value]


def check_choice(name: str, value: str, choices: Sequence[str]) -> str:
    if value not in choices:
        raise ConfigError(f"{name} must be one of {', '.join(choices)}; got {value!r}")
    return value
