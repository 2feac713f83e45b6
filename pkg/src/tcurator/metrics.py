"""Trust-rate arithmetic and per-run statistics.

Rates are exact rationals end to end; rounding (half-up, two decimals)
happens only at the display/serialization edge so accumulated statistics
never drift.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Collection, Sequence

import yaml

from .model import CurationError, OperatorOutcome


class TrustedExceedsInput(CurationError):
    """trusted_count > input_count (or a negative count)."""


class BrokenChain(CurationError):
    """An outcome's input does not continue the previous outcome's output."""


def rate_of_trust(input_count: int, trusted_count: int) -> Fraction:
    """Share of the input an operator rejected, as an exact rational.

    An empty input has rate 0 by definition.
    """
    if input_count < 0 or trusted_count < 0:
        raise TrustedExceedsInput("counts must be non-negative")
    if trusted_count > input_count:
        raise TrustedExceedsInput(
            f"trusted_count {trusted_count} exceeds input_count {input_count}"
        )
    if input_count == 0:
        return Fraction(0)
    return Fraction(input_count - trusted_count, input_count)


def round_rate(rate: Fraction, digits: int = 2) -> float:
    """Half-up rounding for display; internal values stay exact."""
    quantum = Decimal(1).scaleb(-digits)
    dec = Decimal(rate.numerator) / Decimal(rate.denominator)
    return float(dec.quantize(quantum, rounding=ROUND_HALF_UP))


def format_rate_percent(rate: Fraction) -> str:
    """Render a rate as a percentage with two decimals, e.g. ``95.17%``."""
    return f"{round_rate(rate * 100):.2f}%"


@dataclass(frozen=True)
class StageStats:
    """One operator row; the rate is derived, never stored."""

    name: str
    input: int
    trusted: int
    untrusted: int
    duration_ms: int = 0

    @property
    def rate(self) -> Fraction:
        return rate_of_trust(self.input, self.trusted)


@dataclass(frozen=True)
class RunStatistics:
    run_id: str
    per_operator: tuple[StageStats, ...]

    @property
    def final_trusted(self) -> int:
        return self.per_operator[-1].trusted if self.per_operator else 0

    @property
    def overall_rate(self) -> Fraction:
        if not self.per_operator:
            return Fraction(0)
        return rate_of_trust(self.per_operator[0].input, self.final_trusted)


def accumulate(
    outcomes: Sequence[OperatorOutcome],
    run_id: str = "run",
    chain_exempt: Collection[str] = (),
) -> RunStatistics:
    """Fold per-operator outcomes into run statistics.

    Each outcome's input must equal the previous outcome's trusted count;
    operators named in ``chain_exempt`` (e.g. enrichment, which widens the
    set it was given) skip that check.
    """
    rows: list[StageStats] = []
    prev: OperatorOutcome | None = None
    for outcome in outcomes:
        if prev is not None and outcome.operator not in chain_exempt:
            if outcome.input_count != len(prev.trusted):
                raise BrokenChain(
                    f"{outcome.operator} consumed {outcome.input_count} queries"
                    f" but {prev.operator} passed on {len(prev.trusted)}"
                )
        rows.append(
            StageStats(
                name=outcome.operator,
                input=outcome.input_count,
                trusted=len(outcome.trusted),
                untrusted=len(outcome.untrusted),
                duration_ms=outcome.duration_ms,
            )
        )
        prev = outcome
    return RunStatistics(run_id=run_id, per_operator=tuple(rows))


def stats_to_dict(stats: RunStatistics) -> dict:
    """The serialized shape: counts verbatim, rates rounded to 2 dp."""
    return {
        "run_id": stats.run_id,
        "operators": [
            {
                "name": row.name,
                "input": row.input,
                "trusted": row.trusted,
                "untrusted": row.untrusted,
                "rate_of_trust": round_rate(row.rate),
                "duration_ms": row.duration_ms,
            }
            for row in stats.per_operator
        ],
        "final_trusted": stats.final_trusted,
        "overall_rate_of_trust": round_rate(stats.overall_rate),
    }


def emit_stats(stats: RunStatistics, path: str | Path) -> None:
    """Write the run statistics as YAML (schema above, key order fixed)."""
    payload = yaml.safe_dump(stats_to_dict(stats), sort_keys=False)
    Path(path).write_text(payload, encoding="utf-8")


def load_stats(path: str | Path) -> RunStatistics:
    """Read statistics back; counts rebuild the exact rates."""
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    rows = tuple(
        StageStats(
            name=row["name"],
            input=row["input"],
            trusted=row["trusted"],
            untrusted=row["untrusted"],
            duration_ms=row["duration_ms"],
        )
        for row in data.get("operators", [])
    )
    return RunStatistics(run_id=data["run_id"], per_operator=rows)
