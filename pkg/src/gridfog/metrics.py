"""Per-run metric rows and their aggregate table."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields


@dataclass(frozen=True)
class MetricsRow:
    """One simulation run, reduced to its headline numbers."""

    run_id: str
    architecture: str
    swept_variable: str
    swept_value: float | None
    seed: int
    mean_latency_ms: float | None
    p95_latency_ms: float | None
    completed: int
    timed_out: int
    messages_total: int
    migrations: int
    error: str = ""


COLUMNS = tuple(f.name for f in fields(MetricsRow))


@dataclass
class MetricsTable:
    rows: list[MetricsRow] = field(default_factory=list)

    def append(self, row: MetricsRow) -> None:
        self.rows.append(row)

    def extend(self, other: "MetricsTable") -> None:
        self.rows.extend(other.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def percentile_nearest_rank(values: list[float], q: float) -> float:
    """Nearest-rank percentile; q in (0, 100]."""
    if not values:
        raise ValueError("no values")
    if not 0 < q <= 100:
        raise ValueError("q must be in (0, 100]")
    ordered = sorted(values)
    rank = max(1, math.ceil(q / 100.0 * len(ordered)))
    return ordered[rank - 1]
