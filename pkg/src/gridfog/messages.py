"""Wire-level payload types exchanged between terminals, piles, and FNCs."""

from __future__ import annotations

from dataclasses import dataclass

from .engine import SimTime
from .topology import NodeId, NodeStatus, Point2D


@dataclass(frozen=True)
class ServiceRequest:
    """A terminal's charging query, answered by a pile selection."""

    request_id: str
    requester: NodeId
    origin: Point2D
    kind: str
    query_range_m: float
    issued_at: SimTime

    def __post_init__(self):
        if self.query_range_m <= 0:
            raise ValueError("query_range_m must be > 0")


@dataclass(frozen=True)
class PileOffer:
    """What a pile puts on the table: where it is and how long the wait."""

    location: Point2D
    expected_wait_ms: float


@dataclass(frozen=True)
class JobDispatch:
    request_id: str
    assignee: NodeId
    substream: str
    dispatched_at: SimTime


@dataclass(frozen=True)
class JobResult:
    request_id: str
    responder: NodeId
    score: float
    payload: PileOffer

    def __post_init__(self):
        if not (self.score >= 0 and self.score == self.score and self.score != float("inf")):
            raise ValueError("score must be finite and >= 0")


@dataclass(frozen=True)
class Decision:
    request_id: str
    chosen: NodeId
    decided_at: SimTime


@dataclass(frozen=True)
class FailureNotice:
    """Tells the requester no pile could be selected."""

    request_id: str
    reason: str


@dataclass(frozen=True)
class StatusReportMsg:
    status: NodeStatus


@dataclass(frozen=True)
class LatencyComplaint:
    """Terminal-side report that its serving flow misses the latency target."""

    flow_id: str
    terminal: NodeId
    origin: Point2D
    observed_latency_ms: float
