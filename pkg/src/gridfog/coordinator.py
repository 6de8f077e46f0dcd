"""FNC request handling: candidate filtering, dispatch, result aggregation.

The coordinator reads its registry of pile reports, narrows to in-range
piles with queue headroom (the candidate group, which doubles as the
migration group V downstream), dispatches one job per candidate, and
decides for the lowest score once all results are in or the aggregation
window closes.  It also performs the init-time application deployment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import SimTime
from .errors import EmptyResultSet, NoEligibleNodes
from .fognode import DataflowGraph
from .messages import Decision, JobDispatch, JobResult, ServiceRequest
from .topology import Layer, NodeId, Registry, nodes_within


@dataclass(frozen=True)
class ApplicationImage:
    """Deployable flow template bound for every node of one layer."""

    app_id: str
    flow_template: DataflowGraph
    target_layer: Layer

    def __post_init__(self):
        self.flow_template.validate()


def deploy_application(image: ApplicationImage, nodes) -> dict[NodeId, DataflowGraph]:
    """Instantiate the template on every target-layer node. Idempotent."""
    placement: dict[NodeId, DataflowGraph] = {}
    for record in nodes:
        if record.node.layer == image.target_layer.value:
            placement[record.node] = image.flow_template.placed_on(record.node)
    return placement


def filter_candidates(registry: Registry, request: ServiceRequest) -> list[NodeId]:
    """In-range piles with queue headroom, nearest first: the group V."""
    in_range = nodes_within(registry, request.origin, request.query_range_m, Layer.FOG)
    eligible = [
        node
        for node in in_range
        if registry.get(node).resources.queue_len < registry.get(node).resources.capacity
    ]
    if not eligible:
        raise NoEligibleNodes(request.request_id)
    return eligible


def dispatch(
    request: ServiceRequest, candidates: list[NodeId], clock: SimTime
) -> list[JobDispatch]:
    """One JobDispatch per candidate, stamped with the dispatch time."""
    if not candidates:
        raise NoEligibleNodes(request.request_id)
    return [
        JobDispatch(
            request_id=request.request_id,
            assignee=node,
            substream=f"{request.kind}/{request.request_id}",
            dispatched_at=clock,
        )
        for node in candidates
    ]


def aggregate(request_id: str, results: list[JobResult], clock: SimTime) -> Decision:
    """Pick the minimal score; ties go to the lowest NodeId ordinal."""
    matching = [r for r in results if r.request_id == request_id]
    if not matching:
        raise EmptyResultSet(request_id)
    best = min(matching, key=lambda r: (r.score, r.responder.ordinal, r.responder))
    return Decision(request_id=request_id, chosen=best.responder, decided_at=clock)


@dataclass
class PendingRequest:
    """Per-request aggregation state an FNC keeps between dispatch and decision."""

    request: ServiceRequest
    candidates: list[NodeId]
    results: list[JobResult] = field(default_factory=list)

    def record(self, result: JobResult) -> None:
        self.results.append(result)

    def complete(self) -> bool:
        return len(self.results) >= len(self.candidates)
