"""Charging-pile behavior: request scoring, dataflow execution, migration.

A pile evaluates dispatched charging queries against its own state, runs
dataflow fragments as instruction sequences, and acts as source or target
of the flow migration protocol.  The protocol is a candidate-by-candidate
handshake: pop the best remaining candidate, ask it to accept, ship a
frozen state snapshot on accept, fall through to the next candidate on
reject, and warn and give up when the candidate group is exhausted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

from .engine import SimTime
from .errors import (
    CapacityExceeded,
    CyclicFlow,
    FlowNotResident,
    PileUnavailable,
)
from .messages import JobResult, PileOffer, ServiceRequest
from .topology import NodeId, Point2D

log = logging.getLogger(__name__)

OP_KINDS = ("input", "process", "output")


@dataclass(frozen=True)
class DataflowGraph:
    """Operators, directed edges, and per-operator node placement."""

    operators: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str], ...]
    placement: tuple[tuple[str, NodeId], ...] = ()

    def op_ids(self) -> list[str]:
        return [op_id for op_id, _ in self.operators]

    def kind_of(self, op_id: str) -> str:
        for oid, kind in self.operators:
            if oid == op_id:
                return kind
        raise KeyError(op_id)

    def placement_map(self) -> dict[str, NodeId]:
        return dict(self.placement)

    def placed_on(self, node: NodeId) -> "DataflowGraph":
        return replace(self, placement=tuple((oid, node) for oid, _ in self.operators))

    def validate(self) -> None:
        ids = self.op_ids()
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate operator ids")
        known = set(ids)
        for oid, kind in self.operators:
            if kind not in OP_KINDS:
                raise ValueError(f"unknown operator kind {kind!r}")
        incoming = {oid: 0 for oid in ids}
        outgoing = {oid: 0 for oid in ids}
        for src, dst in self.edges:
            if src not in known or dst not in known:
                raise ValueError(f"edge endpoint missing: {src}->{dst}")
            incoming[dst] += 1
            outgoing[src] += 1
        for oid, kind in self.operators:
            if kind == "input" and incoming[oid] > 0:
                raise ValueError(f"input operator {oid} has incoming edges")
            if kind == "output" and outgoing[oid] > 0:
                raise ValueError(f"output operator {oid} has outgoing edges")
        translate_flow(self, check_placement=False)  # raises CyclicFlow on cycles


def session_flow_template() -> DataflowGraph:
    """The three-operator ingest/assess/act chain used per charging session."""
    return DataflowGraph(
        operators=(("ingest", "input"), ("assess", "process"), ("act", "output")),
        edges=(("ingest", "assess"), ("assess", "act")),
    )


@dataclass(frozen=True)
class Instruction:
    op_id: str
    kind: str


def translate_flow(fragment: DataflowGraph, check_placement: bool = True) -> list[Instruction]:
    """Topologically order a single-node fragment into an instruction list.

    Ready operators are emitted in op_id order so the result is unique.
    """
    if check_placement and fragment.placement:
        nodes = {node for _, node in fragment.placement}
        if len(nodes) > 1:
            raise ValueError("fragment spans multiple nodes")
    ids = fragment.op_ids()
    indegree = {oid: 0 for oid in ids}
    children: dict[str, list[str]] = {oid: [] for oid in ids}
    for src, dst in fragment.edges:
        indegree[dst] += 1
        children[src].append(dst)
    ready = sorted(oid for oid, d in indegree.items() if d == 0)
    out: list[Instruction] = []
    while ready:
        oid = ready.pop(0)
        out.append(Instruction(oid, fragment.kind_of(oid)))
        changed = False
        for nxt in children[oid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
                changed = True
        if changed:
            ready.sort()
    if len(out) != len(ids):
        raise CyclicFlow(f"cycle among {sorted(set(ids) - {i.op_id for i in out})}")
    return out


@dataclass(frozen=True)
class FlowState:
    """Frozen snapshot of a flow: per-operator states plus the event cursor."""

    flow_id: str
    operator_states: tuple[tuple[str, int], ...]
    cursor: int
    origin: NodeId

    def __post_init__(self):
        if self.cursor < 0:
            raise ValueError("cursor must be >= 0")

    def states_map(self) -> dict[str, int]:
        return dict(self.operator_states)


@dataclass(frozen=True)
class MigrationPolicy:
    """Threshold, ordered candidate group V, and the retry bound."""

    t_upper: float
    candidates: tuple[NodeId, ...]
    max_attempts: int | None = None

    def __post_init__(self):
        if self.t_upper <= 0:
            raise ValueError("t_upper must be > 0")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("candidate group contains duplicates")
        if self.max_attempts is not None and self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def attempt_bound(self) -> int:
        if self.max_attempts is None:
            return len(self.candidates)
        return min(self.max_attempts, len(self.candidates))


@dataclass
class PileState:
    """Live charging-pile status: where it is and how backed up it is."""

    node: NodeId
    location: Point2D
    queue_len: int = 0
    service_rate: float = 30.0  # charges per virtual hour
    available: bool = True

    def __post_init__(self):
        if self.queue_len < 0:
            raise ValueError("queue_len must be >= 0")
        if self.service_rate <= 0:
            raise ValueError("service_rate must be > 0")

    @property
    def expected_wait_hours(self) -> float:
        return self.queue_len / self.service_rate

    @property
    def expected_wait_ms(self) -> float:
        return self.expected_wait_hours * 3_600_000.0


def evaluate_charging_request(
    request: ServiceRequest, pile: PileState, weights: tuple[float, float]
) -> JobResult:
    """Score one pile for one request; lower scores are better offers.

    score = w_dist * distance(request origin, pile) + w_wait * expected wait,
    with the wait term in virtual hours (queue_len / hourly service rate).
    """
    w_dist, w_wait = weights
    if w_dist < 0 or w_wait < 0 or (w_dist == 0 and w_wait == 0):
        raise ValueError("weights must be >= 0 and not both zero")
    if not pile.available:
        raise PileUnavailable(str(pile.node))
    dist = pile.location.distance_to(request.origin)
    score = w_dist * dist + w_wait * pile.expected_wait_hours
    if not math.isfinite(score):
        raise ValueError("score must be finite")
    return JobResult(
        request_id=request.request_id,
        responder=pile.node,
        score=score,
        payload=PileOffer(location=pile.location, expected_wait_ms=pile.expected_wait_ms),
    )


class FlowInstance:
    """A resident flow: translated instructions plus exactly-once intake.

    Events carry sequence numbers starting at 1.  ``offer`` drops anything
    at or below the cursor (already processed), buffers gaps, and processes
    contiguous runs in order, so every event is handled exactly once no
    matter the arrival order.
    """

    def __init__(self, flow_id: str, graph: DataflowGraph, home: NodeId,
                 operator_states: dict[str, int] | None = None, cursor: int = 0):
        self.flow_id = flow_id
        self.graph = graph
        self.home = home
        self.instructions = translate_flow(graph, check_placement=False)
        self.operator_states = (
            dict(operator_states)
            if operator_states is not None
            else {i.op_id: 0 for i in self.instructions}
        )
        self.cursor = cursor
        self.pending: dict[int, object] = {}
        self.processed_log: list[int] = []
        self.frozen = False

    def offer(self, seq: int, payload: object = None) -> list[int]:
        if self.frozen:
            raise RuntimeError(f"flow {self.flow_id} is frozen for migration")
        if seq <= self.cursor or seq in self.pending:
            return []
        self.pending[seq] = payload
        done: list[int] = []
        while (nxt := self.cursor + 1) in self.pending:
            self.pending.pop(nxt)
            for instr in self.instructions:
                self.operator_states[instr.op_id] += 1
            self.cursor = nxt
            self.processed_log.append(nxt)
            done.append(nxt)
        return done

    def snapshot(self) -> FlowState:
        return FlowState(
            flow_id=self.flow_id,
            operator_states=tuple(sorted(self.operator_states.items())),
            cursor=self.cursor,
            origin=self.home,
        )

    def take_pending(self) -> list[tuple[int, object]]:
        items = sorted(self.pending.items())
        self.pending.clear()
        return items

    @classmethod
    def restore(cls, state: FlowState, graph: DataflowGraph, home: NodeId) -> "FlowInstance":
        return cls(
            state.flow_id, graph, home,
            operator_states=state.states_map(), cursor=state.cursor,
        )


@dataclass
class _ForwardingStub:
    target: NodeId
    graph: DataflowGraph


class FogNode:
    """One charging pile: its state, resident flows, and migration hooks."""

    def __init__(self, pile: PileState, capacity: int = 64,
                 flow_template: DataflowGraph | None = None):
        if capacity <= 0:
            raise ValueError("capacity must be > 0")
        self.pile = pile
        self.capacity = capacity
        self.flow_template = flow_template or session_flow_template()
        self.flows: dict[str, FlowInstance] = {}
        self.forwarding: dict[str, _ForwardingStub] = {}
        self._reservations: set[str] = set()

    @property
    def node(self) -> NodeId:
        return self.pile.node

    def has_flow(self, flow_id: str) -> bool:
        return flow_id in self.flows

    def install_flow(self, instance: FlowInstance) -> None:
        instance.home = self.node
        self.flows[instance.flow_id] = instance
        self.forwarding.pop(instance.flow_id, None)

    def create_flow(self, flow_id: str, graph: DataflowGraph | None = None) -> FlowInstance:
        instance = FlowInstance(flow_id, graph or self.flow_template, self.node)
        self.install_flow(instance)
        return instance

    def offer_event(self, flow_id: str, seq: int, payload: object = None):
        """Feed one event; returns ('processed', seqs) or ('forward', target)."""
        if flow_id in self.flows and not self.flows[flow_id].frozen:
            return "processed", self.flows[flow_id].offer(seq, payload)
        if flow_id in self.flows and self.flows[flow_id].frozen:
            # Arrived mid-handshake: hold it with the other in-flight events.
            self.flows[flow_id].pending.setdefault(seq, payload)
            return "held", []
        if flow_id in self.forwarding:
            return "forward", self.forwarding[flow_id].target
        raise FlowNotResident(flow_id)

    def accept_migration(self, flow_id: str) -> bool:
        """Target-side admission: accept iff there is capacity headroom."""
        if self.pile.queue_len + len(self._reservations) >= self.capacity:
            return False
        self._reservations.add(flow_id)
        return True

    def release_flow(self, flow_id: str, forward_to: NodeId) -> list[tuple[int, object]]:
        """Drop the local instance, leaving a forwarding stub; returns leftovers."""
        if flow_id not in self.flows:
            raise FlowNotResident(flow_id)
        instance = self.flows.pop(flow_id)
        leftovers = instance.take_pending()
        self.forwarding[flow_id] = _ForwardingStub(forward_to, instance.graph)
        return leftovers

    def reinstall_flow(self, state: FlowState, graph: DataflowGraph,
                       pending: list[tuple[int, object]] = ()) -> FlowInstance:
        """Bring a released flow back after a late reject bounced its state."""
        self.forwarding.pop(state.flow_id, None)
        instance = FlowInstance.restore(state, graph, self.node)
        self.flows[state.flow_id] = instance
        for seq, payload in pending:
            instance.offer(seq, payload)
        return instance


def on_migration_start(host: FogNode, flow_id: str) -> FlowState:
    """Freeze the flow at the source and return its state snapshot."""
    if not host.has_flow(flow_id):
        raise FlowNotResident(flow_id)
    instance = host.flows[flow_id]
    instance.frozen = True
    return instance.snapshot()


def on_migration_end(host: FogNode, state: FlowState,
                     graph: DataflowGraph | None = None,
                     pending: list[tuple[int, object]] = ()) -> str:
    """Install a migrated flow at the target; raises CapacityExceeded late.

    A reservation taken at accept time is consumed here; without one the
    capacity check runs cold, which is how a late reject arises.
    """
    reserved = state.flow_id in host._reservations
    host._reservations.discard(state.flow_id)
    if host.pile.queue_len + len(host._reservations) >= host.capacity and not reserved:
        raise CapacityExceeded(
            f"{host.node}: queue {host.pile.queue_len} of {host.capacity}"
        )
    instance = FlowInstance.restore(state, graph or host.flow_template, host.node)
    host.install_flow(instance)
    for seq, payload in pending:
        instance.offer(seq, payload)
    return f"ack:{state.flow_id}"


@dataclass(frozen=True)
class MigrationOutcome:
    """Terminal result of one migration_source invocation."""

    kind: str  # not-needed | migrated | failed
    target: NodeId | None = None
    attempts: int = 0
    warned: bool = False


@dataclass(frozen=True)
class MigrationStep:
    """One instruction from the session to its driver (sync or message-based)."""

    kind: str  # not-needed | send-start | send-state | done | failed
    target: NodeId | None = None
    state: FlowState | None = None
    pending: tuple = ()
    outcome: MigrationOutcome | None = None


class MigrationSourceSession:
    """Source-side migration state machine, candidate by candidate.

    The driver calls ``begin`` once, then feeds responses and acks; each
    call returns the next step to execute.  The same machine serves the
    synchronous driver and the in-simulation message exchange.
    """

    def __init__(self, host: FogNode, flow_id: str, policy: MigrationPolicy):
        if not host.has_flow(flow_id):
            raise FlowNotResident(flow_id)
        if host.node in policy.candidates:
            raise ValueError("candidate group must not include the source")
        self.host = host
        self.flow_id = flow_id
        self.policy = policy
        self.remaining: list[NodeId] = list(policy.candidates)
        self.attempts = 0
        self.current: NodeId | None = None
        self.outcome: MigrationOutcome | None = None

    def begin(self, observed_latency_ms: float) -> MigrationStep:
        if observed_latency_ms < self.policy.t_upper:
            self.outcome = MigrationOutcome("not-needed")
            return MigrationStep("not-needed", outcome=self.outcome)
        return self._next_candidate()

    def _next_candidate(self) -> MigrationStep:
        if not self.remaining or self.attempts >= self.policy.attempt_bound():
            log.warning("can not migrate: flow %s at %s", self.flow_id, self.host.node)
            self.outcome = MigrationOutcome("failed", attempts=self.attempts, warned=True)
            return MigrationStep("failed", outcome=self.outcome)
        self.current = self.remaining.pop(0)
        self.attempts += 1
        return MigrationStep("send-start", target=self.current)

    def on_response(self, accept: bool) -> MigrationStep:
        if self.current is None:
            raise RuntimeError("no outstanding candidate")
        if not accept:
            return self._next_candidate()
        state = on_migration_start(self.host, self.flow_id)
        leftovers = self.host.release_flow(self.flow_id, forward_to=self.current)
        return MigrationStep(
            "send-state", target=self.current, state=state, pending=tuple(leftovers)
        )

    def on_ack(self, ok: bool, bounced_state: FlowState | None = None,
               bounced_pending: tuple = ()) -> MigrationStep:
        if ok:
            self.outcome = MigrationOutcome(
                "migrated", target=self.current, attempts=self.attempts
            )
            return MigrationStep("done", target=self.current, outcome=self.outcome)
        graph = self.host.forwarding[self.flow_id].graph
        self.host.reinstall_flow(bounced_state, graph, list(bounced_pending))
        return self._next_candidate()


def migration_source(
    host: FogNode,
    flow_id: str,
    observed_latency_ms: float,
    policy: MigrationPolicy,
    respond,
    deliver_state=None,
) -> MigrationOutcome:
    """Run the whole migration handshake synchronously.

    ``respond(candidate)`` answers the start-migration question; optional
    ``deliver_state(candidate, state, pending)`` performs the state hand-off
    and returns (ok, bounced_state, bounced_pending).  Without it the
    hand-off always succeeds.
    """
    session = MigrationSourceSession(host, flow_id, policy)
    step = session.begin(observed_latency_ms)
    while True:
        if step.kind in ("not-needed", "failed", "done"):
            return step.outcome
        if step.kind == "send-start":
            step = session.on_response(bool(respond(step.target)))
        elif step.kind == "send-state":
            if deliver_state is None:
                step = session.on_ack(True)
            else:
                ok, bounced, bounced_pending = deliver_state(
                    step.target, step.state, step.pending
                )
                step = session.on_ack(ok, bounced, bounced_pending)
        else:
            raise RuntimeError(f"unexpected step {step.kind}")


@dataclass(frozen=True)
class StartMigration:
    flow_id: str
    source: NodeId


@dataclass(frozen=True)
class MigrationResponse:
    flow_id: str
    responder: NodeId
    accept: bool


@dataclass(frozen=True)
class ObjectStateMsg:
    flow_id: str
    state: FlowState
    graph: DataflowGraph
    pending: tuple = ()


@dataclass(frozen=True)
class MigrationAck:
    flow_id: str
    responder: NodeId
    ok: bool
    bounced_state: FlowState | None = None
    bounced_pending: tuple = ()


@dataclass(frozen=True)
class FlowEventMsg:
    flow_id: str
    seq: int
