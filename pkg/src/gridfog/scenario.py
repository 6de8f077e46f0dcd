"""The EV charging scenario: mobility, request generation, both architectures.

Terminals are electric vehicles roaming a circular arena under a
random-waypoint model, issuing Poisson charging queries.  In traditional
mode an EV broadcasts to every pile in range over the shared wireless
channel and picks the best direct reply.  In coordinated mode it sends one
message to its sector's FNC, which filters candidates from its registry,
dispatches jobs over the backhaul, aggregates scores, and answers with a
decision.  All wireless transmissions serialize on one shared channel, so
broadcast fan-out and cross-traffic cost airtime; backhaul links do not
contend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .coordinator import PendingRequest, aggregate, dispatch, filter_candidates
from .engine import EventQueue, LatencyModel, RngStream, SimTime, link_latency
from .errors import CapacityExceeded, NoEligibleNodes
from .fognode import (
    DataflowGraph,
    FogNode,
    MigrationAck,
    MigrationPolicy,
    MigrationSourceSession,
    ObjectStateMsg,
    PileState,
    StartMigration,
    MigrationResponse,
    evaluate_charging_request,
    on_migration_end,
    session_flow_template,
)
from .messages import (
    Decision,
    FailureNotice,
    JobDispatch,
    JobResult,
    LatencyComplaint,
    ServiceRequest,
    StatusReportMsg,
)
from .metrics import MetricsRow, MetricsTable, percentile_nearest_rank
from .topology import (
    Layer,
    NodeId,
    NodeRecord,
    NodeStatus,
    Point2D,
    Registry,
    ResourceProfile,
    cloud_id,
    fnc_id,
    place_nodes,
    report_status,
    sector_index,
)

ARCHITECTURES = ("traditional", "coordinated")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a single run needs; field names double as config keys."""

    n_terminals: int = 20
    n_fog: int = 10
    n_fnc: int = 2
    arena_diameter_m: float = 2000.0
    query_range_m: float = 1000.0
    request_rate: float = 4.0  # requests per terminal per virtual minute
    sim_duration_ms: float = 30_000.0
    architecture: str = "coordinated"
    seed: int = 1
    wireless_base_ms: float = 2.0
    wireless_prop_ms_per_m: float = 0.05
    wireless_air_ms: float = 4.0
    backhaul_base_ms: float = 1.0
    backhaul_prop_ms_per_m: float = 0.002
    proc_ms_per_unit: float = 1.0
    compute_ms: float = 280.0
    fnc_service_ms: float = 1.0
    aggregation_timeout_ms: float = 500.0
    report_period_ms: float = 1000.0
    mobility_speed_mps: float = 15.0
    mobility_step_ms: float = 500.0
    capacity: int = 64
    service_rate_per_hour: float = 30.0
    w_dist: float = 1.0
    w_wait: float = 600.0
    t_upper_ms: float = 650.0
    ewma_alpha: float = 0.5
    max_migration_attempts: int = 0  # 0 means try the whole candidate group
    cloud_extra_ms: float = 50.0

    def __post_init__(self):
        if min(self.n_terminals, self.n_fog, self.n_fnc) < 0:
            raise ValueError("node counts must be >= 0")
        if self.sim_duration_ms <= 0:
            raise ValueError("sim_duration_ms must be > 0")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}")
        if self.query_range_m <= 0:
            raise ValueError("query_range_m must be > 0")
        if self.request_rate < 0:
            raise ValueError("request_rate must be >= 0")
        if self.arena_diameter_m <= 0:
            raise ValueError("arena_diameter_m must be > 0")
        if self.capacity <= 0:
            raise ValueError("capacity must be > 0")
        if not 0 < self.ewma_alpha <= 1:
            raise ValueError("ewma_alpha must be in (0, 1]")
        if self.service_rate_per_hour <= 0:
            raise ValueError("service_rate_per_hour must be > 0")
        if self.aggregation_timeout_ms <= 0:
            raise ValueError("aggregation_timeout_ms must be > 0")
        if self.report_period_ms <= 0 or self.mobility_step_ms <= 0:
            raise ValueError("periods must be > 0")
        if self.architecture == "coordinated" and self.n_fnc < 1:
            raise ValueError("coordinated mode needs at least 1 FNC")

    @property
    def weights(self) -> tuple[float, float]:
        return (self.w_dist, self.w_wait)


@dataclass
class MobilityState:
    position: Point2D
    velocity: tuple[float, float]
    waypoint: Point2D


def step_mobility(
    state: MobilityState,
    dt: SimTime,
    draw_waypoint=None,
    speed: float | None = None,
) -> MobilityState:
    """Advance one mobility step; redraw the waypoint on arrival.

    With no ``draw_waypoint`` the walker stops at its waypoint.  ``speed``
    defaults to the current speed when re-aiming at a fresh waypoint.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    vx, vy = state.velocity
    v = math.hypot(vx, vy)
    if v == 0.0:
        return state
    step_len = v * dt / 1000.0
    remaining = state.position.distance_to(state.waypoint)
    if step_len < remaining:
        frac = step_len / remaining
        nxt = Point2D(
            state.position.x + (state.waypoint.x - state.position.x) * frac,
            state.position.y + (state.waypoint.y - state.position.y) * frac,
        )
        return MobilityState(nxt, state.velocity, state.waypoint)
    arrived = state.waypoint
    if draw_waypoint is None:
        return MobilityState(arrived, (0.0, 0.0), arrived)
    target = draw_waypoint()
    dist = arrived.distance_to(target)
    pace = v if speed is None else speed
    if dist == 0.0:
        return MobilityState(arrived, (0.0, 0.0), target)
    vel = (pace * (target.x - arrived.x) / dist, pace * (target.y - arrived.y) / dist)
    return MobilityState(arrived, vel, target)


@dataclass
class RequestOutcome:
    """What became of one charging query, as seen by its terminal."""

    request_id: str
    terminal: NodeId
    issued_at: SimTime
    decided_at: SimTime | None = None
    latency_ms: float | None = None
    chosen: NodeId | None = None
    messages_used: int = 0
    failure: str | None = None

    @property
    def completed(self) -> bool:
        return self.decided_at is not None


@dataclass(frozen=True)
class MigrationAudit:
    """One line of the migration log: who moved where and why."""

    flow_id: str
    source: NodeId
    target: NodeId | None
    attempts: int
    outcome: str
    trigger_latency_ms: float
    t_upper_ms: float
    warned: bool


@dataclass(frozen=True)
class SendTrace:
    """Debug record of one transmitted message."""

    sent_at: SimTime
    arrives_at: SimTime
    medium: str  # wireless | backhaul
    src: NodeId
    dst: NodeId
    distance_m: float
    receiver_load: float
    kind: str
    request_id: str | None


@dataclass
class _WirelessChannel:
    """Single shared medium: transmissions serialize, airtime is exclusive."""

    air_ms: float
    free_at: SimTime = 0.0

    def acquire(self, now: SimTime) -> SimTime:
        departure = max(now, self.free_at)
        self.free_at = departure + self.air_ms
        return departure


@dataclass
class _Terminal:
    node: NodeId
    mobility: MobilityState
    serving_pile: NodeId | None = None
    flow_id: str | None = None
    ewma_ms: float | None = None
    migration_active: bool = False
    windows: dict = field(default_factory=dict)


@dataclass
class _ReplyWindow:
    issued_at: SimTime
    results: list[JobResult] = field(default_factory=list)
    last_arrival: SimTime | None = None
    closed: bool = False


@dataclass
class _Fnc:
    node: NodeId
    location: Point2D
    registry: Registry
    pending: dict = field(default_factory=dict)


# Internal tick payloads.
@dataclass(frozen=True)
class _RequestTick:
    terminal: NodeId


@dataclass(frozen=True)
class _MobilityTick:
    terminal: NodeId


@dataclass(frozen=True)
class _ReportTick:
    pile: NodeId


@dataclass(frozen=True)
class _DrainTick:
    pile: NodeId


@dataclass(frozen=True)
class _ComputeDone:
    request: ServiceRequest
    pile: NodeId
    reply_to: NodeId
    wired_reply: bool


@dataclass(frozen=True)
class _FncProcess:
    request: ServiceRequest


@dataclass(frozen=True)
class _AggTimeout:
    request_id: str


@dataclass(frozen=True)
class _WindowClose:
    request_id: str


class Simulation:
    """One fully built scenario run; construct, ``run()``, then read results."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.rng = RngStream(config.seed)
        self.queue = EventQueue()
        self.channel = _WirelessChannel(config.wireless_air_ms)
        self.wireless = LatencyModel(
            config.wireless_base_ms, config.wireless_prop_ms_per_m, config.proc_ms_per_unit
        )
        self.backhaul = LatencyModel(
            config.backhaul_base_ms, config.backhaul_prop_ms_per_m, config.proc_ms_per_unit
        )
        self.records: list[NodeRecord] = place_nodes(
            config.n_terminals,
            config.n_fog,
            config.n_fnc,
            config.arena_diameter_m,
            self.rng,
            capacity=config.capacity,
            service_rate=config.service_rate_per_hour / 3600.0,
        )
        self.static_location: dict[NodeId, Point2D] = {
            r.node: r.location for r in self.records
        }
        self.outcomes: list[RequestOutcome] = []
        self.audits: list[MigrationAudit] = []
        self.trace: list[SendTrace] = []
        self.messages_total = 0
        self._msg_counts: dict[str, RequestOutcome] = {}
        self._active_migrations: dict[str, tuple[MigrationSourceSession, NodeId, float]] = {}
        self._flow_terminal: dict[str, NodeId] = {}
        self._request_seq: dict[NodeId, int] = {}
        self._requests_by_id: dict[str, ServiceRequest] = {}
        self._request_fnc: dict[str, NodeId] = {}

        self.piles: dict[NodeId, FogNode] = {}
        for rec in self.records:
            if rec.node.layer == Layer.FOG.value:
                pile = PileState(
                    rec.node, rec.location, queue_len=0,
                    service_rate=config.service_rate_per_hour,
                )
                self.piles[rec.node] = FogNode(
                    pile, capacity=config.capacity, flow_template=session_flow_template()
                )

        self.fncs: dict[NodeId, _Fnc] = {}
        for rec in self.records:
            if rec.node.layer == Layer.FNC.value:
                self.fncs[rec.node] = _Fnc(
                    rec.node, rec.location, Registry(config.report_period_ms)
                )
        for fnc in self.fncs.values():
            for host in self.piles.values():
                report_status(fnc.registry, self._status_of(host, 0.0))

        self.terminals: dict[NodeId, _Terminal] = {}
        self._drawers: dict[NodeId, object] = {}
        for rec in self.records:
            if rec.node.layer == Layer.TERMINAL.value:
                draw = self._drawers.setdefault(rec.node, self._waypoint_drawer(rec.node))
                start = rec.location
                waypoint = draw()
                dist = start.distance_to(waypoint)
                speed = config.mobility_speed_mps
                vel = (
                    (0.0, 0.0)
                    if dist == 0
                    else (
                        speed * (waypoint.x - start.x) / dist,
                        speed * (waypoint.y - start.y) / dist,
                    )
                )
                self.terminals[rec.node] = _Terminal(
                    rec.node, MobilityState(start, vel, waypoint)
                )

        if config.architecture == "coordinated":
            for term in self.terminals.values():
                nearest = self._nearest_pile(self.terminals[term.node].mobility.position)
                if nearest is None:
                    continue
                flow_id = f"flow-{term.node}"
                self.piles[nearest].create_flow(flow_id)
                term.serving_pile = nearest
                term.flow_id = flow_id
                self._flow_terminal[flow_id] = term.node

        self._schedule_initial_events()
        self._ran = False

    # ------------------------------------------------------------- build
    def _waypoint_drawer(self, node: NodeId):
        stream = self.rng.child(f"waypoint/{node}")
        radius = self.config.arena_diameter_m / 2.0

        def draw() -> Point2D:
            x, y = stream.disk_point(0.0, 0.0, radius)
            return Point2D(x, y)

        return draw

    def _nearest_pile(self, point: Point2D) -> NodeId | None:
        if not self.piles:
            return None
        return min(
            self.piles,
            key=lambda n: (self.static_location[n].distance_to(point), n),
        )

    def _status_of(self, host: FogNode, at: SimTime) -> NodeStatus:
        return NodeStatus(
            host.node,
            host.pile.location,
            ResourceProfile(
                capacity=host.capacity,
                queue_len=host.pile.queue_len,
                service_rate=self.config.service_rate_per_hour / 3600.0,
            ),
            at,
        )

    def _schedule_initial_events(self):
        cfg = self.config
        for node in self.terminals:
            arrivals = self.rng.child(f"arrivals/{node}")
            if cfg.request_rate > 0:
                mean_gap = 60_000.0 / cfg.request_rate
                t = arrivals.exponential(mean_gap)
                while t < cfg.sim_duration_ms:
                    self.queue.schedule(t, node, _RequestTick(node))
                    t += arrivals.exponential(mean_gap)
            if cfg.mobility_step_ms <= cfg.sim_duration_ms:
                self.queue.schedule(cfg.mobility_step_ms, node, _MobilityTick(node))
        if cfg.architecture == "coordinated" and self.fncs:
            for node in self.piles:
                if cfg.report_period_ms <= cfg.sim_duration_ms:
                    self.queue.schedule(cfg.report_period_ms, node, _ReportTick(node))
        drain_gap = 3_600_000.0 / cfg.service_rate_per_hour
        for node in self.piles:
            if drain_gap <= cfg.sim_duration_ms:
                self.queue.schedule(drain_gap, node, _DrainTick(node))

    # ---------------------------------------------------------- plumbing
    def position_of(self, node: NodeId) -> Point2D:
        if node in self.terminals:
            return self.terminals[node].mobility.position
        return self.static_location[node]

    def _receiver_load(self, node: NodeId) -> float:
        if node in self.piles:
            return float(self.piles[node].pile.queue_len)
        return 0.0

    def _count_msg(self, request_id: str | None):
        self.messages_total += 1
        if request_id is not None and request_id in self._msg_counts:
            self._msg_counts[request_id].messages_used += 1

    def send_wireless(self, src: NodeId, dst: NodeId, payload, request_id=None) -> SimTime:
        now = self.queue.clock
        departure = self.channel.acquire(now)
        src_p, dst_p = self.position_of(src), self.position_of(dst)
        load = self._receiver_load(dst)
        arrival = departure + self.channel.air_ms + link_latency(
            self.wireless, src_p, dst_p, load
        )
        self.queue.schedule(arrival, dst, payload)
        self._count_msg(request_id)
        self.trace.append(
            SendTrace(now, arrival, "wireless", src, dst,
                      src_p.distance_to(dst_p), load, type(payload).__name__, request_id)
        )
        return arrival

    def send_wired(self, src: NodeId, dst: NodeId, payload, request_id=None) -> SimTime:
        now = self.queue.clock
        src_p, dst_p = self.position_of(src), self.position_of(dst)
        load = self._receiver_load(dst)
        extra = self.config.cloud_extra_ms if cloud_id().layer in (src.layer, dst.layer) else 0.0
        arrival = now + link_latency(self.backhaul, src_p, dst_p, load) + extra
        self.queue.schedule(arrival, dst, payload)
        self._count_msg(request_id)
        self.trace.append(
            SendTrace(now, arrival, "backhaul", src, dst,
                      src_p.distance_to(dst_p), load, type(payload).__name__, request_id)
        )
        return arrival

    # ------------------------------------------------------------ events
    def run(self) -> "Simulation":
        if self._ran:
            return self
        cfg = self.config
        horizon = cfg.sim_duration_ms + 2 * cfg.aggregation_timeout_ms + 10_000.0
        self.queue.run_until(horizon, self._handle)
        self._ran = True
        return self

    def _handle(self, event):
        payload = event.payload
        if isinstance(payload, _RequestTick):
            self._issue_request(payload.terminal)
        elif isinstance(payload, _MobilityTick):
            self._step_terminal(payload.terminal)
        elif isinstance(payload, _ReportTick):
            self._report_pile(payload.pile)
        elif isinstance(payload, _DrainTick):
            self._drain_pile(payload.pile)
        elif isinstance(payload, ServiceRequest):
            if event.target in self.fncs:
                self.queue.schedule_in(
                    self.config.fnc_service_ms, event.target, _FncProcess(payload)
                )
            else:
                self._broadcast_at_pile(event.target, payload)
        elif isinstance(payload, _FncProcess):
            self._fnc_process(event.target, payload.request)
        elif isinstance(payload, JobDispatch):
            self._dispatch_at_pile(event.target, payload)
        elif isinstance(payload, _ComputeDone):
            self._compute_done(payload)
        elif isinstance(payload, JobResult):
            if event.target in self.fncs:
                self._result_at_fnc(event.target, payload)
            else:
                self._reply_at_terminal(event.target, payload)
        elif isinstance(payload, _AggTimeout):
            self._agg_timeout(event.target, payload.request_id)
        elif isinstance(payload, _WindowClose):
            self._window_close(event.target, payload.request_id)
        elif isinstance(payload, Decision):
            self._decision_at_terminal(event.target, payload)
        elif isinstance(payload, FailureNotice):
            self._failure_at_terminal(event.target, payload)
        elif isinstance(payload, StatusReportMsg):
            report_status(self.fncs[event.target].registry, payload.status)
        elif isinstance(payload, LatencyComplaint):
            self._complaint_at_pile(event.target, payload)
        elif isinstance(payload, StartMigration):
            self._start_migration_at_target(event.target, payload)
        elif isinstance(payload, MigrationResponse):
            self._migration_response_at_source(event.target, payload)
        elif isinstance(payload, ObjectStateMsg):
            self._object_state_at_target(event.target, payload)
        elif isinstance(payload, MigrationAck):
            self._migration_ack_at_source(event.target, payload)
        else:
            raise TypeError(f"unhandled payload {type(payload).__name__}")

    # ------------------------------------------------------ periodic work
    def _step_terminal(self, node: NodeId):
        term = self.terminals[node]
        cfg = self.config
        term.mobility = step_mobility(
            term.mobility,
            cfg.mobility_step_ms,
            draw_waypoint=self._drawers[node],
            speed=cfg.mobility_speed_mps,
        )
        nxt = self.queue.clock + cfg.mobility_step_ms
        if nxt <= cfg.sim_duration_ms:
            self.queue.schedule(nxt, node, _MobilityTick(node))

    def _report_pile(self, node: NodeId):
        host = self.piles[node]
        status = self._status_of(host, self.queue.clock)
        for fnc in self.fncs.values():
            self.send_wired(node, fnc.node, StatusReportMsg(status))
        nxt = self.queue.clock + self.config.report_period_ms
        if nxt <= self.config.sim_duration_ms:
            self.queue.schedule(nxt, node, _ReportTick(node))

    def _drain_pile(self, node: NodeId):
        host = self.piles[node]
        if host.pile.queue_len > 0:
            host.pile.queue_len -= 1
        nxt = self.queue.clock + 3_600_000.0 / self.config.service_rate_per_hour
        if nxt <= self.config.sim_duration_ms:
            self.queue.schedule(nxt, node, _DrainTick(node))

    # --------------------------------------------------------- requesting
    def _issue_request(self, node: NodeId):
        cfg = self.config
        term = self.terminals[node]
        seq = self._request_seq.get(node, 0)
        self._request_seq[node] = seq + 1
        request = ServiceRequest(
            request_id=f"{node}/r{seq}",
            requester=node,
            origin=term.mobility.position,
            kind="charging-query",
            query_range_m=cfg.query_range_m,
            issued_at=self.queue.clock,
        )
        outcome = RequestOutcome(request.request_id, node, self.queue.clock)
        self.outcomes.append(outcome)
        self._msg_counts[request.request_id] = outcome
        self._requests_by_id[request.request_id] = request
        if cfg.architecture == "coordinated":
            k = sector_index(term.mobility.position, cfg.n_fnc)
            self.send_wireless(node, fnc_id(k), request, request.request_id)
        else:
            in_range = sorted(
                (self.static_location[p].distance_to(request.origin), p)
                for p in self.piles
                if self.static_location[p].distance_to(request.origin)
                <= cfg.query_range_m
            )
            term.windows[request.request_id] = _ReplyWindow(issued_at=self.queue.clock)
            for _, pile in in_range:
                self.send_wireless(node, pile, request, request.request_id)
            self.queue.schedule_in(
                cfg.aggregation_timeout_ms, node, _WindowClose(request.request_id)
            )

    # ------------------------------------------------------- coordinated
    def _fnc_process(self, fnc_node: NodeId, request: ServiceRequest):
        fnc = self.fncs[fnc_node]
        self._request_fnc[request.request_id] = fnc_node
        try:
            candidates = filter_candidates(fnc.registry, request)
        except NoEligibleNodes:
            self.send_wireless(
                fnc_node, request.requester,
                FailureNotice(request.request_id, "no-eligible-nodes"),
                request.request_id,
            )
            return
        fnc.pending[request.request_id] = PendingRequest(request, candidates)
        for job in dispatch(request, candidates, self.queue.clock):
            self.send_wired(fnc_node, job.assignee, job, request.request_id)
        self.queue.schedule_in(
            self.config.aggregation_timeout_ms, fnc_node, _AggTimeout(request.request_id)
        )

    def _dispatch_at_pile(self, pile_node: NodeId, job: JobDispatch):
        request = self._requests_by_id[job.request_id]
        fnc_node = self._request_fnc[job.request_id]
        self.queue.schedule_in(
            self.config.compute_ms, pile_node,
            _ComputeDone(request, pile_node, fnc_node, wired_reply=True),
        )

    def _compute_done(self, done: _ComputeDone):
        host = self.piles[done.pile]
        result = evaluate_charging_request(done.request, host.pile, self.config.weights)
        if done.wired_reply:
            self.send_wired(done.pile, done.reply_to, result, done.request.request_id)
        else:
            self.send_wireless(done.pile, done.reply_to, result, done.request.request_id)

    def _result_at_fnc(self, fnc_node: NodeId, result: JobResult):
        fnc = self.fncs[fnc_node]
        pending = fnc.pending.get(result.request_id)
        if pending is None:
            return  # arrived after the aggregation window closed
        pending.record(result)
        if pending.complete():
            self._decide(fnc, pending)

    def _agg_timeout(self, fnc_node: NodeId, request_id: str):
        fnc = self.fncs[fnc_node]
        pending = fnc.pending.get(request_id)
        if pending is None:
            return
        if pending.results:
            self._decide(fnc, pending)
        else:
            del fnc.pending[request_id]
            self.send_wireless(
                fnc.node, pending.request.requester,
                FailureNotice(request_id, "aggregation-timeout"), request_id,
            )

    def _decide(self, fnc: _Fnc, pending: PendingRequest):
        decision = aggregate(
            pending.request.request_id, pending.results, self.queue.clock
        )
        del fnc.pending[pending.request.request_id]
        self.send_wireless(
            fnc.node, pending.request.requester, decision, pending.request.request_id
        )

    def _decision_at_terminal(self, node: NodeId, decision: Decision):
        outcome = self._msg_counts[decision.request_id]
        outcome.decided_at = self.queue.clock
        outcome.latency_ms = self.queue.clock - outcome.issued_at
        outcome.chosen = decision.chosen
        self.piles[decision.chosen].pile.queue_len += 1
        self._after_completion(node, outcome)

    def _failure_at_terminal(self, node: NodeId, notice: FailureNotice):
        outcome = self._msg_counts[notice.request_id]
        outcome.failure = notice.reason

    # ------------------------------------------------------- traditional
    def _broadcast_at_pile(self, pile_node: NodeId, request: ServiceRequest):
        host = self.piles[pile_node]
        if not host.pile.available or host.pile.queue_len >= host.capacity:
            return
        self.queue.schedule_in(
            self.config.compute_ms, pile_node,
            _ComputeDone(request, pile_node, request.requester, wired_reply=False),
        )

    def _reply_at_terminal(self, node: NodeId, result: JobResult):
        window = self.terminals[node].windows.get(result.request_id)
        if window is None or window.closed:
            return
        window.results.append(result)
        window.last_arrival = self.queue.clock

    def _window_close(self, node: NodeId, request_id: str):
        term = self.terminals[node]
        window = term.windows[request_id]
        window.closed = True
        outcome = self._msg_counts[request_id]
        if window.results:
            decision = aggregate(request_id, window.results, window.last_arrival)
            outcome.decided_at = window.last_arrival
            outcome.latency_ms = window.last_arrival - outcome.issued_at
            outcome.chosen = decision.chosen
            self.piles[decision.chosen].pile.queue_len += 1
        else:
            outcome.failure = "request-timed-out"

    # --------------------------------------------------------- migration
    def _after_completion(self, node: NodeId, outcome: RequestOutcome):
        cfg = self.config
        if cfg.architecture != "coordinated":
            return
        term = self.terminals[node]
        if term.flow_id is None:
            return
        alpha = cfg.ewma_alpha
        term.ewma_ms = (
            outcome.latency_ms
            if term.ewma_ms is None
            else alpha * outcome.latency_ms + (1 - alpha) * term.ewma_ms
        )
        if (
            term.ewma_ms > cfg.t_upper_ms
            and not term.migration_active
            and term.serving_pile is not None
        ):
            term.migration_active = True
            self.send_wireless(
                node, term.serving_pile,
                LatencyComplaint(
                    term.flow_id, node, term.mobility.position, term.ewma_ms
                ),
            )

    def _candidate_group(self, source: NodeId, origin: Point2D) -> tuple[NodeId, ...]:
        registry = self.fncs[fnc_id(0)].registry
        scored = []
        for status in registry.entries():
            if status.node.layer != Layer.FOG.value or status.node == source:
                continue
            if status.resources.queue_len >= status.resources.capacity:
                continue
            predicted = link_latency(self.wireless, status.location, origin, 0.0)
            scored.append((predicted, status.node))
        scored.sort()
        return tuple(node for _, node in scored)

    def _complaint_at_pile(self, pile_node: NodeId, complaint: LatencyComplaint):
        host = self.piles[pile_node]
        term = self.terminals[complaint.terminal]
        if not host.has_flow(complaint.flow_id) or complaint.flow_id in self._active_migrations:
            term.migration_active = False
            return
        cfg = self.config
        policy = MigrationPolicy(
            t_upper=cfg.t_upper_ms,
            candidates=self._candidate_group(pile_node, complaint.origin),
            max_attempts=cfg.max_migration_attempts or None,
        )
        session = MigrationSourceSession(host, complaint.flow_id, policy)
        self._active_migrations[complaint.flow_id] = (
            session, complaint.terminal, complaint.observed_latency_ms
        )
        self._run_migration_step(complaint.flow_id, session.begin(complaint.observed_latency_ms))

    def _run_migration_step(self, flow_id: str, step):
        session, terminal, trigger = self._active_migrations[flow_id]
        if step.kind == "send-start":
            self.send_wired(
                session.host.node, step.target, StartMigration(flow_id, session.host.node)
            )
        elif step.kind == "send-state":
            self.send_wired(
                session.host.node, step.target,
                ObjectStateMsg(flow_id, step.state, session.host.forwarding[flow_id].graph,
                               step.pending),
            )
        elif step.kind in ("done", "failed", "not-needed"):
            outcome = step.outcome
            self.audits.append(
                MigrationAudit(
                    flow_id=flow_id,
                    source=session.host.node,
                    target=outcome.target,
                    attempts=outcome.attempts,
                    outcome=outcome.kind,
                    trigger_latency_ms=trigger,
                    t_upper_ms=self.config.t_upper_ms,
                    warned=outcome.warned,
                )
            )
            term = self.terminals[terminal]
            term.migration_active = False
            if outcome.kind == "migrated":
                term.serving_pile = outcome.target
                term.ewma_ms = None
            del self._active_migrations[flow_id]

    def _start_migration_at_target(self, target: NodeId, msg: StartMigration):
        accept = self.piles[target].accept_migration(msg.flow_id)
        self.send_wired(target, msg.source, MigrationResponse(msg.flow_id, target, accept))

    def _migration_response_at_source(self, source: NodeId, msg: MigrationResponse):
        entry = self._active_migrations.get(msg.flow_id)
        if entry is None:
            return
        session = entry[0]
        self._run_migration_step(msg.flow_id, session.on_response(msg.accept))

    def _object_state_at_target(self, target: NodeId, msg: ObjectStateMsg):
        host = self.piles[target]
        try:
            on_migration_end(host, msg.state, msg.graph, list(msg.pending))
            ack = MigrationAck(msg.flow_id, target, ok=True)
        except CapacityExceeded:
            ack = MigrationAck(
                msg.flow_id, target, ok=False,
                bounced_state=msg.state, bounced_pending=msg.pending,
            )
        self.send_wired(target, msg.state.origin, ack)

    def _migration_ack_at_source(self, source: NodeId, msg: MigrationAck):
        entry = self._active_migrations.get(msg.flow_id)
        if entry is None:
            return
        session = entry[0]
        self._run_migration_step(
            msg.flow_id, session.on_ack(msg.ok, msg.bounced_state, msg.bounced_pending)
        )

    # ------------------------------------------------------------ results
    def summary_row(self, run_id: str = "", swept_variable: str = "",
                    swept_value: float | None = None) -> MetricsRow:
        latencies = [o.latency_ms for o in self.outcomes if o.completed]
        completed = len(latencies)
        issued = len(self.outcomes)
        migrations = sum(1 for a in self.audits if a.outcome == "migrated")
        return MetricsRow(
            run_id=run_id or f"single-{self.config.seed}-{self.config.architecture}",
            architecture=self.config.architecture,
            swept_variable=swept_variable,
            swept_value=swept_value,
            seed=self.config.seed,
            mean_latency_ms=(sum(latencies) / completed) if completed else None,
            p95_latency_ms=percentile_nearest_rank(latencies, 95.0) if completed else None,
            completed=completed,
            timed_out=issued - completed,
            messages_total=self.messages_total,
            migrations=migrations,
        )


def run_scenario(config: ScenarioConfig) -> Simulation:
    return Simulation(config).run()


def run_traditional(config: ScenarioConfig) -> MetricsTable:
    """Run one traditional-mode simulation and return its one-row table."""
    sim = run_scenario(replace(config, architecture="traditional"))
    table = MetricsTable()
    table.append(sim.summary_row())
    return table


def run_coordinated(config: ScenarioConfig) -> MetricsTable:
    """Run one coordinated-mode simulation and return its one-row table."""
    sim = run_scenario(replace(config, architecture="coordinated"))
    table = MetricsTable()
    table.append(sim.summary_row())
    return table
