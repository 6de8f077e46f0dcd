"""Node identity, arena placement, and the status registry.

The arena is a circle (2000 m diameter by default).  Terminals and fog
nodes (charging piles) are placed uniformly at random inside it; each
fog node coordinator (FNC) sits at the centroid of its equal angular
sector; the cloud is a single logical node whose remoteness is modeled
as extra latency, not distance, so its coordinate is the arena center.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from .engine import RngStream, SimTime
from .errors import StaleReport


class Layer(enum.Enum):
    TERMINAL = "terminal"
    FOG = "fog"
    FNC = "fnc"
    CLOUD = "cloud"


@dataclass(frozen=True, order=True)
class NodeId:
    """Layer tag plus ordinal, e.g. ``fog-3``.  Totally ordered."""

    layer: str
    ordinal: int

    def __str__(self) -> str:
        return f"{self.layer}-{self.ordinal}"


def terminal_id(ordinal: int) -> NodeId:
    return NodeId(Layer.TERMINAL.value, ordinal)


def fog_id(ordinal: int) -> NodeId:
    return NodeId(Layer.FOG.value, ordinal)


def fnc_id(ordinal: int) -> NodeId:
    return NodeId(Layer.FNC.value, ordinal)


def cloud_id(ordinal: int = 0) -> NodeId:
    return NodeId(Layer.CLOUD.value, ordinal)


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class ResourceProfile:
    """Compute capacity, pending-job count, and drain rate of a node."""

    capacity: int
    queue_len: int = 0
    service_rate: float = 0.01  # jobs per virtual second

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be > 0")
        if self.queue_len < 0:
            raise ValueError("queue_len must be >= 0")
        if self.service_rate <= 0:
            raise ValueError("service_rate must be > 0")


@dataclass(frozen=True)
class NodeStatus:
    """One periodic report: who, where, and how loaded, at what time."""

    node: NodeId
    location: Point2D
    resources: ResourceProfile
    reported_at: SimTime


@dataclass(frozen=True)
class NodeRecord:
    """Static placement record produced by ``place_nodes``."""

    node: NodeId
    location: Point2D
    resources: ResourceProfile


class Registry:
    """Latest status per node, as one coordinator sees it.

    Entries are replaced only by strictly newer reports; an identical
    re-report is a no-op and an older one raises StaleReport.
    """

    def __init__(self, report_period: SimTime = 1000.0):
        self.report_period = report_period
        self._entries: dict[NodeId, NodeStatus] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, node: NodeId) -> bool:
        return node in self._entries

    def get(self, node: NodeId) -> NodeStatus | None:
        return self._entries.get(node)

    def entries(self) -> list[NodeStatus]:
        return sorted(self._entries.values(), key=lambda s: s.node)

    def snapshot(self) -> dict[NodeId, NodeStatus]:
        return dict(self._entries)


def report_status(registry: Registry, status: NodeStatus) -> Registry:
    """Fold one report into the registry (mutating it) and return it."""
    existing = registry._entries.get(status.node)
    if existing is not None:
        if status.reported_at < existing.reported_at:
            raise StaleReport(
                f"{status.node}: report at {status.reported_at} older than "
                f"stored {existing.reported_at}"
            )
        if status.reported_at == existing.reported_at:
            return registry
    registry._entries[status.node] = status
    return registry


def nodes_within(
    registry: Registry, center: Point2D, range_m: float, layer: Layer
) -> list[NodeId]:
    """Registered nodes of ``layer`` within ``range_m`` of ``center``.

    Sorted by ascending distance, ties broken by NodeId.
    """
    if range_m < 0:
        raise ValueError("range_m must be >= 0")
    hits = [
        (status.location.distance_to(center), status.node)
        for status in registry._entries.values()
        if status.node.layer == layer.value and status.location.distance_to(center) <= range_m
    ]
    hits.sort()
    return [node for _, node in hits]


def sector_index(point: Point2D, n_sectors: int) -> int:
    """Which equal angular sector (measured from +x, counterclockwise) holds the point."""
    if n_sectors <= 0:
        raise ValueError("n_sectors must be > 0")
    angle = math.atan2(point.y, point.x) % (2.0 * math.pi)
    return min(int(angle / (2.0 * math.pi / n_sectors)), n_sectors - 1)


def sector_centroid(k: int, n_sectors: int, radius: float) -> Point2D:
    """Centroid of the k-th of ``n_sectors`` equal sectors of the arena disk."""
    theta = 2.0 * math.pi / n_sectors
    d = 0.0 if n_sectors == 1 else (4.0 * radius / (3.0 * theta)) * math.sin(theta / 2.0)
    angle = (k + 0.5) * theta
    return Point2D(d * math.cos(angle), d * math.sin(angle))


def place_nodes(
    n_terminals: int,
    n_fog: int,
    n_fnc: int,
    arena_diameter_m: float,
    rng: RngStream,
    capacity: int = 64,
    service_rate: float = 0.01,
) -> list[NodeRecord]:
    """Place every node for a run; always includes exactly one cloud record.

    Terminals and fog nodes draw their positions from per-node child
    streams, so changing one count never moves other nodes.  FNCs sit at
    their sector centroids; the cloud sits at the center (its remoteness
    is extra latency, not geometry).
    """
    if min(n_terminals, n_fog, n_fnc) < 0:
        raise ValueError("node counts must be >= 0")
    if arena_diameter_m <= 0:
        raise ValueError("arena diameter must be > 0")
    radius = arena_diameter_m / 2.0
    records: list[NodeRecord] = []
    default_profile = ResourceProfile(capacity=capacity, service_rate=service_rate)
    for i in range(n_terminals):
        node = terminal_id(i)
        x, y = rng.child(str(node)).disk_point(0.0, 0.0, radius)
        records.append(NodeRecord(node, Point2D(x, y), default_profile))
    for i in range(n_fog):
        node = fog_id(i)
        x, y = rng.child(str(node)).disk_point(0.0, 0.0, radius)
        records.append(NodeRecord(node, Point2D(x, y), default_profile))
    for k in range(n_fnc):
        records.append(
            NodeRecord(fnc_id(k), sector_centroid(k, n_fnc, radius), default_profile)
        )
    records.append(NodeRecord(cloud_id(), Point2D(0.0, 0.0), default_profile))
    return records


def records_by_layer(records: Iterable[NodeRecord], layer: Layer) -> list[NodeRecord]:
    return [r for r in records if r.node.layer == layer.value]
