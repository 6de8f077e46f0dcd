"""Candidate filtering, dispatch, aggregation, and app deployment."""

import random

import pytest

from gridfog.coordinator import (
    ApplicationImage,
    PendingRequest,
    aggregate,
    deploy_application,
    dispatch,
    filter_candidates,
)
from gridfog.engine import RngStream
from gridfog.errors import EmptyResultSet, NoEligibleNodes
from gridfog.fognode import session_flow_template
from gridfog.messages import JobResult, PileOffer, ServiceRequest
from gridfog.topology import (
    Layer,
    NodeStatus,
    Point2D,
    Registry,
    ResourceProfile,
    fog_id,
    place_nodes,
    report_status,
    terminal_id,
)


def request_at(x, y, range_m=500.0, request_id="r1"):
    return ServiceRequest(
        request_id=request_id,
        requester=terminal_id(0),
        origin=Point2D(x, y),
        kind="charging-query",
        query_range_m=range_m,
        issued_at=0.0,
    )


def register_pile(reg, ordinal, x, y, queue_len=0, capacity=64, t=0.0):
    report_status(
        reg,
        NodeStatus(
            fog_id(ordinal),
            Point2D(x, y),
            ResourceProfile(capacity=capacity, queue_len=queue_len),
            t,
        ),
    )


def offer():
    return PileOffer(Point2D(0, 0), 0.0)


def test_deploy_covers_target_layer():
    records = place_nodes(0, 10, 0, 2000.0, RngStream(1))
    image = ApplicationImage("charge", session_flow_template(), Layer.FOG)
    placement = deploy_application(image, records)
    assert len(placement) == 10
    assert all(node.layer == "fog" for node in placement)


def test_deploy_without_matches_is_empty():
    records = place_nodes(5, 0, 0, 2000.0, RngStream(1))
    image = ApplicationImage("charge", session_flow_template(), Layer.FOG)
    assert deploy_application(image, records) == {}


def test_deploy_idempotent():
    records = place_nodes(0, 6, 2, 2000.0, RngStream(2))
    image = ApplicationImage("charge", session_flow_template(), Layer.FOG)
    assert deploy_application(image, records) == deploy_application(image, records)


def test_single_nearby_pile_is_candidate():
    reg = Registry()
    register_pile(reg, 0, 100.0, 0.0)
    assert filter_candidates(reg, request_at(0, 0, 500.0)) == [fog_id(0)]


def test_out_of_range_piles_raise():
    reg = Registry()
    register_pile(reg, 0, 900.0, 0.0)
    register_pile(reg, 1, 0.0, -800.0)
    with pytest.raises(NoEligibleNodes):
        filter_candidates(reg, request_at(0, 0, 500.0))


def test_congested_piles_excluded():
    reg = Registry()
    register_pile(reg, 0, 100.0, 0.0, queue_len=64, capacity=64)
    register_pile(reg, 1, 200.0, 0.0, queue_len=63, capacity=64)
    assert filter_candidates(reg, request_at(0, 0, 500.0)) == [fog_id(1)]


def test_candidates_match_brute_force():
    rng = random.Random(11)
    reg = Registry()
    placed = {}
    for i in range(10):
        x, y = rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)
        queue = rng.choice([0, 2, 64])
        placed[fog_id(i)] = (x, y, queue)
        register_pile(reg, i, x, y, queue_len=queue)
    req = request_at(50.0, -20.0, 700.0)
    expected = sorted(
        (Point2D(x, y).distance_to(req.origin), node)
        for node, (x, y, queue) in placed.items()
        if queue < 64 and Point2D(x, y).distance_to(req.origin) <= 700.0
    )
    assert filter_candidates(reg, req) == [n for _, n in expected]


def test_candidate_monotonicity_in_range():
    rng = random.Random(13)
    reg = Registry()
    for i in range(12):
        register_pile(reg, i, rng.uniform(-1000, 1000), rng.uniform(-1000, 1000))
    for _ in range(20):
        r1 = rng.uniform(100, 1500)
        r2 = r1 + rng.uniform(0, 500)
        try:
            small = set(filter_candidates(reg, request_at(0, 0, r1)))
        except NoEligibleNodes:
            small = set()
        large = set(filter_candidates(reg, request_at(0, 0, r2)))
        assert small <= large


def test_dispatch_one_per_candidate():
    req = request_at(0, 0)
    candidates = [fog_id(i) for i in range(4)]
    jobs = dispatch(req, candidates, clock=12.0)
    assert len(jobs) == 4
    assert {j.assignee for j in jobs} == set(candidates)
    assert all(j.dispatched_at == 12.0 and j.request_id == "r1" for j in jobs)


def test_dispatch_single_candidate():
    jobs = dispatch(request_at(0, 0), [fog_id(3)], clock=0.0)
    assert len(jobs) == 1


def test_dispatch_requires_candidates():
    with pytest.raises(NoEligibleNodes):
        dispatch(request_at(0, 0), [], clock=0.0)


def test_aggregate_single_result():
    d = aggregate("r1", [JobResult("r1", fog_id(2), 5.0, offer())], clock=30.0)
    assert d.chosen == fog_id(2)
    assert d.decided_at == 30.0


def test_aggregate_tie_breaks_by_ordinal():
    results = [
        JobResult("r1", fog_id(5), 3.0, offer()),
        JobResult("r1", fog_id(2), 2.0, offer()),
        JobResult("r1", fog_id(1), 2.0, offer()),
    ]
    assert aggregate("r1", results, clock=0.0).chosen == fog_id(1)


def test_aggregate_matches_argmin_oracle():
    rng = random.Random(17)
    for _ in range(50):
        results = [
            JobResult("r1", fog_id(i), rng.uniform(0, 100), offer()) for i in range(10)
        ]
        rng.shuffle(results)
        decision = aggregate("r1", results, clock=1.0)
        best = min(r.score for r in results)
        winners = [r.responder for r in results if r.score == best]
        assert decision.chosen == min(winners, key=lambda n: n.ordinal)


def test_aggregate_empty_results():
    with pytest.raises(EmptyResultSet):
        aggregate("r1", [], clock=0.0)


def test_aggregate_ignores_foreign_request_ids():
    with pytest.raises(EmptyResultSet):
        aggregate("r1", [JobResult("r2", fog_id(0), 1.0, offer())], clock=0.0)


def test_pending_request_completion():
    req = request_at(0, 0)
    pending = PendingRequest(req, [fog_id(0), fog_id(1)])
    assert not pending.complete()
    pending.record(JobResult("r1", fog_id(0), 1.0, offer()))
    pending.record(JobResult("r1", fog_id(1), 2.0, offer()))
    assert pending.complete()
