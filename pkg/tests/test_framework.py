import numpy as np
import pytest

from sourcecr.framework import (
    RUMOR,
    TRUTH,
    FrameworkConfig,
    classify_claims,
    init_priors,
    refine_priors,
    run_sourcecr,
    write_outer_trace_csv,
)
from sourcecr.graph import SocialGraph, generate_random_graph
from sourcecr.opinions import OpinionMatrix
from sourcecr.querying import DetectionResult, Label, SideDetection
from sourcecr.spread import NodeState, SpreadConfig, generate_dataset


def detection(claim, pros, cons):
    def side(s, v):
        return None if v is None else SideDetection(s, Label.CORRECT, v, (v,), frozenset(), frozenset(), v)

    return DetectionResult(claim, side(NodeState.PROS, pros), side(NodeState.CONS, cons))


def test_refine_priors():
    rel = {1: 0.9, 2: 0.3, 3: 0.3, 4: 0.0, 5: 0.0}
    phi, fallback = refine_priors(
        [detection(0, 1, 2), detection(1, 2, 3), detection(2, 1, None), detection(3, 4, 5)], rel
    )
    assert phi[0] == pytest.approx(0.75)
    assert phi[1] == 0.5
    assert phi[2] == 0.5 and phi[3] == 0.5
    assert fallback == {2, 3}


def test_classify_boundary():
    assert classify_claims({0: 0.5, 1: 0.49, 2: 1.0}) == {0: TRUTH, 1: RUMOR, 2: TRUTH}


def test_init_priors():
    phi = init_priors(range(50), seed=3)
    assert phi == init_priors(range(50), seed=3)
    assert all(0 < v < 1 for v in phi.values())
    labels = {0: 1, 1: -1}
    assert init_priors([0, 1], offset=0.25, labels=labels) == {0: 0.75, 1: 0.25}
    off0 = init_priors([0, 1], offset=0.0, labels=labels)
    assert 0 < off0[1] < 1e-8 and 1 - 1e-8 < off0[0] < 1
    with pytest.raises(ValueError):
        init_priors([0], offset=0.6, labels=labels)
    with pytest.raises(ValueError):
        init_priors([0], offset=0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        FrameworkConfig(budget=10, rounds=3)
    with pytest.raises(ValueError):
        FrameworkConfig(tol_outer=0)
    with pytest.raises(ValueError):
        FrameworkConfig(candidate_rule="other")


def test_zero_claims():
    g = SocialGraph(range(3), [(0, 1), (1, 2)])
    res = run_sourcecr(g, OpinionMatrix({}, users=g.nodes), [])
    assert res.iterations == 1 and res.converged
    assert res.credibility == {}


@pytest.fixture(scope="module")
def world():
    g = generate_random_graph(150, 6, 3)
    ops, truths, outs = generate_dataset(g, 12, 0.5, SpreadConfig(seed=3))
    return g, ops, truths, outs


def test_deterministic(world):
    g, ops, truths, outs = world
    cfg = FrameworkConfig(budget=12, rounds=3, seed=4)
    a = run_sourcecr(g, ops, outs, cfg, truths=truths)
    b = run_sourcecr(g, ops, outs, cfg, truths=truths)
    assert a.rows() == b.rows()
    assert a.reliability == b.reliability
    assert a.trace == b.trace
    assert np.array_equal(a.state.eta_pos, b.state.eta_pos)


def test_result_shape(world, tmp_path):
    g, ops, truths, outs = world
    res = run_sourcecr(g, ops, outs, FrameworkConfig(budget=12, rounds=3, max_outer=4), truths=truths)
    assert set(res.credibility) == set(ops.claims)
    assert res.verdicts == classify_claims(res.credibility)
    assert 1 <= res.iterations <= 4
    assert len(res.trace) == res.iterations
    assert {"accuracy", "detection_rate", "reliability_error"} <= set(res.trace[-1])
    if res.converged:
        assert res.trace[-1]["max_delta_credibility"] < 0.001
    write_outer_trace_csv(res.trace, tmp_path / "trace.csv")
    assert (tmp_path / "trace.csv").read_text().startswith("iteration,max_delta_credibility")


def test_verdicts_invariant_to_claim_order(world):
    g, ops, truths, outs = world
    cfg = FrameworkConfig(budget=12, rounds=3, seed=1)
    phi = init_priors(ops.claims, seed=8)
    a = run_sourcecr(g, ops, outs, cfg, priors=phi)
    b = run_sourcecr(g, ops, outs[::-1], cfg, priors=phi)
    assert a.verdicts == b.verdicts
    assert a.pros_sources == b.pros_sources


def test_outer_cap_flags_non_convergence(world):
    g, ops, truths, outs = world
    res = run_sourcecr(g, ops, outs, FrameworkConfig(budget=12, rounds=3, max_outer=1, tol_outer=1e-300))
    assert res.iterations == 1
    assert not res.converged
