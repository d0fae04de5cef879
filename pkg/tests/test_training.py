import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from sourcecr.opinions import OpinionMatrix
from sourcecr.training import (
    OracleDomainError,
    TrainingState,
    _split,
    e_step,
    e_step_arrays,
    m_step,
    m_step_arrays,
    posterior_oracle,
    train,
    write_trace_csv,
)


def state_for(ops, phi, e1, e0, lam=None):
    n = ops.n_claims
    return TrainingState(
        users=ops.users,
        claims=ops.claims,
        priors=np.full(n, phi) if np.isscalar(phi) else np.asarray(phi, float),
        credibility=np.zeros(n) if lam is None else np.asarray(lam, float),
        eta_pos=np.asarray(e1, float),
        eta_neg=np.asarray(e0, float),
    )


@pytest.mark.parametrize("phi", [0.1, 0.5, 0.83])
def test_single_user_positive(phi):
    ops = OpinionMatrix({(0, 0): 1})
    lam = e_step(state_for(ops, phi, [0.9], [0.4]), ops)
    assert lam[0] == pytest.approx(0.9, abs=1e-12)


def test_symmetric_single_user():
    ops = OpinionMatrix({(0, 0): 1})
    assert e_step(state_for(ops, 0.5, [0.5], [0.5]), ops)[0] == pytest.approx(0.5)


def test_two_agreeing_users():
    ops = OpinionMatrix({(0, 0): 1, (1, 0): 1})
    lam = e_step(state_for(ops, 0.5, [0.8, 0.8], [0.5, 0.5]), ops)
    assert lam[0] == pytest.approx(16 / 17, abs=1e-12)


def test_oracle_examples():
    one_pos = OpinionMatrix({(0, 0): 1})
    assert posterior_oracle(one_pos, {0: 0.5}, {0: 0.9}, {0: 0.5})[0] == pytest.approx(0.9)
    one_neg = OpinionMatrix({(0, 0): -1})
    assert posterior_oracle(one_neg, {0: 0.5}, {0: 0.5}, {0: 0.7})[0] == pytest.approx(0.3)
    two = OpinionMatrix({(0, 0): 1, (1, 0): 1})
    etas = {0: 0.8, 1: 0.8}
    assert posterior_oracle(two, {0: 0.5}, etas, {0: 0.5, 1: 0.5})[0] == pytest.approx(16 / 17)
    assert posterior_oracle(one_pos, {0: 0.5}, {0: 0.5}, {0: 0.5})[0] == pytest.approx(0.5)


def test_oracle_domain_error_names_constraint():
    ops = OpinionMatrix({(0, 0): 1})
    with pytest.raises(OracleDomainError, match="xi"):
        posterior_oracle(ops, {0: 0.3}, {0: 0.9}, {0: 0.5})


def test_oracle_size_limit():
    ops = OpinionMatrix({(u, 0): 1 for u in range(5)})
    with pytest.raises(ValueError):
        posterior_oracle(ops, {0: 0.5}, dict.fromkeys(range(5), 0.6), dict.fromkeys(range(5), 0.6))


opinion_instances = st.integers(1, 3).flatmap(
    lambda n_users: st.integers(1, 3).flatmap(
        lambda n_claims: st.tuples(
            st.just(n_users),
            st.just(n_claims),
            st.lists(st.sampled_from([-1, 0, 1]), min_size=n_users * n_claims, max_size=n_users * n_claims),
            st.lists(st.floats(0.05, 0.95), min_size=n_claims, max_size=n_claims),
            st.lists(st.floats(0.05, 0.95), min_size=2 * n_users, max_size=2 * n_users),
        )
    )
)


def _build(inst):
    n_users, n_claims, xs, phis, etas = inst
    entries = {(u, c): xs[u * n_claims + c] for u in range(n_users) for c in range(n_claims) if xs[u * n_claims + c]}
    ops = OpinionMatrix(entries, users=range(n_users), claims=range(n_claims))
    return ops, phis, etas[:n_users], etas[n_users:]


@settings(max_examples=300, deadline=None)
@given(opinion_instances)
def test_e_step_matches_oracle(inst):
    ops, phi, e1, e0 = _build(inst)
    try:
        want = posterior_oracle(ops, dict(enumerate(phi)), dict(enumerate(e1)), dict(enumerate(e0)))
    except OracleDomainError:
        assume(False)
    got = e_step(state_for(ops, phi, e1, e0), ops)
    for c in ops.claims:
        assert got[c] == pytest.approx(want[c], abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(opinion_instances)
def test_label_flip_symmetry(inst):
    ops, phi, e1, e0 = _build(inst)
    pos, neg = _split(ops)
    lam = e_step_arrays(np.array(phi), np.array(e1), np.array(e0), pos, neg)
    flipped = e_step_arrays(1 - np.array(phi), np.array(e0), np.array(e1), neg, pos)
    np.testing.assert_allclose(flipped, 1 - lam, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(opinion_instances, st.sampled_from(["ratio", "posterior"]))
def test_steps_stay_in_range(inst, variant):
    ops, phi, e1, e0 = _build(inst)
    pos, neg = _split(ops)
    lam = e_step_arrays(np.array(phi), np.array(e1), np.array(e0), pos, neg)
    assert np.all((lam >= 0) & (lam <= 1))
    n1, n0 = m_step_arrays(lam, np.array(e1), np.array(e0), pos, neg, variant)
    assert np.all((n1 >= 0) & (n1 <= 1) & (n0 >= 0) & (n0 <= 1))


def test_e_step_clamps_degenerate_reliability():
    ops = OpinionMatrix({(0, 0): 1})
    lam = e_step(state_for(ops, 0.5, [1.0], [0.0]), ops)
    assert np.isfinite(lam).all()
    assert lam[0] == pytest.approx(1.0, abs=1e-8)


def test_silent_claim_keeps_prior():
    ops = OpinionMatrix({(0, 0): 1}, claims=[0, 1])
    lam = e_step(state_for(ops, [0.5, 0.27], [0.6], [0.6]), ops)
    assert lam[1] == pytest.approx(0.27)


def test_m_step_example():
    ops = OpinionMatrix({(0, 1): 1, (0, 2): -1})
    e1, e0 = m_step(state_for(ops, 0.5, [0.5], [0.5], lam=[0.9, 0.2]), ops)
    assert e1[0] == pytest.approx(0.9 / 1.7)
    assert e0[0] == pytest.approx(1 / 3)


def test_m_step_zero_over_zero():
    ops = OpinionMatrix({(0, 0): 1, (0, 1): 1})
    e1, e0 = m_step(state_for(ops, 0.5, [0.3], [0.3], lam=[1.0, 1.0]), ops)
    assert e1[0] == 1.0
    assert e0[0] == 0.5


def test_m_step_no_data_keeps_values():
    ops = OpinionMatrix({(0, 0): 1}, users=[0, 1])
    e1, e0 = m_step(state_for(ops, 0.5, [0.3, 0.77], [0.3, 0.12], lam=[0.6]), ops)
    assert (e1[1], e0[1]) == (0.77, 0.12)


def test_posterior_variant():
    ops = OpinionMatrix({(0, 1): 1, (0, 2): -1, (0, 3): 1})
    e1, e0 = m_step(state_for(ops, 0.5, [0.5], [0.5], lam=[0.9, 0.2, 0.5]), ops, variant="posterior")
    assert e1[0] == pytest.approx(0.7)
    assert e0[0] == pytest.approx(0.8)
    with pytest.raises(ValueError):
        m_step(state_for(ops, 0.5, [0.5], [0.5], lam=[0.9, 0.2, 0.5]), ops, variant="nope")


def _small_world(seed):
    rng = np.random.default_rng(seed)
    entries = {(u, c): int(rng.choice([-1, 1])) for u in range(6) for c in range(8) if rng.random() < 0.6}
    return OpinionMatrix(entries, users=range(6), claims=range(8)), rng.uniform(0.2, 0.8, 8)


def test_empty_matrix():
    ops = OpinionMatrix({}, users=[0, 1], claims=[0, 1, 2])
    st_ = train(ops, [0.2, 0.5, 0.9], seed=4, init_eta=(np.array([0.3, 0.4]), np.array([0.6, 0.7])))
    np.testing.assert_allclose(st_.credibility, [0.2, 0.5, 0.9])
    np.testing.assert_array_equal(st_.eta_pos, [0.3, 0.4])
    assert st_.converged and st_.iteration == 1


@pytest.mark.parametrize("variant", ["ratio", "posterior"])
def test_fixed_point_residual(variant):
    ops = OpinionMatrix({(0, 0): 1, (1, 0): 1, (0, 1): -1, (1, 1): 1})
    tol = 1e-10
    st_ = train(ops, [0.6, 0.4], tol, max_iter=100_000, seed=1, m_step_variant=variant)
    assert st_.converged
    pos, neg = _split(ops)
    lam = e_step_arrays(st_.priors, st_.eta_pos, st_.eta_neg, pos, neg)
    n1, n0 = m_step_arrays(lam, st_.eta_pos, st_.eta_neg, pos, neg, variant)
    assert np.max(np.abs(lam - st_.credibility)) == 0.0
    assert max(np.max(np.abs(n1 - st_.eta_pos)), np.max(np.abs(n0 - st_.eta_neg))) <= tol


def test_deterministic():
    ops, phi = _small_world(3)
    a = train(ops, phi, seed=11)
    b = train(ops, phi, seed=11)
    assert np.array_equal(a.credibility, b.credibility)
    assert np.array_equal(a.eta_pos, b.eta_pos)
    assert a.iteration == b.iteration


def test_iteration_cap_flags_non_convergence():
    ops, phi = _small_world(5)
    st_ = train(ops, phi, 1e-15, max_iter=2, seed=0)
    assert st_.iteration == 2
    assert not st_.converged


def test_prior_mapping_and_errors():
    ops, phi = _small_world(2)
    st_ = train(ops, dict(enumerate(phi)), seed=0)
    assert set(st_.credibility_map()) == set(range(8))
    with pytest.raises(KeyError):
        train(ops, {0: 0.5}, seed=0)
    with pytest.raises(ValueError):
        train(ops, phi, 0.0)
    with pytest.raises(ValueError):
        train(ops, phi, init_eta=(np.zeros(2), np.zeros(2)))


def test_trace_csv(tmp_path):
    ops, phi = _small_world(1)
    st_ = train(ops, phi, seed=0, record_trace=True)
    write_trace_csv(st_.trace, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,max_delta_eta,mean_credibility"
    assert len(lines) == st_.iteration + 1
