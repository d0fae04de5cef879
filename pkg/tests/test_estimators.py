import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone

from sourcecr.estimators import CredibilityReliabilityEM, SourceCR
from sourcecr.graph import generate_random_graph
from sourcecr.spread import SpreadConfig, generate_dataset


def planted(seed=0, n_users=30, n_claims=40):
    """Users agree with the hidden label with their own accuracy."""
    rng = np.random.default_rng(seed)
    z = rng.choice([-1, 1], n_claims)
    acc = rng.uniform(0.6, 0.95, n_users)
    said = rng.random((n_users, n_claims)) < 0.7
    right = rng.random((n_users, n_claims)) < acc[:, None]
    X = np.where(said, np.where(right, z, -z), 0)
    return X, z


def test_params_and_clone():
    est = CredibilityReliabilityEM(tol=0.001, m_step="posterior")
    assert est.get_params()["tol"] == 0.001
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    sc = SourceCR(budget=12).set_params(rounds=4)
    assert clone(sc).get_params()["rounds"] == 4


def test_fit_predict_dense_and_sparse():
    X, z = planted()
    est = CredibilityReliabilityEM(m_step="posterior", prior=0.5, random_state=1).fit(X)
    assert est.credibility_.shape == (40,)
    assert est.reliability_.shape == (30,)
    proba = est.predict_proba(X)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    np.testing.assert_allclose(proba[:, 1], est.credibility_, atol=1e-12)
    sparse = CredibilityReliabilityEM(m_step="posterior", prior=0.5, random_state=1).fit(sp.csr_matrix(X))
    np.testing.assert_array_equal(sparse.credibility_, est.credibility_)
    assert set(np.unique(est.predict(X))) <= {-1, 1}


def test_predict_on_unseen_claims():
    X, _ = planted(2)
    est = CredibilityReliabilityEM(random_state=0).fit(X[:, :30])
    assert est.predict_proba(X[:, 30:]).shape == (10, 2)
    with pytest.raises(ValueError):
        est.predict_proba(X[:5])


def test_input_validation():
    with pytest.raises(ValueError):
        CredibilityReliabilityEM().fit(np.array([[2, 0]]))
    with pytest.raises(ValueError):
        CredibilityReliabilityEM().fit(np.array([1, 0]))
    with pytest.raises(ValueError):
        CredibilityReliabilityEM(m_step="x").fit(np.array([[1]]))
    with pytest.raises(ValueError):
        CredibilityReliabilityEM().fit(np.array([[1, -1]]), priors=[0.5])


def test_sourcecr_transductive():
    g = generate_random_graph(100, 6, 1)
    ops, truths, outs = generate_dataset(g, 6, 0.5, SpreadConfig(seed=1))
    est = SourceCR(budget=12, rounds=3, max_outer=5, random_state=2)
    verdicts = est.fit_predict(ops, graph=g, outcomes=outs)
    assert verdicts.shape == (6,)
    assert set(est.sources_) == set(ops.claims)
    assert est.predict(ops).tolist() == verdicts.tolist()
    with pytest.raises(ValueError):
        est.predict(ops.restrict(claims=[0, 1]))
