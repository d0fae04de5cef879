"""scikit-learn style wrappers around training and the SourceCR loop.

``CredibilityReliabilityEM`` fits user reliabilities on an opinion matrix
and can then score claims it has not seen.  ``SourceCR`` is transductive:
it needs the social graph and the spread records, so it offers ``fit`` and
``fit_predict`` but scores only the claims it was fitted on.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_claim_vector, check_opinions, check_positive
from .framework import FrameworkConfig, run_sourcecr
from .training import M_STEP_VARIANTS, e_step_arrays, _split, train


class CredibilityReliabilityEM(ClassifierMixin, BaseEstimator):
    """EM over latent claim labels.

    ``X`` is users x claims with entries in {-1, 0, +1} (or an
    :class:`~sourcecr.opinions.OpinionMatrix`).  Labels are +1 (truth) and
    -1 (rumor); ``predict_proba`` columns follow ``classes_ = [-1, 1]``.
    """

    def __init__(self, tol=0.01, max_iter=500, m_step="ratio", prior=0.5, random_state=0):
        self.tol = tol
        self.max_iter = max_iter
        self.m_step = m_step
        self.prior = prior
        self.random_state = random_state

    def _check_params(self):
        check_positive(self.tol, "tol")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.m_step not in M_STEP_VARIANTS:
            raise ValueError(f"m_step must be one of {M_STEP_VARIANTS}, got {self.m_step!r}")

    def fit(self, X, y=None, priors=None):
        """``y`` is ignored; ``priors`` overrides the scalar ``prior`` per claim."""
        self._check_params()
        ops = check_opinions(X)
        phi = check_claim_vector(self.prior if priors is None else priors, ops.n_claims, "priors")
        seed = self.random_state if self.random_state is not None else None
        state = train(
            ops, phi, self.tol, max_iter=int(self.max_iter), seed=seed, m_step_variant=self.m_step
        )
        self.classes_ = np.array([-1, 1])
        self.users_ = np.asarray(ops.users)
        self.claims_ = np.asarray(ops.claims)
        self.n_features_in_ = ops.n_users
        self.eta_pos_ = state.eta_pos
        self.eta_neg_ = state.eta_neg
        self.reliability_ = state.reliability
        self.credibility_ = state.credibility
        self.n_iter_ = state.iteration
        self.converged_ = state.converged
        return self

    def predict_proba(self, X, priors=None):
        """Credibility of each column of ``X`` under the fitted reliabilities."""
        check_is_fitted(self, "eta_pos_")
        ops = check_opinions(X)
        if tuple(ops.users) != tuple(self.users_.tolist()):
            raise ValueError(
                f"X must have the {len(self.users_)} users seen in fit, got {ops.n_users}"
            )
        phi = check_claim_vector(self.prior if priors is None else priors, ops.n_claims, "priors")
        pos, neg = _split(ops)
        lam = e_step_arrays(phi, self.eta_pos_, self.eta_neg_, pos, neg)
        return np.column_stack([1.0 - lam, lam])

    def predict(self, X, priors=None):
        return np.where(self.predict_proba(X, priors)[:, 1] >= 0.5, 1, -1)


class SourceCR(BaseEstimator):
    """Alternating EM training and division-querying source detection."""

    def __init__(
        self,
        budget=60,
        rounds=3,
        tol_inner=0.01,
        tol_outer=0.001,
        max_outer=50,
        max_inner=500,
        m_step="ratio",
        warm_start=True,
        candidate_rule="union",
        random_state=0,
    ):
        self.budget = budget
        self.rounds = rounds
        self.tol_inner = tol_inner
        self.tol_outer = tol_outer
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.m_step = m_step
        self.warm_start = warm_start
        self.candidate_rule = candidate_rule
        self.random_state = random_state

    def _config(self) -> FrameworkConfig:
        return FrameworkConfig(
            budget=int(self.budget),
            rounds=int(self.rounds),
            tol_inner=self.tol_inner,
            tol_outer=self.tol_outer,
            max_outer=int(self.max_outer),
            max_inner=int(self.max_inner),
            m_step=self.m_step,
            warm_start=bool(self.warm_start),
            candidate_rule=self.candidate_rule,
            seed=0 if self.random_state is None else int(self.random_state),
        )

    def fit(self, X, y=None, *, graph, outcomes, priors=None, answer_reliability=None):
        """Fit on opinions ``X`` over ``graph`` with the claims' spread records.

        ``X`` must be an :class:`~sourcecr.opinions.OpinionMatrix` (or an
        array whose row indices are the graph's node ids).
        """
        cfg = self._config()
        ops = check_opinions(X)
        missing = set(ops.users) - set(graph.nodes)
        if missing:
            raise ValueError(f"{len(missing)} users are not graph nodes, e.g. {min(missing)}")
        pri = None
        if priors is not None:
            pri = dict(zip(ops.claims, check_claim_vector(priors, ops.n_claims, "priors").tolist()))
        res = run_sourcecr(graph, ops, outcomes, cfg, priors=pri, answer_reliabilities=answer_reliability)
        self.result_ = res
        self.claims_ = np.asarray(ops.claims)
        self.users_ = np.asarray(ops.users)
        self.credibility_ = np.array([res.credibility[c] for c in ops.claims])
        self.reliability_ = np.array([res.reliability[u] for u in ops.users])
        self.sources_ = {d.claim_id: (d.pros_source, d.cons_source) for d in res.detections}
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        return self

    def predict(self, X=None):
        """Verdicts (+1 truth, -1 rumor) for the fitted claims."""
        check_is_fitted(self, "result_")
        if X is not None and tuple(check_opinions(X).claims) != tuple(self.claims_.tolist()):
            raise ValueError("SourceCR is transductive; predict only on the fitted claims")
        return np.where(self.credibility_ >= 0.5, 1, -1)

    def fit_predict(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).predict()
