"""Credibility-reliability training: EM over latent claim labels.

For claim ``j`` with ``M_j`` opinion holders the E-step computes::

    lambda_j = 1 / (1 + (phi_j / (1 - phi_j)) ** (M_j - 1)
                     * prod_{x_ij = +1} (1 - eta1_i) / eta1_i
                     * prod_{x_ij = -1} eta0_i / (1 - eta0_i))

where ``eta1_i = P(z = 1 | x_i = 1)`` and ``eta0_i = P(z = -1 | x_i = -1)``
(``eta0`` stands for the ``-1`` reliability throughout the code).  Each
user's two parameters are already posteriors, so ``M_j - 1`` copies of the
prior are divided out; a claim nobody talks about keeps ``lambda_j = phi_j``.
Products are evaluated as sums of logs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .opinions import OpinionMatrix

EPS = 1e-9
M_STEP_VARIANTS = ("ratio", "posterior")


def clamp(x, eps: float = EPS):
    return np.clip(x, eps, 1.0 - eps)


@dataclass
class TrainingState:
    """Parameters of one training run, aligned with an :class:`OpinionMatrix`.

    ``priors`` and ``credibility`` follow ``claims``; ``eta_pos`` and
    ``eta_neg`` follow ``users``.
    """

    users: tuple[int, ...]
    claims: tuple[int, ...]
    priors: np.ndarray
    credibility: np.ndarray
    eta_pos: np.ndarray
    eta_neg: np.ndarray
    iteration: int = 0
    converged: bool = False
    trace: list[tuple[int, float, float]] = field(default_factory=list, repr=False)

    @property
    def reliability(self) -> np.ndarray:
        return (self.eta_pos + self.eta_neg) / 2.0

    def credibility_map(self) -> dict[int, float]:
        return dict(zip(self.claims, self.credibility.tolist()))

    def reliability_map(self) -> dict[int, float]:
        return dict(zip(self.users, self.reliability.tolist()))

    def eta_pos_map(self) -> dict[int, float]:
        return dict(zip(self.users, self.eta_pos.tolist()))

    def eta_neg_map(self) -> dict[int, float]:
        return dict(zip(self.users, self.eta_neg.tolist()))

    def copy(self) -> "TrainingState":
        return replace(
            self,
            priors=self.priors.copy(),
            credibility=self.credibility.copy(),
            eta_pos=self.eta_pos.copy(),
            eta_neg=self.eta_neg.copy(),
            trace=list(self.trace),
        )


def _split(opinions: OpinionMatrix) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    x = opinions.matrix()
    pos = (x == 1).astype(np.float64)
    neg = (x == -1).astype(np.float64)
    return sp.csr_matrix(pos), sp.csr_matrix(neg)


def _as_claim_array(values, opinions: OpinionMatrix, name: str) -> np.ndarray:
    if isinstance(values, Mapping):
        try:
            return np.array([float(values[c]) for c in opinions.claims])
        except KeyError as e:
            raise KeyError(f"{name} missing claim {e.args[0]}") from None
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(opinions.n_claims, float(arr))
    if arr.shape != (opinions.n_claims,):
        raise ValueError(f"{name} must have one value per claim ({opinions.n_claims})")
    return arr


def _as_user_array(values, opinions: OpinionMatrix, name: str) -> np.ndarray:
    if isinstance(values, Mapping):
        try:
            return np.array([float(values[u]) for u in opinions.users])
        except KeyError as e:
            raise KeyError(f"{name} missing user {e.args[0]}") from None
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (opinions.n_users,):
        raise ValueError(f"{name} must have one value per user ({opinions.n_users})")
    return arr


def e_step_arrays(
    priors: np.ndarray,
    eta_pos: np.ndarray,
    eta_neg: np.ndarray,
    pos: sp.spmatrix,
    neg: sp.spmatrix,
) -> np.ndarray:
    """Credibility per claim from dense parameters and 0/1 indicator matrices."""
    phi = clamp(priors)
    e1 = clamp(eta_pos)
    e0 = clamp(eta_neg)
    w_pos = np.log1p(-e1) - np.log(e1)
    w_neg = np.log(e0) - np.log1p(-e0)
    holders = np.asarray(pos.sum(axis=0)).ravel() + np.asarray(neg.sum(axis=0)).ravel()
    log_odds = (holders - 1.0) * (np.log(phi) - np.log1p(-phi))
    log_odds += pos.T @ w_pos + neg.T @ w_neg
    return expit(-log_odds)


def e_step(state: TrainingState, opinions: OpinionMatrix) -> np.ndarray:
    pos, neg = _split(opinions)
    return e_step_arrays(state.priors, state.eta_pos, state.eta_neg, pos, neg)


def m_step_arrays(
    credibility: np.ndarray,
    eta_pos: np.ndarray,
    eta_neg: np.ndarray,
    pos: sp.spmatrix,
    neg: sp.spmatrix,
    variant: str = "ratio",
) -> tuple[np.ndarray, np.ndarray]:
    """Reliability update.

    ``variant="ratio"`` (the default) is the ratio update::

        eta1 = S1(lam) / (S1(lam) + S0(1 - lam))
        eta0 = S1(1 - lam) / (S1(1 - lam) + S0(lam))

    with ``S1``/``S0`` summing over the user's +1 / -1 claims.
    ``variant="posterior"`` uses the posterior frequencies
    ``S1(lam) / |C1|`` and ``S0(1 - lam) / |C0|``.  A 0/0 ratio gives 0.5;
    users without opinions keep their previous values.
    """
    if variant not in M_STEP_VARIANTS:
        raise ValueError(f"unknown M-step variant {variant!r}; expected one of {M_STEP_VARIANTS}")
    lam = np.asarray(credibility, dtype=np.float64)
    s1_lam = pos @ lam
    s1_not = pos @ (1.0 - lam)
    s0_lam = neg @ lam
    s0_not = neg @ (1.0 - lam)
    if variant == "ratio":
        num1, den1 = s1_lam, s1_lam + s0_not
        num0, den0 = s1_not, s1_not + s0_lam
    else:
        num1, den1 = s1_lam, np.asarray(pos.sum(axis=1)).ravel()
        num0, den0 = s0_not, np.asarray(neg.sum(axis=1)).ravel()
    with np.errstate(invalid="ignore", divide="ignore"):
        new1 = np.where(den1 > 0, num1 / np.where(den1 > 0, den1, 1.0), 0.5)
        new0 = np.where(den0 > 0, num0 / np.where(den0 > 0, den0, 1.0), 0.5)
    silent = (np.diff(pos.indptr) + np.diff(neg.indptr)) == 0
    new1[silent] = eta_pos[silent]
    new0[silent] = eta_neg[silent]
    return np.clip(new1, 0.0, 1.0), np.clip(new0, 0.0, 1.0)


def m_step(state: TrainingState, opinions: OpinionMatrix, variant: str = "ratio"):
    pos, neg = _split(opinions)
    return m_step_arrays(state.credibility, state.eta_pos, state.eta_neg, pos, neg, variant)


def train(
    opinions: OpinionMatrix,
    priors,
    tolerance: float = 0.01,
    *,
    max_iter: int = 500,
    seed: int | np.random.Generator | None = 0,
    m_step_variant: str = "ratio",
    init_eta: tuple[np.ndarray, np.ndarray] | None = None,
    record_trace: bool = False,
) -> TrainingState:
    """Alternate E and M steps until no reliability moves by more than ``tolerance``.

    Reliabilities start uniform in (0, 1) unless ``init_eta`` supplies a
    warm start.  Hitting ``max_iter`` returns a state with
    ``converged=False``.  The returned credibility is the E-step of the
    returned reliabilities.
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    phi = clamp(_as_claim_array(priors, opinions, "priors"))
    n_users = opinions.n_users
    if init_eta is None:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        e1 = clamp(rng.random(n_users))
        e0 = clamp(rng.random(n_users))
    else:
        e1 = np.array(init_eta[0], dtype=np.float64)
        e0 = np.array(init_eta[1], dtype=np.float64)
        if e1.shape != (n_users,) or e0.shape != (n_users,):
            raise ValueError("init_eta arrays must have one value per user")
    pos, neg = _split(opinions)

    trace = []
    converged = False
    t = 0
    while t < max_iter:
        lam = e_step_arrays(phi, e1, e0, pos, neg)
        n1, n0 = m_step_arrays(lam, e1, e0, pos, neg, m_step_variant)
        delta = float(max(np.max(np.abs(n1 - e1), initial=0.0), np.max(np.abs(n0 - e0), initial=0.0)))
        e1, e0 = n1, n0
        t += 1
        if record_trace:
            trace.append((t, delta, float(lam.mean()) if lam.size else math.nan))
        if delta <= tolerance:
            converged = True
            break
    lam = e_step_arrays(phi, e1, e0, pos, neg)
    return TrainingState(
        users=opinions.users,
        claims=opinions.claims,
        priors=phi,
        credibility=lam,
        eta_pos=e1,
        eta_neg=e0,
        iteration=t,
        converged=converged,
        trace=trace,
    )


def write_trace_csv(trace: Iterable[tuple[int, float, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "max_delta_eta", "mean_credibility"])
        for row in trace:
            w.writerow([row[0], repr(row[1]), repr(row[2])])


# ----------------------------------------------------------------------
# brute-force posterior, used as an independent check of the E-step
# ----------------------------------------------------------------------

ORACLE_MAX_USERS = 4
ORACLE_MAX_CLAIMS = 4


class OracleDomainError(ValueError):
    """No opinion marginal keeps all four conditionals inside [0, 1]."""


def _xi_interval(phi: float, e1: float, e0: float) -> tuple[float, float]:
    bounds_hi = {
        "xi*eta1/phi <= 1": phi / e1,
        "xi*(1-eta1)/(1-phi) <= 1": (1 - phi) / (1 - e1),
        "xi <= 1": 1.0,
    }
    bounds_lo = {
        "(1-xi)*eta0/(1-phi) <= 1": 1 - (1 - phi) / e0,
        "(1-xi)*(1-eta0)/phi <= 1": 1 - phi / (1 - e0),
        "xi >= 0": 0.0,
    }
    lo_name, lo = max(bounds_lo.items(), key=lambda kv: kv[1])
    hi_name, hi = min(bounds_hi.items(), key=lambda kv: kv[1])
    if lo > hi:
        raise OracleDomainError(
            f"no valid xi for phi={phi}, eta1={e1}, eta0={e0}: "
            f"'{lo_name}' needs xi >= {lo:.6g} but '{hi_name}' needs xi <= {hi:.6g}"
        )
    return lo, hi


def _conditionals(xi: float, phi: float, e1: float, e0: float) -> dict[tuple[int, int], float]:
    """``P(x | z)`` keyed by ``(x, z)``, written through ``P(z | x)`` by Bayes."""
    return {
        (1, 1): xi * e1 / phi,
        (-1, -1): (1 - xi) * e0 / (1 - phi),
        (1, -1): xi * (1 - e1) / (1 - phi),
        (-1, 1): (1 - xi) * (1 - e0) / phi,
    }


def posterior_oracle(
    opinions: OpinionMatrix,
    priors: Mapping[int, float],
    eta_pos: Mapping[int, float],
    eta_neg: Mapping[int, float],
    *,
    tol: float = 1e-12,
) -> dict[int, float]:
    """``P(z_j = 1 | X_j)`` by direct Bayes over ``z in {+1, -1}``.

    The opinion marginal ``xi = P(x_ij = 1)`` must cancel; each posterior is
    evaluated at two distinct admissible ``xi`` values and the results are
    required to agree within ``tol``.
    """
    if opinions.n_users > ORACLE_MAX_USERS or opinions.n_claims > ORACLE_MAX_CLAIMS:
        raise ValueError(
            f"oracle limited to {ORACLE_MAX_USERS} users x {ORACLE_MAX_CLAIMS} claims"
        )
    out = {}
    for claim, col in opinions.columns().items():
        phi = float(priors[claim])
        grids = []
        for u in sorted(col):
            lo, hi = _xi_interval(phi, float(eta_pos[u]), float(eta_neg[u]))
            grids.append((lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0))
        vals = []
        for pick in (0, 1):
            like_true = phi
            like_false = 1.0 - phi
            for u, xis in zip(sorted(col), grids):
                p = _conditionals(xis[pick], phi, float(eta_pos[u]), float(eta_neg[u]))
                like_true *= p[(col[u], 1)]
                like_false *= p[(col[u], -1)]
            vals.append(like_true / (like_true + like_false))
        if abs(vals[0] - vals[1]) > tol:
            raise AssertionError(f"xi failed to cancel for claim {claim}: {vals}")
        out[claim] = vals[0]
    return out
