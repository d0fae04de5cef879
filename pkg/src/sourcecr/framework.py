"""The SourceCR loop: train, detect, refine priors, repeat.

Each outer iteration trains credibility/reliability under the current
priors, runs division-querying with the result, and resets every claim's
prior to ``eta(pros source) / (eta(pros source) + eta(cons source))`` using
the estimated reliabilities of the detected sources.  The loop stops once
no credibility moves by ``tol_outer`` or more.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import SocialGraph
from .metrics import accuracy_of_credibility, error_of_reliability, ground_truth_reliability, source_detection_rate
from .opinions import OpinionMatrix
from .querying import CANDIDATE_RULES, DetectionResult, check_budget, detect_sources
from .spread import ClaimGroundTruth, SpreadOutcome
from .training import TrainingState, clamp, train

log = logging.getLogger(__name__)

TRUTH, RUMOR = 1, -1


@dataclass(frozen=True)
class FrameworkConfig:
    budget: int = 60
    rounds: int = 3
    tol_inner: float = 0.01
    tol_outer: float = 0.001
    max_outer: int = 50
    max_inner: int = 500
    m_step: str = "ratio"
    warm_start: bool = True
    candidate_rule: str = "union"
    seed: int = 0

    def __post_init__(self):
        if not (self.tol_inner > 0 and self.tol_outer > 0):
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")
        check_budget(self.budget, self.rounds)
        if self.candidate_rule not in CANDIDATE_RULES:
            raise ValueError(f"unknown candidate rule {self.candidate_rule!r}")


@dataclass
class FrameworkResult:
    credibility: dict[int, float]
    reliability: dict[int, float]
    verdicts: dict[int, int]
    pros_sources: dict[int, int | None]
    cons_sources: dict[int, int | None]
    iterations: int
    converged: bool
    detections: list[DetectionResult] = field(default_factory=list, repr=False)
    trace: list[dict] = field(default_factory=list, repr=False)
    state: TrainingState | None = field(default=None, repr=False)

    def rows(self) -> list[tuple]:
        """One ``(claim, credibility, verdict, pros_source, cons_source)`` row per claim."""
        return [
            (c, self.credibility[c], self.verdicts[c], self.pros_sources.get(c), self.cons_sources.get(c))
            for c in sorted(self.credibility)
        ]


def init_priors(
    claims: Iterable[int],
    seed: int = 0,
    *,
    offset: float | None = None,
    labels: Mapping[int, int] | None = None,
) -> dict[int, float]:
    """Random priors in (0, 1), or label-anchored priors for offset sweeps.

    With ``offset`` set, true claims get ``1 - offset`` and false claims
    ``offset`` (so 0 is an oracle prior and 0.5 carries no information).
    """
    claims = list(claims)
    if offset is None:
        rng = np.random.default_rng(seed)
        vals = clamp(rng.random(len(claims)))
        return dict(zip(claims, vals.tolist()))
    if not 0.0 <= offset <= 0.5:
        raise ValueError(f"prior offset must lie in [0, 0.5], got {offset}")
    if labels is None:
        raise ValueError("offset priors need claim labels")
    return {c: float(clamp(1.0 - offset if labels[c] == TRUTH else offset)) for c in claims}


def refine_priors(
    detections: Sequence[DetectionResult],
    reliability: Mapping[int, float],
) -> tuple[dict[int, float], set[int]]:
    """New prior per claim from the detected sources' reliabilities.

    Returns the priors and the set of claims that fell back to 0.5 because
    a side went undetected or both reliabilities are zero.
    """
    phi = {}
    fallback = set()
    for d in detections:
        if d.pros_source is None or d.cons_source is None:
            phi[d.claim_id] = 0.5
            fallback.add(d.claim_id)
            continue
        a = float(reliability.get(d.pros_source, 0.5))
        b = float(reliability.get(d.cons_source, 0.5))
        if a + b <= 0:
            phi[d.claim_id] = 0.5
            fallback.add(d.claim_id)
            continue
        phi[d.claim_id] = float(clamp(a / (a + b)))
    return phi, fallback


def classify_claims(credibility: Mapping[int, float]) -> dict[int, int]:
    return {c: TRUTH if lam >= 0.5 else RUMOR for c, lam in credibility.items()}


def run_sourcecr(
    g: SocialGraph,
    opinions: OpinionMatrix,
    outcomes: Sequence[SpreadOutcome],
    cfg: FrameworkConfig = FrameworkConfig(),
    *,
    priors: Mapping[int, float] | None = None,
    init_eta: tuple[np.ndarray, np.ndarray] | None = None,
    answer_reliabilities: Mapping[int, float] | None = None,
    truths: Sequence[ClaimGroundTruth] | None = None,
    cache: dict | None = None,
) -> FrameworkResult:
    """Alternate training and division-querying until credibility settles.

    ``priors`` default to random draws; ``init_eta`` seeds the first
    training.  ``answer_reliabilities`` are the true reliabilities that
    govern query answers (the current estimates are used when omitted).
    With ``truths`` the trace also records accuracy, detection rate and
    error of reliability per outer iteration.
    """
    claims = opinions.claims
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    phi = dict(priors) if priors is not None else init_priors(claims, int(rng.integers(2**31)))
    cache = {} if cache is None else cache
    labels = None if truths is None else {t.claim_id: t.z for t in truths}
    true_rel = None
    if labels is not None and opinions.nnz:
        true_rel = ground_truth_reliability(opinions, labels)
    by_claim = {o.claim_id: o for o in outcomes}
    outcomes = [by_claim[c] for c in claims if c in by_claim]

    eta = init_eta
    prev = None
    trace = []
    detections: list[DetectionResult] = []
    state = None
    converged = False
    k = 0
    while k < cfg.max_outer:
        k += 1
        state = train(
            opinions,
            phi,
            cfg.tol_inner,
            max_iter=cfg.max_inner,
            seed=rng,
            m_step_variant=cfg.m_step,
            init_eta=eta,
        )
        lam = state.credibility_map()
        rel = state.reliability_map()
        detections = detect_sources(
            g,
            opinions,
            lam,
            rel,
            outcomes,
            cfg.budget,
            cfg.rounds,
            answer_reliabilities=answer_reliabilities,
            seed=cfg.seed,
            cache=cache,
            candidate_rule=cfg.candidate_rule,
        )
        delta = (
            float(np.max(np.abs(state.credibility - prev), initial=0.0)) if prev is not None else np.inf
        )
        row = {"iteration": k, "max_delta_credibility": delta}
        if labels is not None:
            row["accuracy"] = accuracy_of_credibility(classify_claims(lam), labels) if lam else np.nan
            row["detection_rate"] = source_detection_rate(detections, truths) if detections else np.nan
            row["reliability_error"] = (
                error_of_reliability({u: rel[u] for u in true_rel}, true_rel) if true_rel else np.nan
            )
        trace.append(row)
        log.debug("outer iteration %d: max |d lambda| = %.3g", k, delta)
        if not claims or delta < cfg.tol_outer:
            converged = True
            break
        prev = state.credibility
        new_phi, _ = refine_priors(detections, rel)
        phi.update(new_phi)
        if cfg.warm_start:
            eta = (state.eta_pos, state.eta_neg)
        else:
            eta = None

    lam = state.credibility_map()
    return FrameworkResult(
        credibility=lam,
        reliability=state.reliability_map(),
        verdicts=classify_claims(lam),
        pros_sources={d.claim_id: d.pros_source for d in detections},
        cons_sources={d.claim_id: d.cons_source for d in detections},
        iterations=k,
        converged=converged,
        detections=detections,
        trace=trace,
        state=state,
    )


def write_outer_trace_csv(trace: Sequence[dict], path) -> None:
    keys = ["iteration", "max_delta_credibility", "accuracy", "detection_rate", "reliability_error"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for row in trace:
            w.writerow(["" if row.get(key) is None else row[key] for key in keys])
