"""Joint spreading of pros and cons opinions and synthetic opinion datasets.

Both cascades start at time 0 from their sources.  An infected node
attempts each susceptible neighbour once: the attempt succeeds with
probability ``p`` and, if so, lands after an ``Exp(rate)`` delay.  The
earliest arrival infects its target with the sender's opinion and an
infected node never changes state.  The run ends when nothing is pending,
so with ``p < 1`` some users stay silent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .graph import SocialGraph
from .opinions import OpinionMatrix


class NodeState(IntEnum):
    SUSCEPTIBLE = 0
    PROS = 1
    CONS = -1


@dataclass(frozen=True)
class SpreadConfig:
    p: float = 0.6
    rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"success probability must lie in [0, 1], got {self.p}")
        if not self.rate > 0:
            raise ValueError(f"infection rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class SpreadOutcome:
    """Result of one joint spread.  Only infected nodes appear in the maps."""

    claim_id: int
    pros_source: int
    cons_source: int
    state: dict[int, NodeState] = field(repr=False)
    infect_time: dict[int, float] = field(repr=False)
    infect_parent: dict[int, int | None] = field(repr=False)
    attempt_delays: np.ndarray | None = field(default=None, repr=False, compare=False)

    def state_of(self, v: int) -> NodeState:
        return self.state.get(v, NodeState.SUSCEPTIBLE)

    def infected(self, side: NodeState | None = None) -> list[int]:
        if side is None:
            return sorted(self.state)
        return sorted(v for v, s in self.state.items() if s == side)

    def source(self, side: NodeState) -> int:
        return self.pros_source if side == NodeState.PROS else self.cons_source


@dataclass(frozen=True)
class ClaimGroundTruth:
    claim_id: int
    z: int
    pros_source: int
    cons_source: int

    def __post_init__(self):
        if self.z not in (1, -1):
            raise ValueError(f"z must be +1 or -1, got {self.z}")
        if self.pros_source == self.cons_source:
            raise ValueError("pros and cons sources must differ")


def draw_transmissions(
    g: SocialGraph, cfg: SpreadConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per directed edge (CSR order of ``g``): does it transmit, and after what delay."""
    indptr, _ = g.csr()
    m = int(indptr[-1])
    hit = rng.random(m) < cfg.p
    wait = rng.exponential(1.0 / cfg.rate, m)
    return hit, wait


def simulate_joint_spread(
    g: SocialGraph,
    pros_source: int,
    cons_source: int,
    cfg: SpreadConfig,
    *,
    claim_id: int = 0,
    rng: np.random.Generator | None = None,
    record_delays: bool = False,
) -> SpreadOutcome:
    """Run one joint spread; ``rng`` overrides ``cfg.seed`` when given.

    Every directed edge's fate is drawn up front.  Because a node is taken
    by the earliest arrival and keeps its state, infection times are
    first-passage distances from the nearer source over transmitting
    edges, which a multi-source Dijkstra computes directly.
    """
    for s in (pros_source, cons_source):
        if s not in g:
            raise KeyError(f"source {s} not in graph")
    if pros_source == cons_source:
        raise ValueError("pros and cons sources must differ")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    hit, wait = draw_transmissions(g, cfg, rng)
    indptr, indices = g.csr()
    n = g.n_nodes
    rows = np.repeat(np.arange(n), np.diff(indptr))
    w = sp.csr_matrix((wait[hit], (rows[hit], indices[hit])), shape=(n, n))
    index = g.index_of()
    src = [index[pros_source], index[cons_source]]
    dist, pred, origin = dijkstra(
        w, directed=True, indices=src, min_only=True, return_predecessors=True
    )

    nodes = g.nodes
    reached = np.flatnonzero(np.isfinite(dist))
    side = {src[0]: NodeState.PROS, src[1]: NodeState.CONS}
    state = {}
    time = {}
    parent: dict[int, int | None] = {}
    for i in reached.tolist():
        v = nodes[i]
        state[v] = side[int(origin[i])]
        time[v] = float(dist[i])
        parent[v] = None if pred[i] < 0 else nodes[int(pred[i])]
    return SpreadOutcome(
        claim_id=claim_id,
        pros_source=pros_source,
        cons_source=cons_source,
        state=state,
        infect_time=time,
        infect_parent=parent,
        attempt_delays=wait[hit] if record_delays else None,
    )


def opinions_from_spread(outcome: SpreadOutcome) -> dict[int, int]:
    """Opinion column of one claim: pros-infected -> +1, cons-infected -> -1."""
    return {v: int(s) for v, s in outcome.state.items() if s != NodeState.SUSCEPTIBLE}


def claim_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent per-claim generators derived from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def generate_dataset(
    g: SocialGraph,
    n_claims: int,
    truth_fraction: float,
    cfg: SpreadConfig,
) -> tuple[OpinionMatrix, list[ClaimGroundTruth], list[SpreadOutcome]]:
    """Synthesize claims, their spreads and the resulting opinions.

    Exactly ``floor(truth_fraction * n_claims)`` claims are true, placed at
    random.  Claim ids are ``0..n_claims-1``.
    """
    if n_claims < 1:
        raise ValueError(f"n_claims must be >= 1, got {n_claims}")
    if not 0.0 <= truth_fraction <= 1.0:
        raise ValueError(f"truth_fraction must lie in [0, 1], got {truth_fraction}")
    if g.n_nodes < 2:
        raise ValueError("graph needs at least two nodes")

    master = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    n_true = math.floor(truth_fraction * n_claims)
    z = np.full(n_claims, -1, dtype=np.int64)
    z[master.permutation(n_claims)[:n_true]] = 1

    nodes = np.asarray(g.nodes)
    columns: dict[int, dict[int, int]] = {}
    truths: list[ClaimGroundTruth] = []
    outcomes: list[SpreadOutcome] = []
    for j, rng in enumerate(claim_streams(cfg.seed, n_claims)):
        pros, cons = (int(v) for v in rng.choice(nodes, size=2, replace=False))
        out = simulate_joint_spread(g, pros, cons, cfg, claim_id=j, rng=rng)
        outcomes.append(out)
        truths.append(ClaimGroundTruth(j, int(z[j]), pros, cons))
        columns[j] = opinions_from_spread(out)
    return OpinionMatrix.from_columns(columns, users=g.nodes), truths, outcomes


def labels_of(truths: Sequence[ClaimGroundTruth]) -> dict[int, int]:
    return {t.claim_id: t.z for t in truths}
