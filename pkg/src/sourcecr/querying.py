"""Division-querying source inference.

Per claim the opinion holders are split into a pros and a cons subnetwork,
each labelled correct or incorrect from the claim's credibility.  In each
subnetwork a budget of ``K`` queries buys ``r`` rounds of id/dir questions
for ``K/r`` respondents picked near the rumor-centrality center, and the
source is chosen among the answer-filtered candidates.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .centrality import bfs_log_centrality_array
from .graph import SocialGraph, hop_distances, induced_subgraph, largest_component
from .opinions import OpinionMatrix
from .spread import NodeState, SpreadOutcome

DEFAULT_RELIABILITY = 0.5
CANDIDATE_RULES = ("union", "id-first")


class Label(str, Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"


@dataclass(frozen=True)
class Subnetwork:
    claim_id: int
    side: NodeState
    label: Label
    graph: SocialGraph = field(repr=False)

    @property
    def empty(self) -> bool:
        return self.graph.n_nodes == 0


@dataclass(frozen=True, eq=False)
class SubnetworkAnalysis:
    """Label-independent facts about a subnetwork's largest component.

    ``nodes`` is sorted; ``centrality`` (log BFS-tree rumor centrality) and
    ``distance`` (hops from the center) are aligned with it.  ``nearest``
    lists the nodes by ``(distance, id)``.  Arrays keep the cache small.
    """

    center: int
    nodes: np.ndarray = field(repr=False)
    centrality: np.ndarray = field(repr=False)
    distance: np.ndarray = field(repr=False)
    nearest: np.ndarray = field(repr=False)

    def _pos(self, v: int) -> int:
        i = int(np.searchsorted(self.nodes, v))
        if i == len(self.nodes) or self.nodes[i] != v:
            return -1
        return i

    def __contains__(self, v) -> bool:
        return self._pos(v) >= 0

    def centrality_of(self, v: int) -> float:
        """Log rumor centrality; ``-inf`` for nodes outside the component."""
        i = self._pos(v)
        return -math.inf if i < 0 else float(self.centrality[i])

    def distance_of(self, v: int) -> int | None:
        i = self._pos(v)
        return None if i < 0 else int(self.distance[i])

    def centrality_map(self) -> dict[int, float]:
        return dict(zip(self.nodes.tolist(), self.centrality.tolist()))

    def distance_map(self) -> dict[int, int]:
        return dict(zip(self.nodes.tolist(), self.distance.tolist()))


@dataclass(frozen=True)
class QueryPlan:
    budget: int
    rounds: int
    center: int
    respondents: tuple[int, ...]
    n_high: int

    def __post_init__(self):
        if len(self.respondents) > self.budget // self.rounds:
            raise ValueError("more respondents than the budget allows")


@dataclass(frozen=True)
class QueryTranscript:
    """``answers[v]`` lists ``(said_yes, pointed_neighbor)`` per round."""

    rounds: int
    answers: dict[int, tuple[tuple[bool, int | None], ...]]

    def rows(self) -> list[tuple[int, int, bool, int | None]]:
        return [
            (v, k, yes, nb)
            for v in sorted(self.answers)
            for k, (yes, nb) in enumerate(self.answers[v])
        ]


@dataclass(frozen=True)
class SideDetection:
    side: NodeState
    label: Label
    center: int
    respondents: tuple[int, ...]
    t_id: frozenset[int]
    t_dir: frozenset[int]
    source: int
    transcript: QueryTranscript | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class DetectionResult:
    claim_id: int
    pros: SideDetection | None
    cons: SideDetection | None

    @property
    def pros_source(self) -> int | None:
        return None if self.pros is None else self.pros.source

    @property
    def cons_source(self) -> int | None:
        return None if self.cons is None else self.cons.source

    def side(self, side: NodeState) -> SideDetection | None:
        return self.pros if side == NodeState.PROS else self.cons


def check_budget(budget: int, rounds: int) -> int:
    """Validate ``K`` and ``r``; return the respondent quota ``K // r``."""
    if budget < 1 or rounds < 1:
        raise ValueError(f"budget and rounds must be positive, got K={budget}, r={rounds}")
    if budget % rounds:
        raise ValueError(f"rounds r={rounds} must divide budget K={budget}")
    return budget // rounds


def label_for(side: NodeState, credibility: float) -> Label:
    truth = credibility >= 0.5
    if (side == NodeState.PROS) == truth:
        return Label.CORRECT
    return Label.INCORRECT


def divide_and_label(
    g: SocialGraph, column: Mapping[int, int], credibility: float, claim_id: int = 0
) -> tuple[Subnetwork, Subnetwork]:
    """Split opinion holders of one claim into labelled pros/cons subnetworks."""
    subs = []
    for side in (NodeState.PROS, NodeState.CONS):
        members = [v for v, x in column.items() if x == int(side)]
        subs.append(
            Subnetwork(claim_id, side, label_for(side, credibility), induced_subgraph(g, members))
        )
    return subs[0], subs[1]


TIE_RTOL = 1e-9


def _argmax_smallest(score, candidates: Iterable[int]) -> int:
    """Highest-scoring candidate, smallest id among near-ties.

    Log centralities of symmetric nodes can differ in the last bits, so
    scores within ``TIE_RTOL`` (relative) of the best count as tied.
    """
    cands = sorted(candidates)
    if not cands:
        raise ValueError("no candidates")
    vals = [score(v) for v in cands]
    top = max(vals)
    if top == -math.inf:
        return cands[0]
    tol = TIE_RTOL * max(1.0, abs(top))
    for v, s in zip(cands, vals):
        if s >= top - tol:
            return v
    raise AssertionError("unreachable")


def analyze_subnetwork(sub: Subnetwork | SocialGraph) -> SubnetworkAnalysis:
    graph = sub.graph if isinstance(sub, Subnetwork) else sub
    if graph.n_nodes == 0:
        raise ValueError("subnetwork is empty")
    comp = induced_subgraph(graph, largest_component(graph))
    nodes = np.asarray(comp.nodes, dtype=np.int64)
    cent = bfs_log_centrality_array(comp)
    pos = {v: i for i, v in enumerate(comp.nodes)}
    center = _argmax_smallest(lambda v: cent[pos[v]], comp.nodes)
    hops = hop_distances(comp, center)
    dist = np.array([hops[v] for v in comp.nodes], dtype=np.int64)
    nearest = nodes[np.lexsort((nodes, dist))]
    return SubnetworkAnalysis(center, nodes, cent, dist, nearest)


def select_center(sub: Subnetwork | SocialGraph) -> int:
    """Node of the largest component with the highest BFS-tree rumor centrality."""
    return analyze_subnetwork(sub).center


def select_respondents(
    sub: Subnetwork,
    reliabilities: Mapping[int, float],
    budget: int,
    rounds: int,
    analysis: SubnetworkAnalysis | None = None,
) -> QueryPlan:
    """Pick ``K/r`` respondents among the ``2K/r`` nodes nearest the center.

    Correct subnetworks take the most reliable candidates; incorrect ones
    take half from the top and half from the bottom of the reliability
    order (the top half gets the extra node when ``K/r`` is odd).
    """
    if analysis is None:
        analysis = analyze_subnetwork(sub)
    return plan_queries(analysis, sub.label, reliabilities, budget, rounds)


def plan_queries(
    analysis: SubnetworkAnalysis,
    label: Label,
    reliabilities: Mapping[int, float],
    budget: int,
    rounds: int,
) -> QueryPlan:
    quota = check_budget(budget, rounds)
    pool = analysis.nearest[: 2 * quota].tolist()
    rel = {v: float(reliabilities.get(v, DEFAULT_RELIABILITY)) for v in pool}
    by_high = sorted(pool, key=lambda v: (-rel[v], v))
    if len(pool) <= quota:
        chosen = by_high
        n_high = math.ceil(len(pool) / 2) if label == Label.INCORRECT else len(pool)
    elif label == Label.CORRECT:
        chosen = by_high[:quota]
        n_high = quota
    else:
        n_high = math.ceil(quota / 2)
        high = by_high[:n_high]
        taken = set(high)
        low = [v for v in sorted(pool, key=lambda v: (rel[v], v)) if v not in taken]
        chosen = high + low[: quota - n_high]
    return QueryPlan(budget, rounds, analysis.center, tuple(chosen), n_high)


def simulate_answers(
    plan: QueryPlan,
    outcome: SpreadOutcome,
    reliabilities: Mapping[int, float],
    rng: np.random.Generator,
    g: SocialGraph,
) -> QueryTranscript:
    """Answer ``r`` rounds of id/dir questions per respondent.

    Each answer is truthful with probability equal to the respondent's
    reliability.  A false dir answer names a uniformly random neighbour
    other than the true parent (the parent itself if there is no other).
    A source that denies being the source names a random neighbour.
    """
    answers = {}
    for v in plan.respondents:
        if v not in outcome.state:
            raise ValueError(f"respondent {v} holds no infection record for claim {outcome.claim_id}")
        eta = float(reliabilities.get(v, DEFAULT_RELIABILITY))
        parent = outcome.infect_parent[v]
        is_source = parent is None
        nbrs = g.neighbors(v)
        others = [w for w in nbrs if w != parent]
        rounds = []
        for _ in range(plan.rounds):
            truthful_id = rng.random() < eta
            says_yes = is_source == truthful_id
            if says_yes:
                rounds.append((True, None))
                continue
            truthful_dir = rng.random() < eta
            if is_source:
                pointed = int(nbrs[rng.integers(len(nbrs))]) if nbrs else None
            elif truthful_dir or not others:
                pointed = parent
            else:
                pointed = int(others[rng.integers(len(others))])
            rounds.append((False, pointed))
        answers[v] = tuple(rounds)
    return QueryTranscript(plan.rounds, answers)


def filter_sets(transcript: QueryTranscript, rounds: int | None = None) -> tuple[frozenset, frozenset]:
    """``T_id``: respondents with at least ``r/2`` yes answers.
    ``T_dir``: every node named the maximal number of times in dir answers.
    """
    r = transcript.rounds if rounds is None else rounds
    t_id = frozenset(
        v for v, rs in transcript.answers.items() if sum(yes for yes, _ in rs) >= r / 2
    )
    counts = Counter(nb for rs in transcript.answers.values() for yes, nb in rs if not yes and nb is not None)
    if not counts:
        return t_id, frozenset()
    top = max(counts.values())
    return t_id, frozenset(v for v, c in counts.items() if c == top)


def pick_source(
    sub: Subnetwork | SocialGraph,
    t_id: Iterable[int],
    t_dir: Iterable[int],
    analysis: SubnetworkAnalysis | None = None,
    rule: str = "union",
) -> int:
    """Most likely source among the filtered candidates.

    Candidates are ``T_id & T_dir`` if non-empty, else ``T_id | T_dir``,
    else the center.  Likelihood is BFS-tree rumor centrality on the
    largest component; nodes outside it rank last.

    ``rule="id-first"`` replaces the union fallback with ``T_id`` (then
    ``T_dir``), so a lone self-declared source is not outranked by a more
    central dir-majority node.
    """
    if analysis is None:
        analysis = analyze_subnetwork(sub)
    return pick_from(analysis, t_id, t_dir, rule)


def pick_from(analysis: SubnetworkAnalysis, t_id, t_dir, rule: str = "union") -> int:
    if rule not in CANDIDATE_RULES:
        raise ValueError(f"unknown candidate rule {rule!r}; expected one of {CANDIDATE_RULES}")
    t_id, t_dir = set(t_id), set(t_dir)
    if rule == "union":
        cands = (t_id & t_dir) or (t_id | t_dir) or {analysis.center}
    else:
        cands = (t_id & t_dir) or t_id or t_dir or {analysis.center}
    return _argmax_smallest(analysis.centrality_of, cands)


def claim_side_rng(seed: int, claim_index: int, side: NodeState) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, claim_index, 0 if side == NodeState.PROS else 1]))


def detect_claim(
    g: SocialGraph,
    column: Mapping[int, int],
    credibility: float,
    reliabilities: Mapping[int, float],
    outcome: SpreadOutcome,
    budget: int,
    rounds: int,
    *,
    answer_reliabilities: Mapping[int, float] | None = None,
    seed: int = 0,
    claim_index: int | None = None,
    cache: dict | None = None,
    keep_transcripts: bool = False,
    candidate_rule: str = "union",
) -> DetectionResult:
    claim_id = outcome.claim_id
    idx = claim_id if claim_index is None else claim_index
    answer_rel = reliabilities if answer_reliabilities is None else answer_reliabilities
    found = {}
    for side in (NodeState.PROS, NodeState.CONS):
        members = tuple(sorted(v for v, x in column.items() if x == int(side)))
        if not members:
            found[side] = None
            continue
        # the subnetwork depends only on the opinion column, not on labels
        key = (claim_id, int(side), members)
        analysis = None if cache is None else cache.get(key)
        if analysis is None:
            analysis = analyze_subnetwork(induced_subgraph(g, members))
            if cache is not None:
                cache[key] = analysis
        label = label_for(side, credibility)
        plan = plan_queries(analysis, label, reliabilities, budget, rounds)
        rng = claim_side_rng(seed, idx, side)
        transcript = simulate_answers(plan, outcome, answer_rel, rng, g)
        t_id, t_dir = filter_sets(transcript, rounds)
        src = pick_from(analysis, t_id, t_dir, candidate_rule)
        found[side] = SideDetection(
            side,
            label,
            plan.center,
            plan.respondents,
            t_id,
            t_dir,
            src,
            transcript if keep_transcripts else None,
        )
    return DetectionResult(claim_id, found[NodeState.PROS], found[NodeState.CONS])


def detect_sources(
    g: SocialGraph,
    opinions: OpinionMatrix,
    credibility: Mapping[int, float],
    reliabilities: Mapping[int, float],
    outcomes: Sequence[SpreadOutcome],
    budget: int,
    rounds: int,
    *,
    answer_reliabilities: Mapping[int, float] | None = None,
    seed: int = 0,
    cache: dict | None = None,
    keep_transcripts: bool = False,
    candidate_rule: str = "union",
) -> list[DetectionResult]:
    """Run division-querying for every claim that has a spread outcome.

    ``reliabilities`` (estimated) drive respondent selection;
    ``answer_reliabilities`` (true, defaults to the estimated ones) drive
    how truthfully respondents answer.  Each claim/side draws from its own
    stream derived from ``seed``, so results do not depend on claim order.
    """
    check_budget(budget, rounds)
    columns = opinions.columns()
    results = []
    for k, out in enumerate(outcomes):
        col = columns.get(out.claim_id, {})
        results.append(
            detect_claim(
                g,
                col,
                float(credibility[out.claim_id]),
                reliabilities,
                out,
                budget,
                rounds,
                answer_reliabilities=answer_reliabilities,
                seed=seed,
                claim_index=out.claim_id,
                cache=cache,
                keep_transcripts=keep_transcripts,
                candidate_rule=candidate_rule,
            )
        )
    return results


def write_transcripts_csv(results: Iterable[DetectionResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim_id", "side", "respondent", "round", "id_answer", "dir_answer"])
        for res in results:
            for det in (res.pros, res.cons):
                if det is None or det.transcript is None:
                    continue
                side = "pros" if det.side == NodeState.PROS else "cons"
                for v, k, yes, nb in det.transcript.rows():
                    w.writerow([res.claim_id, side, v, k, "yes" if yes else "no", "" if nb is None else nb])
