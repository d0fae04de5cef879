"""Experiment sweeps over prior offset, reliability offset, budget and iterations.

Each repetition builds (or loads) one dataset that is shared by every grid
point and algorithm, so sweeps compare settings on identical data.  The
algorithms' own randomness comes from a stream per (grid point,
repetition).  Results are averaged over repetitions and written as CSV
rows ``(sweep_value, algorithm, metric, mean, std, n)`` plus a JSON summary.
"""

from __future__ import annotations

import csv
import dataclasses
import importlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .framework import FrameworkConfig, classify_claims, init_priors, run_sourcecr
from .graph import SocialGraph, generate_random_graph, read_edge_list
from .io import load_claim_labels_csv, load_opinions_csv, load_sources_csv, load_spread_csv
from .metrics import (
    accuracy_of_credibility,
    error_of_reliability,
    ground_truth_reliability,
    source_detection_rate,
)
from .opinions import OpinionMatrix
from .querying import CANDIDATE_RULES, check_budget, detect_sources
from .spread import ClaimGroundTruth, SpreadConfig, SpreadOutcome, generate_dataset
from .training import M_STEP_VARIANTS, train

log = logging.getLogger(__name__)

SWEEPS = ("prior-offset", "reliability-offset", "budget", "iterations")
ALGORITHMS = ("SourceCR", "CR-TRI", "Q-SI")
PLUGIN_SLOTS = {"TF-TRI": "tf_tri", "MVNA-SI": "mvna_si"}
METRICS = ("error_of_reliability", "accuracy_of_credibility", "source_detection_rate")

DEFAULT_ALGORITHMS = {
    "prior-offset": ("SourceCR", "CR-TRI"),
    "reliability-offset": ("SourceCR", "Q-SI"),
    "budget": ("SourceCR", "Q-SI"),
    "iterations": ("SourceCR", "CR-TRI"),
}
DEFAULT_GRIDS = {
    "prior-offset": (0.0, 0.25, 0.5),
    "reliability-offset": (0.0, 0.25, 0.5),
    "budget": (12, 24, 48, 96),
    "iterations": (1, 2, 3, 4, 5, 6, 7, 8),
}


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_list(text: str, conv) -> tuple:
    parts = [p for p in text.replace(",", " ").split() if p]
    return tuple(conv(p) for p in parts)


def _parse_optional(conv):
    def parse(text: str):
        t = text.strip()
        return None if t.lower() in ("", "none") else conv(t)

    return parse


@dataclass(frozen=True)
class ExperimentConfig:
    sweep: str = "prior-offset"
    grid: tuple[float, ...] = ()
    algorithms: tuple[str, ...] = ()
    repetitions: int = 20
    seed: int = 0
    # synthetic recipe
    n_nodes: int = 500
    avg_degree: float = 10.0
    n_claims: int = 100
    p: float = 0.6
    rate: float = 1.0
    truth_fraction: float = 0.5
    # file dataset (used instead of the recipe when opinions_path is set)
    graph_path: str | None = None
    opinions_path: str | None = None
    labels_path: str | None = None
    spread_path: str | None = None
    sources_path: str | None = None
    # algorithm settings
    budget: int = 60
    rounds: int = 3
    tol_inner: float = 0.01
    tol_outer: float = 0.001
    max_outer: int = 50
    max_inner: int = 500
    m_step: str = "ratio"
    warm_start: bool = True
    candidate_rule: str = "union"
    prior_offset: float | None = None
    reliability_offset: float = 0.0
    # plug-in baselines, "module:callable"
    tf_tri: str | None = None
    mvna_si: str | None = None
    out: str | None = None

    @property
    def effective_grid(self) -> tuple:
        grid = self.grid or DEFAULT_GRIDS.get(self.sweep, ())
        if self.sweep in ("budget", "iterations") and all(float(v).is_integer() for v in grid):
            grid = tuple(int(v) for v in grid)
        return grid

    @property
    def effective_algorithms(self) -> tuple[str, ...]:
        return self.algorithms or DEFAULT_ALGORITHMS.get(self.sweep, ())

    @property
    def synthetic(self) -> bool:
        return self.opinions_path is None

    def framework(self, seed: int, **overrides) -> FrameworkConfig:
        kw = dict(
            budget=self.budget,
            rounds=self.rounds,
            tol_inner=self.tol_inner,
            tol_outer=self.tol_outer,
            max_outer=self.max_outer,
            max_inner=self.max_inner,
            m_step=self.m_step,
            warm_start=self.warm_start,
            candidate_rule=self.candidate_rule,
            seed=seed,
        )
        kw.update(overrides)
        return FrameworkConfig(**kw)

    def validate(self) -> None:
        """Report every inconsistency at once, before anything runs."""
        errs = []
        if self.sweep not in SWEEPS:
            errs.append(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        grid = self.effective_grid
        if not grid:
            errs.append("grid is empty")
        if self.repetitions < 1:
            errs.append(f"repetitions must be >= 1, got {self.repetitions}")
        for a in self.effective_algorithms:
            if a in PLUGIN_SLOTS:
                if not getattr(self, PLUGIN_SLOTS[a]):
                    errs.append(f"algorithm {a} needs the {PLUGIN_SLOTS[a]} plug-in (module:callable)")
            elif a not in ALGORITHMS:
                errs.append(f"unknown algorithm {a!r}; built-ins are {ALGORITHMS}")
        if self.sweep == "prior-offset":
            errs += [f"prior offset {v} outside [0, 0.5]" for v in grid if not 0 <= v <= 0.5]
        if self.sweep == "reliability-offset":
            errs += [f"reliability offset {v} outside [0, 0.5]" for v in grid if not 0 <= v <= 0.5]
        if self.sweep == "budget":
            for v in grid:
                if v != int(v) or int(v) < 1 or int(v) % self.rounds:
                    errs.append(f"budget {v} is not a positive multiple of r={self.rounds}")
        else:
            try:
                check_budget(self.budget, self.rounds)
            except ValueError as e:
                errs.append(str(e))
        if self.sweep == "iterations":
            errs += [f"iteration {v} is not a positive integer" for v in grid if v != int(v) or v < 1]
        if self.prior_offset is not None and not 0 <= self.prior_offset <= 0.5:
            errs.append(f"prior_offset {self.prior_offset} outside [0, 0.5]")
        if not 0 <= self.reliability_offset <= 0.5:
            errs.append(f"reliability_offset {self.reliability_offset} outside [0, 0.5]")
        if not (self.tol_inner > 0 and self.tol_outer > 0):
            errs.append("tolerances must be positive")
        if self.m_step not in M_STEP_VARIANTS:
            errs.append(f"m_step must be one of {M_STEP_VARIANTS}")
        if self.candidate_rule not in CANDIDATE_RULES:
            errs.append(f"candidate_rule must be one of {CANDIDATE_RULES}")
        if self.synthetic:
            if self.n_nodes < 2 or self.n_claims < 1:
                errs.append("synthetic recipe needs n_nodes >= 2 and n_claims >= 1")
            if not 0 <= self.p <= 1:
                errs.append(f"p must lie in [0, 1], got {self.p}")
            if not 0 <= self.truth_fraction <= 1:
                errs.append(f"truth_fraction must lie in [0, 1], got {self.truth_fraction}")
        else:
            if not self.labels_path:
                errs.append("file datasets need labels_path for the metrics")
            needs_graph = {"SourceCR", "Q-SI"} & set(self.effective_algorithms)
            if needs_graph and not (self.graph_path and self.spread_path):
                errs.append(
                    f"{sorted(needs_graph)} need graph_path and spread_path; "
                    "without a graph only CR-TRI can run"
                )
        if errs:
            raise ConfigError("; ".join(errs))


_FIELD_PARSERS: dict[str, Callable[[str], Any]] = {
    "sweep": str.strip,
    "grid": lambda t: _parse_list(t, float),
    "algorithms": lambda t: _parse_list(t, str),
    "repetitions": int,
    "seed": int,
    "n_nodes": int,
    "avg_degree": float,
    "n_claims": int,
    "p": float,
    "rate": float,
    "truth_fraction": float,
    "graph_path": _parse_optional(str),
    "opinions_path": _parse_optional(str),
    "labels_path": _parse_optional(str),
    "spread_path": _parse_optional(str),
    "sources_path": _parse_optional(str),
    "budget": int,
    "rounds": int,
    "tol_inner": float,
    "tol_outer": float,
    "max_outer": int,
    "max_inner": int,
    "m_step": str.strip,
    "warm_start": _parse_bool,
    "candidate_rule": str.strip,
    "prior_offset": _parse_optional(float),
    "reliability_offset": float,
    "tf_tri": _parse_optional(str),
    "mvna_si": _parse_optional(str),
    "out": _parse_optional(str),
}
assert set(_FIELD_PARSERS) == {f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment, dashes in keys
    become underscores."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _FIELD_PARSERS[key](val)
        except ValueError as e:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {e}") from None
    return values


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        values = parse_config_text(fh.read(), str(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            text = "none"
        elif isinstance(v, tuple):
            text = ", ".join(str(x) for x in v)
        elif isinstance(v, bool):
            text = "true" if v else "false"
        else:
            text = str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# datasets
# ----------------------------------------------------------------------


@dataclass
class Dataset:
    graph: SocialGraph | None
    opinions: OpinionMatrix
    labels: dict[int, int]
    truths: list[ClaimGroundTruth] | None
    outcomes: list[SpreadOutcome] | None
    true_reliability: dict[int, float]
    cache: dict = field(default_factory=dict, repr=False)


def dataset_seed(master: int, repetition: int) -> int:
    return int(np.random.SeedSequence([master, repetition]).generate_state(1)[0])


def algorithm_seed(master: int, grid_index: int, repetition: int) -> int:
    return int(np.random.SeedSequence([master, grid_index, repetition, 1]).generate_state(1)[0])


def build_synthetic(cfg: ExperimentConfig, seed: int) -> Dataset:
    g = generate_random_graph(cfg.n_nodes, cfg.avg_degree, seed)
    x, truths, outcomes = generate_dataset(
        g, cfg.n_claims, cfg.truth_fraction, SpreadConfig(cfg.p, cfg.rate, seed)
    )
    labels = {t.claim_id: t.z for t in truths}
    return Dataset(g, x, labels, truths, outcomes, ground_truth_reliability(x, labels))


def load_files(cfg: ExperimentConfig) -> Dataset:
    g = read_edge_list(cfg.graph_path) if cfg.graph_path else None
    x = load_opinions_csv(cfg.opinions_path, users=g.nodes if g is not None else ())
    labels = load_claim_labels_csv(cfg.labels_path)
    outcomes = load_spread_csv(cfg.spread_path) if cfg.spread_path else None
    truths = None
    if cfg.sources_path:
        truths = load_sources_csv(cfg.sources_path, labels)
    elif outcomes is not None:
        truths = [ClaimGroundTruth(o.claim_id, labels.get(o.claim_id, 1), o.pros_source, o.cons_source) for o in outcomes]
    return Dataset(g, x, labels, truths, outcomes, ground_truth_reliability(x, labels))


class DatasetPool:
    """Memo of datasets by seed, so several sweeps can share data and caches."""

    def __init__(self):
        self._store: dict[tuple, Dataset] = {}

    def get(self, cfg: ExperimentConfig, seed: int) -> Dataset:
        if cfg.synthetic:
            key = ("synthetic", cfg.n_nodes, cfg.avg_degree, cfg.n_claims, cfg.p, cfg.rate, cfg.truth_fraction, seed)
        else:
            key = ("files", cfg.graph_path, cfg.opinions_path, cfg.labels_path, cfg.spread_path, cfg.sources_path)
        if key not in self._store:
            self._store[key] = build_synthetic(cfg, seed) if cfg.synthetic else load_files(cfg)
        return self._store[key]

    def __len__(self) -> int:
        return len(self._store)


# ----------------------------------------------------------------------
# algorithms
# ----------------------------------------------------------------------


def perturb_reliability(
    values: Mapping[int, float], offset: float, rng: np.random.Generator
) -> dict[int, float]:
    """Add noise of mean absolute size ``offset`` (uniform magnitude, random sign), clamped to [0, 1]."""
    users = sorted(values)
    mag = rng.uniform(0.0, 2.0 * offset, len(users))
    sign = np.where(rng.random(len(users)) < 0.5, -1.0, 1.0)
    base = np.array([values[u] for u in users])
    return dict(zip(users, np.clip(base + sign * mag, 0.0, 1.0).tolist()))


def _metrics(ds: Dataset, reliability, verdicts, detections) -> dict[str, float]:
    out = {m: math.nan for m in METRICS}
    if reliability is not None and ds.true_reliability:
        out["error_of_reliability"] = error_of_reliability(
            {u: reliability[u] for u in ds.true_reliability if u in reliability}, ds.true_reliability
        )
    if verdicts is not None:
        out["accuracy_of_credibility"] = accuracy_of_credibility(verdicts, ds.labels)
    if detections is not None and ds.truths:
        out["source_detection_rate"] = source_detection_rate(detections, ds.truths)
    return out


@dataclass(frozen=True)
class Setting:
    """What one grid point changes, resolved for one repetition."""

    priors: dict[int, float] | None
    budget: int
    rel_offset: float
    max_outer: int


def _setting(cfg: ExperimentConfig, ds: Dataset, value, rng: np.random.Generator) -> Setting:
    claims = ds.opinions.claims
    prior_offset = cfg.prior_offset
    budget, rel_offset, max_outer = cfg.budget, cfg.reliability_offset, cfg.max_outer
    if cfg.sweep == "prior-offset":
        prior_offset = float(value)
    elif cfg.sweep == "reliability-offset":
        rel_offset = float(value)
    elif cfg.sweep == "budget":
        budget = int(value)
    if prior_offset is None:
        priors = init_priors(claims, int(rng.integers(2**31)))
    else:
        priors = init_priors(claims, offset=prior_offset, labels=ds.labels)
    return Setting(priors, budget, rel_offset, max_outer)


def _run_cr_tri(cfg, ds, st: Setting, seed: int):
    state = train(
        ds.opinions, st.priors, cfg.tol_inner, max_iter=cfg.max_inner, seed=seed, m_step_variant=cfg.m_step
    )
    return state


def run_repetition(
    cfg: ExperimentConfig,
    ds: Dataset,
    grid_index: int,
    value,
    repetition: int,
    memo: dict | None = None,
) -> dict[str, tuple[dict[str, float], float]]:
    """Every algorithm at one grid point on one dataset: metrics and wall time.

    In the iterations sweep one SourceCR run serves every grid point (read
    off its trace), so the stream is the grid-independent one and the run
    is kept in ``memo``.
    """
    iterations = cfg.sweep == "iterations"
    seed = algorithm_seed(cfg.seed, 0 if iterations else grid_index, repetition)
    memo = {} if memo is None else memo
    rng = np.random.default_rng(seed)
    st = _setting(cfg, ds, value, rng)
    algs = cfg.effective_algorithms
    out = {}
    cr_tri = None

    def need_cr_tri():
        nonlocal cr_tri
        if cr_tri is None:
            t0 = time.perf_counter()
            cr_tri = (_run_cr_tri(cfg, ds, st, seed), time.perf_counter() - t0)
        return cr_tri

    if iterations and "setting" in memo:
        st = memo["setting"]
    memo["setting"] = st

    for alg in algs:
        t0 = time.perf_counter()
        if alg == "SourceCR":
            fw = cfg.framework(seed, budget=st.budget)
            if iterations:
                fw = dataclasses.replace(fw, max_outer=max(int(v) for v in cfg.effective_grid))
            res = memo.get("SourceCR")
            if res is None:
                res = run_sourcecr(
                    ds.graph,
                    ds.opinions,
                    ds.outcomes,
                    fw,
                    priors=st.priors,
                    answer_reliabilities=ds.true_reliability,
                    truths=ds.truths,
                    cache=ds.cache,
                )
                if iterations:
                    memo["SourceCR"] = res
            if iterations:
                row = res.trace[min(int(value), len(res.trace)) - 1]
                m = {
                    "error_of_reliability": row["reliability_error"],
                    "accuracy_of_credibility": row["accuracy"],
                    "source_detection_rate": row["detection_rate"],
                }
            else:
                m = _metrics(ds, res.reliability, res.verdicts, res.detections)
            out[alg] = (m, time.perf_counter() - t0)
        elif alg == "CR-TRI":
            if iterations and "CR-TRI" in memo:
                cr_tri = memo["CR-TRI"]
            state, dt = need_cr_tri()
            if iterations:
                memo["CR-TRI"] = cr_tri
            m = _metrics(ds, state.reliability_map(), classify_claims(state.credibility_map()), None)
            out[alg] = (m, dt)
        elif alg == "Q-SI":
            state, dt = need_cr_tri()
            t0 = time.perf_counter()
            noisy = perturb_reliability(ds.true_reliability, st.rel_offset, rng)
            lam = state.credibility_map()
            dets = detect_sources(
                ds.graph,
                ds.opinions,
                lam,
                noisy,
                ds.outcomes,
                st.budget,
                cfg.rounds,
                answer_reliabilities=ds.true_reliability,
                seed=seed,
                cache=ds.cache,
                candidate_rule=cfg.candidate_rule,
            )
            m = _metrics(ds, noisy, classify_claims(lam), dets)
            out[alg] = (m, dt + time.perf_counter() - t0)
        else:
            plugin = _load_plugin(getattr(cfg, PLUGIN_SLOTS[alg]))
            res = plugin(ds, cfg, value, seed)
            m = {k: float(res.get(k, math.nan)) for k in METRICS}
            out[alg] = (m, time.perf_counter() - t0)
    return out


def _load_plugin(target: str):
    mod, _, name = target.partition(":")
    if not name:
        raise ConfigError(f"plug-in must look like module:callable, got {target!r}")
    return getattr(importlib.import_module(mod), name)


# ----------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[tuple]
    runs: dict[tuple, list[float]] = field(repr=False)
    seconds_per_claim: dict[str, float] = field(default_factory=dict)

    def values(self, value, algorithm: str, metric: str) -> list[float]:
        return self.runs[(value, algorithm, metric)]

    def mean(self, value, algorithm: str, metric: str) -> float:
        for v, a, m, mean, _, _ in self.rows:
            if v == value and a == algorithm and m == metric:
                return mean
        raise KeyError((value, algorithm, metric))

    def summary(self) -> dict:
        return {
            "config": dataclasses.asdict(self.config),
            "rows": [
                {"sweep_value": v, "algorithm": a, "metric": m, "mean": _json_num(mu), "std": _json_num(sd), "n": n}
                for v, a, m, mu, sd, n in self.rows
            ],
            "runs": [
                {"sweep_value": v, "algorithm": a, "metric": m, "values": [_json_num(x) for x in xs]}
                for (v, a, m), xs in self.runs.items()
            ],
            "seconds_per_claim": self.seconds_per_claim,
        }


def _json_num(x: float):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def _aggregate(xs: Sequence[float]) -> tuple[float, float, int]:
    arr = np.asarray([x for x in xs if not math.isnan(x)], dtype=np.float64)
    if arr.size == 0:
        return math.nan, math.nan, 0
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), sd, int(arr.size)


def run_experiment(cfg: ExperimentConfig, pool: DatasetPool | None = None) -> ExperimentResult:
    """Run every (grid point, repetition, algorithm) and average over repetitions.

    ``std`` is the sample standard deviation; metrics that do not apply to
    an algorithm (detection for CR-TRI) are NaN with ``n = 0``.
    """
    cfg.validate()
    grid = cfg.effective_grid
    algs = cfg.effective_algorithms
    runs: dict[tuple, list[float]] = {(v, a, m): [] for v in grid for a in algs for m in METRICS}
    elapsed = {a: 0.0 for a in algs}
    n_claims_seen = 0
    for rep in range(cfg.repetitions):
        # without a shared pool each dataset is dropped after its repetition
        ds = (pool if pool is not None else DatasetPool()).get(cfg, dataset_seed(cfg.seed, rep))
        memo: dict = {}
        for gi, value in enumerate(grid):
            res = run_repetition(cfg, ds, gi, value, rep, memo)
            for alg, (metrics, dt) in res.items():
                elapsed[alg] += dt
                for m in METRICS:
                    runs[(value, alg, m)].append(float(metrics[m]))
            n_claims_seen += ds.opinions.n_claims
        log.info("repetition %d/%d done", rep + 1, cfg.repetitions)
    rows = []
    for v in grid:
        for a in algs:
            for m in METRICS:
                mu, sd, n = _aggregate(runs[(v, a, m)])
                rows.append((v, a, m, mu, sd, n))
    per_claim = {a: elapsed[a] / max(n_claims_seen, 1) for a in algs}
    result = ExperimentResult(cfg, rows, runs, per_claim)
    if cfg.out:
        write_experiment(result, cfg.out)
    return result


def write_experiment(result: ExperimentResult, out_dir) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    json_path = os.path.join(out_dir, "summary.json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep_value", "algorithm", "metric", "mean", "std", "n"])
        for v, a, m, mu, sd, n in result.rows:
            w.writerow([v, a, m, repr(mu), repr(sd), n])
    with open(json_path, "w") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
