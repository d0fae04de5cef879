"""Command-line entry point: ``sourcecr <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from typing import Sequence

from . import __version__
from .bounds import BoundInputs, bound_report
from .experiment import ConfigError, ExperimentConfig, load_config, parse_config_text, run_experiment
from .framework import FrameworkConfig, classify_claims, init_priors, run_sourcecr, write_outer_trace_csv
from .graph import generate_random_graph, read_edge_list, write_edge_list
from .io import (
    ensure_dir,
    load_claim_labels_csv,
    load_mapping_csv,
    load_opinions_csv,
    load_sources_csv,
    load_spread_csv,
    write_claim_labels_csv,
    write_opinions_csv,
    write_reliability_csv,
    write_sources_csv,
    write_spread_csv,
)
from .metrics import accuracy_of_credibility, error_of_reliability, ground_truth_reliability, source_detection_rate
from .querying import CANDIDATE_RULES, detect_sources, write_transcripts_csv
from .spread import ClaimGroundTruth, SpreadConfig, generate_dataset, labels_of
from .training import M_STEP_VARIANTS, train, write_trace_csv

log = logging.getLogger("sourcecr")


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_claim_results(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim_id", "credibility", "verdict", "pros_source", "cons_source"])
        for c, lam, verdict, ps, cs in rows:
            w.writerow([c, repr(lam), "truth" if verdict == 1 else "rumor", "" if ps is None else ps, "" if cs is None else cs])


def _common(p: argparse.ArgumentParser, *, budget=True, tol=True) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    if budget:
        p.add_argument("--budget", type=int, default=None, help="query budget K per subnetwork (default 60)")
        p.add_argument("--rounds", type=int, default=None, help="rounds r per respondent (default 3)")
    if tol:
        p.add_argument("--tol-inner", type=float, default=None, help="EM tolerance on reliabilities (default 0.01)")
        p.add_argument("--tol-outer", type=float, default=None, help="outer tolerance on credibility (default 0.001)")
    p.add_argument("--out", default=None, help="output directory (default: current directory)")


def _pick(cli_value, cfg: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    return cfg.get(key, default)


def _read_config(path) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return parse_config_text(fh.read(), path)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_simulate(a) -> int:
    seed = a.seed or 0
    out = ensure_dir(a.out or ".")
    if a.graph:
        g = read_edge_list(a.graph)
    else:
        g = generate_random_graph(a.nodes, a.avg_degree, seed)
    x, truths, outcomes = generate_dataset(g, a.claims, a.truth_fraction, SpreadConfig(a.p, a.rate, seed))
    write_edge_list(g, os.path.join(out, "graph.edges"))
    write_opinions_csv(x, os.path.join(out, "opinions.csv"))
    write_claim_labels_csv(labels_of(truths), os.path.join(out, "labels.csv"))
    write_sources_csv(truths, os.path.join(out, "sources.csv"))
    write_spread_csv(outcomes, os.path.join(out, "spread.csv"))
    _write_json(
        {"nodes": g.n_nodes, "edges": g.n_edges, "claims": x.n_claims, "opinions": x.nnz, "seed": seed},
        os.path.join(out, "summary.json"),
    )
    print(f"wrote {x.n_claims} claims over {g.n_nodes} users to {out}")
    return 0


def _priors_for(a, x, labels, seed):
    if a.priors:
        return load_mapping_csv(a.priors, "claim_id", "prior")
    if a.prior_offset is not None:
        if labels is None:
            raise SystemExit("--prior-offset needs --labels")
        return init_priors(x.claims, offset=a.prior_offset, labels=labels)
    return init_priors(x.claims, seed)


def cmd_train(a) -> int:
    seed = a.seed or 0
    out = ensure_dir(a.out or ".")
    x = load_opinions_csv(a.opinions)
    labels = load_claim_labels_csv(a.labels) if a.labels else None
    priors = _priors_for(a, x, labels, seed)
    state = train(
        x,
        priors,
        a.tol_inner if a.tol_inner is not None else 0.01,
        max_iter=a.max_iter,
        seed=seed,
        m_step_variant=a.m_step,
        record_trace=True,
    )
    lam = state.credibility_map()
    verdicts = classify_claims(lam)
    _write_claim_results([(c, lam[c], verdicts[c], None, None) for c in sorted(lam)], os.path.join(out, "credibility.csv"))
    write_reliability_csv(state.eta_pos_map(), state.eta_neg_map(), os.path.join(out, "reliability.csv"))
    write_trace_csv(state.trace, os.path.join(out, "trace.csv"))
    summary = {"iterations": state.iteration, "converged": state.converged}
    if labels is not None:
        truth = ground_truth_reliability(x, labels)
        summary["accuracy_of_credibility"] = accuracy_of_credibility(verdicts, labels)
        summary["error_of_reliability"] = error_of_reliability(state.reliability_map(), truth)
    _write_json(summary, os.path.join(out, "summary.json"))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_detect(a) -> int:
    seed = a.seed or 0
    out = ensure_dir(a.out or ".")
    g = read_edge_list(a.graph)
    x = load_opinions_csv(a.opinions, users=g.nodes)
    outcomes = load_spread_csv(a.spread)
    lam = load_mapping_csv(a.credibility, "claim_id", "credibility")
    rel = load_mapping_csv(a.reliability, "user_id", "reliability")
    labels = load_claim_labels_csv(a.labels) if a.labels else None
    answer_rel = ground_truth_reliability(x, labels) if labels is not None else None
    dets = detect_sources(
        g,
        x,
        lam,
        rel,
        outcomes,
        a.budget or 60,
        a.rounds or 3,
        answer_reliabilities=answer_rel,
        seed=seed,
        keep_transcripts=True,
        candidate_rule=a.candidate_rule,
    )
    _write_claim_results(
        [(d.claim_id, lam[d.claim_id], 1 if lam[d.claim_id] >= 0.5 else -1, d.pros_source, d.cons_source) for d in dets],
        os.path.join(out, "detected.csv"),
    )
    write_transcripts_csv(dets, os.path.join(out, "transcripts.csv"))
    truths = [ClaimGroundTruth(o.claim_id, 1, o.pros_source, o.cons_source) for o in outcomes]
    summary = {"claims": len(dets), "source_detection_rate": source_detection_rate(dets, truths)}
    _write_json(summary, os.path.join(out, "summary.json"))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_run(a) -> int:
    conf = _read_config(a.config)
    graph_path = _pick(a.graph, conf, "graph_path", None)
    opinions_path = _pick(a.opinions, conf, "opinions_path", None)
    spread_path = _pick(a.spread, conf, "spread_path", None)
    labels_path = _pick(a.labels, conf, "labels_path", None)
    sources_path = _pick(a.sources, conf, "sources_path", None)
    missing = [n for n, v in (("--graph", graph_path), ("--opinions", opinions_path), ("--spread", spread_path)) if not v]
    if missing:
        raise SystemExit(f"run needs {', '.join(missing)} (flags or config keys)")
    cfg = FrameworkConfig(
        budget=_pick(a.budget, conf, "budget", 60),
        rounds=_pick(a.rounds, conf, "rounds", 3),
        tol_inner=_pick(a.tol_inner, conf, "tol_inner", 0.01),
        tol_outer=_pick(a.tol_outer, conf, "tol_outer", 0.001),
        max_outer=_pick(a.max_outer, conf, "max_outer", 50),
        max_inner=_pick(a.max_inner, conf, "max_inner", 500),
        m_step=_pick(a.m_step, conf, "m_step", "ratio"),
        warm_start=_pick(a.warm_start, conf, "warm_start", True),
        candidate_rule=_pick(a.candidate_rule, conf, "candidate_rule", "union"),
        seed=_pick(a.seed, conf, "seed", 0),
    )
    out = ensure_dir(_pick(a.out, conf, "out", None) or ".")
    g = read_edge_list(graph_path)
    x = load_opinions_csv(opinions_path, users=g.nodes)
    outcomes = load_spread_csv(spread_path)
    labels = load_claim_labels_csv(labels_path) if labels_path else None
    truths = None
    answer_rel = None
    if labels is not None:
        answer_rel = ground_truth_reliability(x, labels)
        if sources_path:
            truths = load_sources_csv(sources_path, labels)
        else:
            truths = [ClaimGroundTruth(o.claim_id, labels[o.claim_id], o.pros_source, o.cons_source) for o in outcomes]
    res = run_sourcecr(g, x, outcomes, cfg, answer_reliabilities=answer_rel, truths=truths)
    _write_claim_results(res.rows(), os.path.join(out, "claims.csv"))
    write_reliability_csv(res.state.eta_pos_map(), res.state.eta_neg_map(), os.path.join(out, "reliability.csv"))
    write_outer_trace_csv(res.trace, os.path.join(out, "trace.csv"))
    summary = {"iterations": res.iterations, "converged": res.converged}
    if truths is not None:
        summary["accuracy_of_credibility"] = accuracy_of_credibility(res.verdicts, labels)
        summary["error_of_reliability"] = error_of_reliability(res.reliability, answer_rel)
        summary["source_detection_rate"] = source_detection_rate(res.detections, truths)
    _write_json(summary, os.path.join(out, "summary.json"))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_bounds(a) -> int:
    inp = BoundInputs(a.degree, a.budget or 60, a.rounds or 3, a.delta, a.eta_max, a.eta_min, a.entropy)
    rep = bound_report(inp, a.k_max)
    if a.json:
        print(json.dumps(rep.as_dict(), indent=2, sort_keys=True))
    else:
        print(rep.format())
    return 0


def cmd_experiment(a) -> int:
    overrides = {
        "seed": a.seed,
        "budget": a.budget,
        "rounds": a.rounds,
        "tol_inner": a.tol_inner,
        "tol_outer": a.tol_outer,
        "out": a.out,
        "sweep": a.sweep,
        "repetitions": a.repetitions,
        "grid": tuple(a.grid) if a.grid else None,
        "algorithms": tuple(a.algorithms) if a.algorithms else None,
    }
    if a.config:
        cfg = load_config(a.config, **overrides)
    else:
        cfg = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    if cfg.out is None:
        cfg = dataclasses.replace(cfg, out=".")
    result = run_experiment(cfg)
    for v, alg, m, mu, sd, n in result.rows:
        print(f"{v!s:>8}  {alg:<9} {m:<24} {mu:.4f} +/- {sd:.4f} (n={n})")
    return 0


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sourcecr", description="Joint claim-truth and source inference.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic graph, spreads and opinions")
    _common(p, budget=False, tol=False)
    p.add_argument("--graph", help="use this edge list instead of a random graph")
    p.add_argument("--nodes", type=int, default=500)
    p.add_argument("--avg-degree", type=float, default=10.0)
    p.add_argument("--claims", type=int, default=100)
    p.add_argument("--p", type=float, default=0.6, help="per-edge transmission probability")
    p.add_argument("--rate", type=float, default=1.0, help="exponential delay rate")
    p.add_argument("--truth-fraction", type=float, default=0.5)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="credibility/reliability EM only")
    _common(p, budget=False)
    p.add_argument("--opinions", required=True)
    p.add_argument("--labels", help="claim labels, for metrics and --prior-offset")
    p.add_argument("--priors", help="CSV claim_id,prior")
    p.add_argument("--prior-offset", type=float, help="label-anchored priors with this offset")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--m-step", choices=M_STEP_VARIANTS, default="ratio")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="division-querying only, from credibility/reliability files")
    _common(p, tol=False)
    p.add_argument("--graph", required=True)
    p.add_argument("--opinions", required=True)
    p.add_argument("--spread", required=True, help="infection records (spread.csv)")
    p.add_argument("--credibility", required=True, help="CSV claim_id,credibility")
    p.add_argument("--reliability", required=True, help="CSV user_id,reliability")
    p.add_argument("--labels", help="claim labels; answers then follow true reliabilities")
    p.add_argument("--candidate-rule", choices=CANDIDATE_RULES, default="union")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("run", help="full SourceCR loop")
    _common(p)
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--graph")
    p.add_argument("--opinions")
    p.add_argument("--spread")
    p.add_argument("--labels")
    p.add_argument("--sources")
    p.add_argument("--max-outer", type=int)
    p.add_argument("--max-inner", type=int)
    p.add_argument("--m-step", choices=M_STEP_VARIANTS)
    p.add_argument("--cold-start", dest="warm_start", action="store_const", const=False, default=None)
    p.add_argument("--candidate-rule", choices=CANDIDATE_RULES)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bounds", help="budget bound report on d-regular trees")
    _common(p, tol=False)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--eta-max", type=float, default=0.9)
    p.add_argument("--eta-min", type=float, default=0.6)
    p.add_argument("--entropy", type=float, default=1.0, help="infection-time entropy H(T)")
    p.add_argument("--k-max", type=int, help="scan budgets up to this value")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", help="parameter sweeps")
    _common(p)
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--sweep", choices=("prior-offset", "reliability-offset", "budget", "iterations"))
    p.add_argument("--grid", type=float, nargs="+")
    p.add_argument("--algorithms", nargs="+")
    p.add_argument("--repetitions", type=int)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(a.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return a.func(a)
    except (ConfigError, ValueError, KeyError, OSError) as e:
        print(f"sourcecr {a.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
