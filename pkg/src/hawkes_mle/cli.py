"""Command line: simulate, fit, benchmark, consistency, stationarity, ingestion.

Exit codes: 0 success, 1 usage/config error, 2 domain error (non-stationary
parameters, infeasible initialization), 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments
from .io import (
    ConfigError,
    DataError,
    domain_from_config,
    hyperparams_from_config,
    ingest_lobster,
    ingest_memetracker,
    init_from_config,
    load_config,
    read_events,
    read_params,
    spec_from_config,
    write_events,
    write_params,
    write_trace,
)
from .likelihood import LikelihoodProblem
from .model import (
    DomainError,
    NonStationaryError,
    branching_matrix,
    spectral_radius,
    stationary_mean_intensity,
)
from .optim import (
    HyperParamsError,
    InfeasibleInitError,
    run_aa_ipalm,
    run_ipalm,
    run_palm,
)
from .simulate import SimConfig, simulate_cluster, simulate_thinning

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_DATA = 3


def cmd_simulate(args):
    doc = load_config(args.config, require=("model", "init", "horizon"))
    spec = spec_from_config(doc)
    params = init_from_config(doc, spec)
    params.validate(spec)
    horizon = args.horizon if args.horizon is not None else float(doc["horizon"])
    config = SimConfig(seed=args.seed, max_events=args.max_events)
    sim = simulate_cluster if args.method == "cluster" else simulate_thinning
    events = sim(spec, params, horizon, config)
    write_events(args.out, events)
    lam_bar = stationary_mean_intensity(spec, params)
    counts = events.counts(spec.K)
    rate = counts / horizon if horizon > 0 else np.zeros(spec.K)
    print(f"wrote {len(events)} events to {args.out} (horizon {horizon})")
    for i in range(spec.K):
        print(
            f"type {i}: count {counts[i]}, empirical rate {rate[i]:.6g}, "
            f"stationary mean {lam_bar[i]:.6g}"
        )
    return EXIT_OK


_RUNNERS = {"palm": run_palm, "ipalm": run_ipalm, "aa-ipalm": run_aa_ipalm}


def cmd_fit(args):
    doc = load_config(
        args.config,
        require=("model", "domain", "init", "regularization", "optimizer", "horizon"),
    )
    spec = spec_from_config(doc)
    domain = domain_from_config(doc, spec)
    init = init_from_config(doc, spec)
    reg_c = float(doc["regularization"]["C"])
    if reg_c < 0:
        raise ConfigError("regularization: C must be nonnegative")
    horizon = float(doc["horizon"])
    hp, algorithm = hyperparams_from_config(
        doc, allow_noncompliant=args.allow_noncompliant_hp,
        algo=args.algo, iters=args.iters,
    )
    hp.validate()
    events = read_events(args.events, horizon=horizon)
    try:
        problem = LikelihoodProblem(spec, events, domain, reg_c=reg_c)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    res = _RUNNERS[algorithm](problem, hp, init)
    meta = {
        "algorithm": algorithm,
        "iterations": hp.max_iters,
        "accepted_aa": res.accepted_aa,
        "rejected_aa": res.rejected_aa,
        "events": args.events,
        "n_events": len(events),
        "horizon": horizon,
        "reg_c": reg_c,
    }
    write_params(args.out, spec, res.params, objective=res.final_objective, meta=meta)
    if args.trace:
        write_trace(args.trace, res.trace)
    print(
        f"fit {algorithm}: {hp.max_iters} iterations, "
        f"final objective {res.final_objective:.6f}, wrote {args.out}"
    )
    return EXIT_OK


def cmd_check_stationarity(args):
    spec, params, _, _ = read_params(args.params)
    params.validate(spec)
    G = branching_matrix(spec, params)
    radius = spectral_radius(G)
    print("branching matrix:")
    for row in G:
        print("  " + " ".join(f"{v:.6g}" for v in row))
    print(f"spectral radius: {radius:.6g}")
    if radius >= 1.0:
        print("non-stationary: spectral radius >= 1")
        return EXIT_DOMAIN
    lam_bar = np.linalg.solve(np.eye(spec.K) - G, params.mu)
    print("stationary mean intensity: " + " ".join(f"{v:.6g}" for v in lam_bar))
    return EXIT_OK


def _instance_from_config(doc):
    recipe_field = doc.get("recipe", "exp-k10")
    kw = {}
    if "K" in doc:
        kw["K"] = int(doc["K"])
    if "horizon" in doc:
        kw["horizon"] = float(doc["horizon"])
    seed = int(doc.get("recipe_seed", 0))
    if recipe_field == "exp-k10":
        return experiments.gen_synthetic_exponential(seed, **kw)
    if recipe_field == "pwl-k10":
        return experiments.gen_synthetic_powerlaw(seed, **kw)
    if isinstance(recipe_field, dict):
        try:
            recipe = experiments.SyntheticRecipe(**{"seed": seed, **recipe_field, **kw})
        except TypeError as exc:
            raise ConfigError(f"recipe: {exc}") from None
        return experiments.generate_instance(recipe)
    raise ConfigError(f"unknown recipe {recipe_field!r}")


def cmd_benchmark(args):
    try:
        with open(args.config) as f:
            doc = json.load(f)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{args.config}: {exc}") from None
    instance = _instance_from_config(doc)
    report = experiments.run_benchmark(
        instance,
        algorithms=tuple(doc.get("algorithms", experiments.ALGORITHMS)),
        iters=doc.get("iters"),
        seeds=tuple(doc.get("seeds", (0, 1, 2, 3, 4))),
    )
    report.write(args.out)
    for algo in report.algorithms:
        print(f"{algo}: median final objective {report.median_final(algo):.6f}")
    print(f"wrote report to {args.out}")
    return EXIT_OK


def cmd_consistency(args):
    try:
        with open(args.config) as f:
            doc = json.load(f)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{args.config}: {exc}") from None
    recipe_field = doc.get("recipe", {})
    seed = int(doc.get("recipe_seed", 0))
    if isinstance(recipe_field, dict):
        try:
            recipe = experiments.SyntheticRecipe(**{"seed": seed, **recipe_field})
        except TypeError as exc:
            raise ConfigError(f"recipe: {exc}") from None
    elif recipe_field == "exp-k10":
        recipe = experiments.SyntheticRecipe(kind="exp-k10", seed=seed)
    elif recipe_field == "pwl-k10":
        recipe = experiments.SyntheticRecipe(
            kind="pwl-k10", family="powerlaw", beta_true=1.5,
            alpha_divisor=200.0, seed=seed,
        )
    else:
        raise ConfigError(f"unknown recipe {recipe_field!r}")
    report = experiments.run_consistency_study(
        recipe,
        doc.get("T_grid", [200.0, 2000.0]),
        seeds_per_T=int(doc.get("seeds_per_T", 10)),
        iters=int(doc.get("iters", 300)),
        box_scale=doc.get("box_scale", 10.0),
    )
    report.write(args.out)
    for T, med in sorted(report.medians.items()):
        print(f"T={T:g}: median relative error {med:.6g}")
    print(f"wrote report to {args.out}")
    return EXIT_OK


def cmd_ingest_lobster(args):
    summary = ingest_lobster(
        args.messages, args.types, args.out, max_bad_fraction=args.max_bad_fraction
    )
    print(
        f"read {summary['rows_read']} rows: wrote {summary['rows_written']}, "
        f"dropped {summary['rows_unmapped']} unmapped, "
        f"{summary['rows_bad']} unparseable"
    )
    return EXIT_OK


def cmd_ingest_memetracker(args):
    summary = ingest_memetracker(args.posts, args.groups, args.out)
    print(
        f"wrote {summary['rows_written']} events, "
        f"dropped {summary['rows_unmapped']} unmapped"
    )
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="hawkes-mle",
        description="Simulate multivariate Hawkes processes and fit "
        "regularized MLEs with PALM, iPALM, or Anderson-accelerated iPALM.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="sample an event stream")
    s.add_argument("--config", required=True)
    s.add_argument("--horizon", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--method", choices=("cluster", "thinning"), default="cluster")
    s.add_argument("--max-events", type=int, default=10_000_000)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", help="fit parameters to an event stream")
    s.add_argument("--events", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--algo", choices=("palm", "ipalm", "aa-ipalm"), default=None)
    s.add_argument("--iters", type=int, default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--trace", default=None)
    s.add_argument("--allow-noncompliant-hp", action="store_true")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("benchmark", help="compare algorithms on a synthetic recipe")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("consistency", help="parameter error vs observation horizon")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_consistency)

    s = sub.add_parser("check-stationarity", help="branching matrix diagnostics")
    s.add_argument("--params", required=True)
    s.set_defaults(func=cmd_check_stationarity)

    s = sub.add_parser("ingest-lobster", help="order-book messages to event CSV")
    s.add_argument("--messages", required=True)
    s.add_argument("--types", required=True, help="JSON mapping event code -> L|M|C")
    s.add_argument("--out", required=True)
    s.add_argument("--max-bad-fraction", type=float, default=0.01)
    s.set_defaults(func=cmd_ingest_lobster)

    s = sub.add_parser("ingest-memetracker", help="posting log to event CSV")
    s.add_argument("--posts", required=True, help="CSV with header time,url")
    s.add_argument("--groups", required=True, help="JSON mapping url -> type index")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest_memetracker)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, HyperParamsError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonStationaryError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (DomainError, InfeasibleInitError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def console_entry():
    raise SystemExit(main())
