"""Command-line driver: run, sweep, verify-bounds, oracle-check."""

from __future__ import annotations

import argparse
import json
import sys

from .graphs import GraphError
from .harness import (
    ExperimentConfig,
    GraphSpec,
    default_corpus,
    reports_to_csv,
    run_oracle_checks,
    run_trials,
    scaling_sweep,
    verify_bounds,
)

EXPECTATION_REL_TOL = 1e-9


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="family: complete|star|wheel|complete_bipartite|er_diam2")
    p.add_argument("--n", help="node count (run) or comma list of counts (sweep)")
    p.add_argument("--a", type=int, help="left part size for complete_bipartite")
    p.add_argument("--b", type=int, help="right part size for complete_bipartite")
    p.add_argument("--p", type=float, help="edge probability for er_diam2")
    p.add_argument("--file", help="edge-list file instead of a generated family")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    _add_graph_args(p)
    p.add_argument("--trials", type=int, help="trials per point (default 10000)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--engine", choices=["fast", "message"], help="execution path (default fast)")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], help="output format")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--config", help="JSON config file mirroring the experiment config")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="d2elect")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo trials on one graph")
    _add_run_args(run)

    sweep = sub.add_parser("sweep", help="trials across a list of sizes")
    _add_run_args(sweep)

    vb = sub.add_parser("verify-bounds", help="deterministic bound checks over a corpus")
    vb.add_argument("--seed", type=int, default=0)
    vb.add_argument("--er-instances", type=int, default=50)
    vb.add_argument("--max-n", type=int, default=2048)
    vb.add_argument("--chain-limit", type=int, default=1 << 20)
    vb.add_argument("--format", dest="fmt", choices=["text", "json"], default="text")
    vb.add_argument("--out", help="output path (default stdout)")

    oc = sub.add_parser("oracle-check", help="cross-check the simulator against the exact law")
    oc.add_argument("--trials", type=int, default=10_000)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--out", help="output path (default stdout)")
    return ap


def _load_config(args) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
    gdict = dict(raw.get("graph", {}))
    if args.graph is not None:
        gdict["family"] = args.graph
    if args.file is not None:
        gdict["path"] = args.file
    if args.a is not None:
        gdict["a"] = args.a
    if args.b is not None:
        gdict["b"] = args.b
    if args.p is not None:
        gdict["p"] = args.p

    n_values: list[int] = [int(x) for x in raw.get("n_values", [])]
    if args.n is not None:
        n_values = [int(x) for x in str(args.n).split(",") if x]
    if args.command == "run":
        if len(n_values) > 1:
            raise ValueError("run takes a single --n; use sweep for lists")
        if n_values:
            gdict["n"] = n_values[0]
        n_values = []
    if "graph_seed" not in gdict:
        gdict["graph_seed"] = args.seed if args.seed is not None else raw.get("seed", 0)

    def pick(cli_val, key, default):
        if cli_val is not None:
            return cli_val
        return raw.get(key, default)

    return ExperimentConfig(
        graph=GraphSpec(**gdict),
        n_values=tuple(n_values),
        trials=pick(args.trials, "trials", 10_000),
        seed=pick(args.seed, "seed", 0),
        output_format=pick(args.fmt, "format", "csv"),
        out=pick(args.out, "out", None),
        jobs=pick(args.jobs, "jobs", 1),
        engine=pick(args.engine, "engine", "fast"),
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    config = _load_config(args)
    reports = [run_trials(config)] if args.command == "run" else scaling_sweep(config)
    if config.output_format == "csv":
        text = reports_to_csv(reports)
    else:
        payload = reports[0].to_dict() if args.command == "run" else [r.to_dict() for r in reports]
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, config.out)
    bad = sum(r.safety_violations for r in reports)
    if bad:
        print(f"SAFETY VIOLATIONS: {bad}", file=sys.stderr)
        for r in reports:
            if r.first_violation:
                print(f"  {r.family} n={r.n}: {r.first_violation}", file=sys.stderr)
        return 1
    return 0


def _cmd_verify_bounds(args) -> int:
    corpus = default_corpus(seed=args.seed, er_instances=args.er_instances, max_n=args.max_n)
    listing = verify_bounds(corpus, chain_limit=args.chain_limit)
    if args.fmt == "json":
        payload = {
            "ok": listing.ok,
            "entries": [
                {"label": label, "ok": ok, "violations": v} for label, ok, v in listing.entries
            ],
            "chain_violations": listing.chain_violations,
            "case3_violations": listing.case3_violations,
        }
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _emit("\n".join(listing.lines()) + "\n", args.out)
    return 0 if listing.ok else 1


def _cmd_oracle_check(args) -> int:
    results = run_oracle_checks(trials=args.trials, seed=args.seed)
    lines = []
    ok = True
    for label, report, rel in results:
        good = report.ok and rel <= EXPECTATION_REL_TOL
        ok = ok and good
        detail = f"{report.discrepancies} discrepancies, expectation rel err {rel:.2e}"
        lines.append(f"{'PASS' if good else 'FAIL'} {label} ({detail})")
        if report.first_divergence:
            lines.append(f"  {report.first_divergence}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in ("run", "sweep"):
            return _cmd_run(args)
        if args.command == "verify-bounds":
            return _cmd_verify_bounds(args)
        return _cmd_oracle_check(args)
    except (GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
