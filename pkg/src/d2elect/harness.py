"""Batch experiment driver: seeded Monte Carlo trials, bound monitoring,
scaling sweeps, and deterministic machine-readable reports.

Trial t of a run with base seed s draws its coins and identifiers from
the (s, t) stream, so reports are reproducible byte-for-byte and
independent of execution order; parallel and serial runs merge to the
same result because all accumulators are integers reduced in trial order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import (
    bucket_indices,
    bucket_stats,
    check_case3_cap_arithmetic,
    check_degree_chain,
    check_graph_bounds,
    exact_expected_messages,
    expectation_upper,
    max_bucket_index,
    no_candidate_probability,
    tail_threshold,
)
from .engine import TrialRng
from .graphs import Graph, GraphFamily, IdAssignment, generate, load_edge_list
from .oracle import cross_check_protocol, enumerate_exact
from .protocol import elect, elect_fast

Z95 = 1.959963984540054  # two-sided 95% normal quantile

CSV_COLUMNS = [
    "n",
    "family",
    "trials",
    "mean_msgs",
    "stddev_msgs",
    "max_msgs",
    "exact_E_msgs",
    "expectation_upper",
    "tail_threshold",
    "tail_exceed",
    "failures",
    "exact_fail_prob",
    "fail_lo95",
    "fail_hi95",
    "normalized_mean",
]


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; stable near 0 and 1."""
    if trials <= 0:
        return (0.0, 1.0)
    ph = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = ph + z2 / (2.0 * trials)
    rad = z * math.sqrt(ph * (1.0 - ph) / trials + z2 / (4.0 * trials * trials))
    # the limits are exactly 0 / 1 at the boundaries; avoid rounding residue
    lo = 0.0 if successes == 0 else max(0.0, (center - rad) / denom)
    hi = 1.0 if successes == trials else min(1.0, (center + rad) / denom)
    return (lo, hi)


@dataclass(frozen=True)
class GraphSpec:
    """How to (re)build the graph of an experiment point."""

    family: str | None = None
    n: int | None = None
    a: int | None = None
    b: int | None = None
    p: float | None = None
    path: str | None = None
    graph_seed: int = 0

    def build(self) -> Graph:
        if self.path is not None:
            with open(self.path, "rb") as fh:
                return load_edge_list(fh.read())
        if self.family is None:
            raise ValueError("graph spec needs a family or a file path")
        fam = GraphFamily.parse(self.family)
        if fam is GraphFamily.COMPLETE_BIPARTITE:
            a, b = self.a, self.b
            if a is None and b is None and self.n is not None:
                a, b = self.n // 2, self.n - self.n // 2
            return generate(fam, a=a, b=b, seed=self.graph_seed)
        return generate(fam, n=self.n, p=self.p, seed=self.graph_seed)

    def label(self) -> str:
        if self.path is not None:
            return f"file:{os.path.basename(self.path)}"
        return GraphFamily.parse(self.family).value

    def with_n(self, n: int) -> "GraphSpec":
        return replace(self, n=n, a=None, b=None)


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec
    n_values: tuple = ()
    trials: int = 10_000
    seed: int = 0
    output_format: str = "csv"
    out: str | None = None
    jobs: int = 1
    engine: str = "fast"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(n < 2 for n in self.n_values):
            raise ValueError("sweep sizes must be >= 2")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")
        if self.engine not in ("fast", "message"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass
class _ChunkStats:
    """Integer accumulators for a range of trials (order-independent)."""

    trials: int = 0
    sum_msgs: int = 0
    sumsq_msgs: int = 0
    max_msgs: int = 0
    failures: int = 0
    tail_exceed: int = 0
    rounds_hist: dict = field(default_factory=dict)
    bucket_sums: np.ndarray | None = None
    safety_violations: int = 0
    first_violation: str | None = None

    def merge(self, other: "_ChunkStats") -> None:
        self.trials += other.trials
        self.sum_msgs += other.sum_msgs
        self.sumsq_msgs += other.sumsq_msgs
        self.max_msgs = max(self.max_msgs, other.max_msgs)
        self.failures += other.failures
        self.tail_exceed += other.tail_exceed
        for r, c in other.rounds_hist.items():
            self.rounds_hist[r] = self.rounds_hist.get(r, 0) + c
        if self.bucket_sums is None:
            self.bucket_sums = other.bucket_sums
        elif other.bucket_sums is not None:
            self.bucket_sums = self.bucket_sums + other.bucket_sums
        self.safety_violations += other.safety_violations
        if self.first_violation is None:
            self.first_violation = other.first_violation


def _run_chunk(g: Graph, start: int, stop: int, seed: int, engine: str) -> _ChunkStats:
    runner = elect_fast if engine == "fast" else elect
    threshold = tail_threshold(g.n)
    k = max_bucket_index(g.n)
    bidx = bucket_indices(g.degrees)
    acc = _ChunkStats(bucket_sums=np.zeros(k + 1, dtype=np.int64))
    for t in range(start, stop):
        rng = TrialRng(seed, t)
        ids = IdAssignment.random(g.n, rng.id_generator())
        out = runner(g, ids, rng)
        msgs = out.ledger.total
        acc.trials += 1
        acc.sum_msgs += msgs
        acc.sumsq_msgs += msgs * msgs
        acc.max_msgs = max(acc.max_msgs, msgs)
        acc.rounds_hist[out.rounds_used] = acc.rounds_hist.get(out.rounds_used, 0) + 1
        if msgs > threshold:
            acc.tail_exceed += 1
        if out.failed:
            acc.failures += 1
        else:
            expected_leader = ids.argmin_over(out.candidates)
            if out.leader != expected_leader:
                acc.safety_violations += 1
                if acc.first_violation is None:
                    acc.first_violation = (
                        f"trial {t}: leader {out.leader} is not the minimum-id candidate "
                        f"{expected_leader}"
                    )
        if out.candidates:
            members = np.fromiter(out.candidates, dtype=np.int64)
            acc.bucket_sums += np.bincount(bidx[members], minlength=k + 1)
    return acc


def _chunk_worker(args) -> _ChunkStats:
    spec, start, stop, seed, engine = args
    return _run_chunk(spec.build(), start, stop, seed, engine)


@dataclass(frozen=True)
class BucketTrialStats:
    i: int
    n_i: int
    mean_candidates: float
    exact_expected_candidates: float

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "n_i": self.n_i,
            "mean_candidates": self.mean_candidates,
            "exact_expected_candidates": self.exact_expected_candidates,
        }


@dataclass(frozen=True)
class TrialReport:
    """Aggregate statistics for one (graph, trial count) point."""

    n: int
    family: str
    trials: int
    mean_msgs: float
    stddev_msgs: float
    max_msgs: int
    exact_expected_messages: float
    expectation_upper: float
    tail_threshold: float
    tail_exceed: int
    failures: int
    exact_fail_prob: float
    fail_lo95: float
    fail_hi95: float
    normalized_mean: float
    rounds_histogram: dict
    bucket_candidates: list
    safety_violations: int
    first_violation: str | None
    engine: str
    seed: int

    def csv_row(self) -> list:
        return [
            self.n,
            self.family,
            self.trials,
            repr(self.mean_msgs),
            repr(self.stddev_msgs),
            self.max_msgs,
            repr(self.exact_expected_messages),
            repr(self.expectation_upper),
            repr(self.tail_threshold),
            self.tail_exceed,
            self.failures,
            repr(self.exact_fail_prob),
            repr(self.fail_lo95),
            repr(self.fail_hi95),
            repr(self.normalized_mean),
        ]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "family": self.family,
            "trials": self.trials,
            "mean_msgs": self.mean_msgs,
            "stddev_msgs": self.stddev_msgs,
            "max_msgs": self.max_msgs,
            "exact_E_msgs": self.exact_expected_messages,
            "expectation_upper": self.expectation_upper,
            "tail_threshold": self.tail_threshold,
            "tail_exceed": self.tail_exceed,
            "failures": self.failures,
            "exact_fail_prob": self.exact_fail_prob,
            "fail_lo95": self.fail_lo95,
            "fail_hi95": self.fail_hi95,
            "normalized_mean": self.normalized_mean,
            "rounds_histogram": {str(k): v for k, v in sorted(self.rounds_histogram.items())},
            "bucket_candidates": [b.to_dict() for b in self.bucket_candidates],
            "safety_violations": self.safety_violations,
            "first_violation": self.first_violation,
            "engine": self.engine,
            "seed": self.seed,
        }


def run_point(
    g: Graph,
    family: str,
    trials: int,
    seed: int,
    engine: str = "fast",
    jobs: int = 1,
    spec: GraphSpec | None = None,
) -> TrialReport:
    """Run `trials` independent seeded elections on one graph."""
    if jobs > 1 and spec is not None and trials >= 4 * jobs:
        chunk = -(-trials // jobs)
        tasks = [
            (spec, lo, min(lo + chunk, trials), seed, engine) for lo in range(0, trials, chunk)
        ]
        acc = _ChunkStats()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_chunk_worker, tasks):
                acc.merge(part)
    else:
        acc = _run_chunk(g, 0, trials, seed, engine)

    mean = acc.sum_msgs / trials
    if trials > 1:
        num = trials * acc.sumsq_msgs - acc.sum_msgs * acc.sum_msgs
        stddev = math.sqrt(num / (trials * (trials - 1)))
    else:
        stddev = 0.0
    lo, hi = wilson_interval(acc.failures, trials)
    stats = bucket_stats(g)
    buckets = [
        BucketTrialStats(
            i=s.i,
            n_i=s.n_i,
            mean_candidates=float(acc.bucket_sums[s.i]) / trials,
            exact_expected_candidates=s.exact_expected_candidates,
        )
        for s in stats
        if s.n_i > 0
    ]
    return TrialReport(
        n=g.n,
        family=family,
        trials=trials,
        mean_msgs=mean,
        stddev_msgs=stddev,
        max_msgs=acc.max_msgs,
        exact_expected_messages=exact_expected_messages(g),
        expectation_upper=expectation_upper(g.n),
        tail_threshold=tail_threshold(g.n),
        tail_exceed=acc.tail_exceed,
        failures=acc.failures,
        exact_fail_prob=no_candidate_probability(g),
        fail_lo95=lo,
        fail_hi95=hi,
        normalized_mean=mean / (g.n * (1.0 + math.log2(g.n))),
        rounds_histogram=acc.rounds_hist,
        bucket_candidates=buckets,
        safety_violations=acc.safety_violations,
        first_violation=acc.first_violation,
        engine=engine,
        seed=seed,
    )


def run_trials(config: ExperimentConfig) -> TrialReport:
    """Execute one experiment point described by `config`."""
    spec = config.graph
    return run_point(
        spec.build(),
        spec.label(),
        config.trials,
        config.seed,
        engine=config.engine,
        jobs=config.jobs,
        spec=spec,
    )


def scaling_sweep(config: ExperimentConfig) -> list[TrialReport]:
    """One TrialReport per n in config.n_values."""
    if not config.n_values:
        raise ValueError("scaling_sweep needs n_values")
    reports = []
    for n in config.n_values:
        spec = config.graph.with_n(int(n))
        reports.append(
            run_point(
                spec.build(),
                spec.label(),
                config.trials,
                config.seed,
                engine=config.engine,
                jobs=config.jobs,
                spec=spec,
            )
        )
    return reports


def reports_to_csv(reports: list[TrialReport]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        lines.append(",".join(str(x) for x in r.csv_row()))
    return "\n".join(lines) + "\n"


# --- deterministic bound verification --------------------------------------

DEFAULT_FAMILY_SIZES = (8, 16, 32, 64, 128, 256, 512, 1024, 2048)
DEFAULT_ER_SIZES = (8, 11, 16, 23, 32, 45, 64, 91, 128, 181, 256, 362, 512, 724, 1024, 1448, 2048)


def default_corpus(seed: int = 0, er_instances: int = 50, max_n: int = 2048):
    """Yield (label, graph) pairs covering every family plus random
    diameter-two instances."""
    for n in DEFAULT_FAMILY_SIZES:
        if n > max_n:
            continue
        yield f"star(n={n})", generate("star", n=n)
        yield f"wheel(n={n})", generate("wheel", n=n)
        yield f"complete(n={n})", generate("complete", n=n)
        yield f"complete_bipartite(a={n // 2},b={n - n // 2})", generate(
            "complete_bipartite", a=n // 2, b=n - n // 2
        )
    sizes = [n for n in DEFAULT_ER_SIZES if n <= max_n]
    for j in range(er_instances):
        n = sizes[j % len(sizes)]
        yield f"er_diam2(n={n},seed={seed + j})", generate("er_diam2", n=n, seed=seed + j)


@dataclass
class BoundsListing:
    """Per-graph pass/fail entries plus the arithmetic-only scans."""

    entries: list  # (label, ok, [violation strings])
    chain_violations: list
    case3_violations: list

    @property
    def ok(self) -> bool:
        return (
            all(ok for _, ok, _ in self.entries)
            and not self.chain_violations
            and not self.case3_violations
        )

    def lines(self) -> list[str]:
        out = []
        for label, ok, violations in self.entries:
            out.append(f"{'PASS' if ok else 'FAIL'} {label}")
            out.extend(f"  {v}" for v in violations)
        out.append(f"{'PASS' if not self.chain_violations else 'FAIL'} per-degree chain scan")
        out.extend(f"  {v}" for v in self.chain_violations)
        out.append(f"{'PASS' if not self.case3_violations else 'FAIL'} case-III cap arithmetic scan")
        out.extend(f"  {v}" for v in self.case3_violations)
        return out


def verify_bounds(corpus, chain_limit: int = 1 << 20) -> BoundsListing:
    """Check the deterministic bounds on every corpus graph and run the
    degree-chain and cap-sum arithmetic scans."""
    entries = []
    for label, g in corpus:
        violations = check_graph_bounds(g, label)
        entries.append((label, not violations, violations))
    return BoundsListing(
        entries=entries,
        chain_violations=check_degree_chain(chain_limit),
        case3_violations=check_case3_cap_arithmetic(chain_limit),
    )


# --- oracle cross-check suite ----------------------------------------------

def oracle_graph_suite(seed: int = 0):
    """Yield (label, graph, ids) triples with n <= 12 for exact checking."""
    fixed = [
        ("path3", GraphSpec(family="star", n=3)),  # P_3 is the 3-node star
        ("complete(n=2)", GraphSpec(family="complete", n=2)),
        ("complete(n=3)", GraphSpec(family="complete", n=3)),
        ("complete(n=4)", GraphSpec(family="complete", n=4)),
        ("complete(n=8)", GraphSpec(family="complete", n=8)),
        ("star(n=6)", GraphSpec(family="star", n=6)),
        ("star(n=10)", GraphSpec(family="star", n=10)),
        ("wheel(n=6)", GraphSpec(family="wheel", n=6)),
        ("wheel(n=9)", GraphSpec(family="wheel", n=9)),
        ("complete_bipartite(a=2,b=3)", GraphSpec(family="complete_bipartite", a=2, b=3)),
        ("complete_bipartite(a=3,b=3)", GraphSpec(family="complete_bipartite", a=3, b=3)),
        ("complete_bipartite(a=4,b=4)", GraphSpec(family="complete_bipartite", a=4, b=4)),
    ]
    triples = []
    for label, spec in fixed:
        triples.append((label, spec.build()))
    for j, n in enumerate([5, 6, 7, 8, 9, 10, 11, 12]):
        triples.append(
            (f"er_diam2(n={n},seed={seed + j})", generate("er_diam2", n=n, p=0.55, seed=seed + j))
        )
    for idx, (label, g) in enumerate(triples):
        ids = IdAssignment.random(g.n, TrialRng(seed, idx).id_generator())
        yield label, g, ids


def run_oracle_checks(trials: int = 10_000, seed: int = 0):
    """Cross-check the simulator against the exact law on the small-n suite.

    Returns (labels, reports, expectation_agreement) where the last entry
    lists |enumerated - closed form| relative errors per graph.
    """
    results = []
    for label, g, ids in oracle_graph_suite(seed):
        law = enumerate_exact(g, ids)
        closed = exact_expected_messages(g)
        rel = abs(law.expected_messages - closed) / closed if closed else 0.0
        report = cross_check_protocol(g, ids, trials, TrialRng(seed))
        results.append((label, report, rel))
    return results
