"""Closed-form analysis of the election's message complexity.

Everything here is exact arithmetic over a concrete graph: the expected
message count, the powers-of-two degree buckets with their expected
candidate counts, the per-bucket caps used by the concentration argument,
and the overall tail threshold 85 * n * log2(n).

Inequality checks use exact comparison with a tiny relative guard
(1e-9): the bounds hold with slack, so the guard can absorb float
rounding without ever hiding a real violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graphs import Graph
from .protocol import candidate_probabilities

REL_GUARD = 1e-9


def leq_with_guard(a: float, b: float, rel: float = REL_GUARD) -> bool:
    """a <= b, allowing `rel` relative slack on b for float rounding."""
    return a <= b + rel * abs(b)


def bucket_index(d: int) -> int:
    """Index i of the degree bucket [2^(i-1), 2^i) containing d."""
    d = int(d)
    if d < 1:
        raise ValueError(f"degree must be >= 1, got {d}")
    return d.bit_length()


def bucket_indices(degrees: np.ndarray) -> np.ndarray:
    """Vectorized bucket_index; exact for degrees below 2^53."""
    return np.frexp(degrees.astype(np.float64))[1].astype(np.int64)


def max_bucket_index(n: int) -> int:
    """The k with 2^(k-1) <= n < 2^k."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return int(n).bit_length()


class BucketCase(Enum):
    CASE_I = "I"
    CASE_II = "II"
    CASE_III = "III"


@dataclass(frozen=True)
class BucketStats:
    """One degree bucket of a graph and its share of the tail analysis."""

    i: int
    n_i: int
    members: frozenset
    exact_expected_candidates: float
    lemma1_bound: float | None
    case: BucketCase
    case_message_cap: float

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "n_i": self.n_i,
            "members": sorted(self.members),
            "exact_expected_candidates": self.exact_expected_candidates,
            "lemma1_bound": self.lemma1_bound,
            "case": self.case.name,
            "case_message_cap": self.case_message_cap,
        }


def bucket_stats(g: Graph) -> list[BucketStats]:
    """Degree buckets 1..k of g, with exact expected candidate counts.

    Raises if any bucket i >= 2 exceeds its cap 3*i*n_i / 2^i; that cap
    is unconditional, so a violation means an arithmetic bug, not a bad
    input.
    """
    n = g.n
    k = max_bucket_index(n)
    p = candidate_probabilities(g)
    bidx = bucket_indices(g.degrees)
    counts = np.bincount(bidx, minlength=k + 1)
    esums = np.bincount(bidx, weights=p, minlength=k + 1)
    log2n = math.log2(n) if n > 1 else 0.0

    out = []
    for i in range(1, k + 1):
        n_i = int(counts[i]) if i < counts.size else 0
        exact = float(esums[i]) if i < esums.size else 0.0
        members = frozenset(np.flatnonzero(bidx == i).tolist()) if n_i else frozenset()
        if i == 1:
            bound = None
            case = BucketCase.CASE_I
            cap = 2.0 * n
        else:
            bound = 3.0 * i * n_i / (2.0**i)
            if not leq_with_guard(exact, bound):
                raise RuntimeError(
                    f"bucket {i}: expected candidates {exact} exceeds cap {bound}"
                )
            if exact >= log2n:
                case = BucketCase.CASE_II
                cap = 36.0 * i * n_i
            else:
                case = BucketCase.CASE_III
                cap = 6.0 * (2.0 ** (i + 1)) * log2n
        out.append(
            BucketStats(
                i=i,
                n_i=n_i,
                members=members,
                exact_expected_candidates=exact,
                lemma1_bound=bound,
                case=case,
                case_message_cap=cap,
            )
        )
    return out


@dataclass(frozen=True)
class BoundReport:
    """Every closed-form quantity the tail analysis needs, for one graph."""

    n: int
    exact_expected_messages: float
    expectation_upper: float
    tail_threshold: float
    case1_cap: float
    case2_cap_sum: float
    case3_cap_sum: float
    no_candidate_probability: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "exact_expected_messages": self.exact_expected_messages,
            "expectation_upper": self.expectation_upper,
            "tail_threshold": self.tail_threshold,
            "case1_cap": self.case1_cap,
            "case2_cap_sum": self.case2_cap_sum,
            "case3_cap_sum": self.case3_cap_sum,
            "no_candidate_probability": self.no_candidate_probability,
        }


def tail_threshold(n: int) -> float:
    """Message count above which a run counts as a tail event: 85*n*log2(n)."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return 85.0 * n * math.log2(n)


def expectation_upper(n: int) -> float:
    """Upper bound 2n*(1+log2 n) on the expected total message count."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return 2.0 * n * (1.0 + math.log2(n))


def exact_expected_messages(g: Graph) -> float:
    """Sum over nodes of 2 * degree * candidacy probability."""
    p = candidate_probabilities(g)
    return float(np.sum(2.0 * g.degrees * p))


def no_candidate_probability(g: Graph) -> float:
    """Probability that no node becomes a candidate (failure)."""
    p = candidate_probabilities(g)
    return float(np.prod(1.0 - p))


def bound_report(g: Graph) -> BoundReport:
    stats = bucket_stats(g)
    case2 = sum(s.case_message_cap for s in stats if s.case is BucketCase.CASE_II)
    case3 = sum(s.case_message_cap for s in stats if s.case is BucketCase.CASE_III)
    return BoundReport(
        n=g.n,
        exact_expected_messages=exact_expected_messages(g),
        expectation_upper=expectation_upper(g.n),
        tail_threshold=tail_threshold(g.n),
        case1_cap=2.0 * g.n,
        case2_cap_sum=case2,
        case3_cap_sum=case3,
        no_candidate_probability=no_candidate_probability(g),
    )


def chernoff_reference(expected: float, r: float) -> float:
    """Tail probability 2^-r for a sum of independent indicators,
    valid when r >= 6 * expected."""
    if r < 6.0 * expected:
        raise ValueError(f"r={r} below validity threshold 6*expected={6.0 * expected}")
    return 2.0**-r


# --- deterministic bound checks -------------------------------------------

def check_graph_bounds(g: Graph, label: str = "") -> list[str]:
    """Check the per-bucket caps, the expectation bound, and the case-III
    cap sum on one graph.  Returns human-readable violation strings."""
    tag = label or f"n={g.n}"
    violations = []
    try:
        stats = bucket_stats(g)
    except RuntimeError as exc:
        return [f"{tag}: {exc}"]
    for s in stats:
        if s.i >= 2 and not leq_with_guard(s.exact_expected_candidates, s.lemma1_bound):
            violations.append(
                f"{tag}: bucket {s.i} expected candidates {s.exact_expected_candidates}"
                f" > {s.lemma1_bound}"
            )
    rep = bound_report(g)
    if not leq_with_guard(rep.exact_expected_messages, rep.expectation_upper):
        violations.append(
            f"{tag}: expected messages {rep.exact_expected_messages}"
            f" > upper bound {rep.expectation_upper}"
        )
    if not leq_with_guard(rep.case3_cap_sum, 48.0 * g.n * math.log2(g.n)):
        violations.append(f"{tag}: case-III cap sum {rep.case3_cap_sum} > 48*n*log2(n)")
    return violations


def check_degree_chain(limit: int = 1 << 20) -> list[str]:
    """Check (1+log2 d)/d <= (1+i)/2^(i-1) <= 3i/2^i for all 2 <= d <= limit,
    where i is d's bucket index."""
    d = np.arange(2, limit + 1, dtype=np.int64)
    i = bucket_indices(d).astype(np.float64)
    lhs = (1.0 + np.log2(d)) / d
    mid = (1.0 + i) / np.exp2(i - 1)
    rhs = 3.0 * i / np.exp2(i)
    bad1 = np.flatnonzero(lhs > mid + REL_GUARD * mid)
    bad2 = np.flatnonzero(mid > rhs + REL_GUARD * rhs)
    out = []
    if bad1.size:
        out.append(f"per-degree step fails first at d={int(d[bad1[0]])}")
    if bad2.size:
        out.append(f"per-degree step fails second at d={int(d[bad2[0]])}")
    return out


def check_case3_cap_arithmetic(limit: int = 1 << 20) -> list[str]:
    """Check sum_{i=2..k} 6*2^(i+1)*log2(n) <= 48*n*log2(n) for 2 <= n <= limit.

    The sum telescopes to 6*(2^(k+2) - 8)*log2(n), so the check reduces to
    the integer inequality 2^(k+2) - 8 <= 8n.
    """
    n = np.arange(2, limit + 1, dtype=np.int64)
    k = bucket_indices(n)  # same exponent arithmetic: 2^(k-1) <= n < 2^k
    lhs = np.exp2((k + 2).astype(np.float64)) - 8.0
    bad = np.flatnonzero(lhs > 8.0 * n)
    if bad.size:
        return [f"case-III cap sum arithmetic fails first at n={int(n[bad[0]])}"]
    return []
