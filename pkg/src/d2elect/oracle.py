"""Brute-force ground truth for small instances.

Enumerates every candidate subset with nonzero probability (nodes of
degree one or two are forced candidates) to build the exact message-count
law, and derives each subset's winner directly from the minimum-identifier
rule, deliberately without simulating any message exchange, so agreement
with the simulator is a genuine two-route check.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import TrialRng
from .graphs import Graph, IdAssignment
from .protocol import candidate_probabilities, elect

MAX_EXACT_NODES = 20


@dataclass(frozen=True)
class ExactLaw:
    """Exact distribution of one election on a fixed (graph, ids) pair.

    `winner_map` is keyed by candidate-set bitmask (bit v = node v) and
    only contains subsets with nonzero probability.
    """

    expected_messages: float
    success_probability: float
    message_distribution: dict
    winner_map: dict

    def to_dict(self) -> dict:
        return {
            "expected_messages": self.expected_messages,
            "success_probability": self.success_probability,
            "message_distribution": {str(k): v for k, v in sorted(self.message_distribution.items())},
            "winner_map": {str(k): v for k, v in sorted(self.winner_map.items())},
        }


def enumerate_exact(g: Graph, ids: IdAssignment) -> ExactLaw:
    """Exact law by enumerating candidate subsets (n <= 20)."""
    n = g.n
    if n > MAX_EXACT_NODES:
        raise ValueError(f"exact enumeration is limited to n <= {MAX_EXACT_NODES}, got {n}")
    if len(ids) != n:
        raise ValueError("id assignment size does not match graph")
    p = candidate_probabilities(g)
    forced = [v for v in range(n) if p[v] >= 1.0]
    free = [v for v in range(n) if p[v] < 1.0]
    forced_mask = sum(1 << v for v in forced)
    forced_msgs = 2 * int(g.degrees[forced].sum()) if forced else 0

    id_list = [ids[v] for v in range(n)]
    expected = 0.0
    dist: dict = {}
    winners: dict = {}
    empty_mass = 0.0
    f = len(free)
    for bits in range(1 << f):
        pr = 1.0
        mask = forced_mask
        msgs = forced_msgs
        for j in range(f):
            v = free[j]
            if bits >> j & 1:
                pr *= p[v]
                mask |= 1 << v
                msgs += 2 * int(g.degrees[v])
            else:
                pr *= 1.0 - p[v]
        if mask:
            winners[mask] = min(range(n), key=lambda v: id_list[v] if mask >> v & 1 else 1 << 65)
        else:
            winners[mask] = None
            empty_mass += pr
        expected += pr * msgs
        dist[msgs] = dist.get(msgs, 0.0) + pr
    return ExactLaw(
        expected_messages=expected,
        success_probability=1.0 - empty_mass,
        message_distribution=dist,
        winner_map=winners,
    )


@dataclass(frozen=True)
class CrossCheckReport:
    trials: int
    discrepancies: int
    first_divergence: str | None

    @property
    def ok(self) -> bool:
        return self.discrepancies == 0


def cross_check_protocol(
    g: Graph,
    ids: IdAssignment,
    trials: int,
    rng: "TrialRng | int",
) -> CrossCheckReport:
    """Run the full simulator `trials` times and compare every run's
    leader, message total, and failure flag against the exact law."""
    seed = rng.seed if isinstance(rng, TrialRng) else int(rng)
    law = enumerate_exact(g, ids)
    discrepancies = 0
    first = None

    def mismatch(t, what):
        nonlocal discrepancies, first
        discrepancies += 1
        if first is None:
            first = f"trial {t}: {what}"

    for t in range(trials):
        out = elect(g, ids, TrialRng(seed, t))
        mask = sum(1 << v for v in out.candidates)
        if mask not in law.winner_map:
            mismatch(t, f"candidate set {sorted(out.candidates)} has zero probability")
            continue
        expected_winner = law.winner_map[mask]
        expected_msgs = 2 * int(g.degrees[sorted(out.candidates)].sum()) if out.candidates else 0
        if out.leader != expected_winner:
            mismatch(t, f"leader {out.leader} != oracle winner {expected_winner}")
        if out.ledger.total != expected_msgs:
            mismatch(t, f"messages {out.ledger.total} != oracle count {expected_msgs}")
        if out.failed != (expected_winner is None):
            mismatch(t, f"failure flag {out.failed} disagrees with oracle")
    return CrossCheckReport(trials=trials, discrepancies=discrepancies, first_divergence=first)
