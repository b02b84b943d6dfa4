"""Randomized leader election for diameter-(<=2) graphs.

Each node of degree d independently becomes a candidate with probability
(1 + log2 d) / d.  Candidates broadcast their identifier; every node acts
as referee (for itself too, when it is a candidate), replying the minimum
identifier it heard to each candidate that contacted it.  A candidate wins
iff every neighbor reply, and its own referee view, equals its identifier.
Exactly two communication rounds, always.

Two interchangeable executors are provided: `elect` drives the node
program through the synchronous engine and `elect_fast` evaluates the same
two rounds with vectorized arithmetic.  Both consume the same per-node
coins, so for a given (graph, ids, seed) they produce identical outcomes;
tests hold them to that.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import MessageLedger, TrialRng, as_trial_rng, run_synchronous
from .graphs import DiameterClass, DiameterError, Graph, IdAssignment

_U64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)


class ProtocolError(RuntimeError):
    """Internal protocol/engine inconsistency (a bug, not an input error)."""


class Status(Enum):
    UNDECIDED = "undecided"
    ELECTED = "elected"
    NON_ELECTED = "non_elected"


@dataclass(frozen=True)
class CandidateDraw:
    """One node's candidacy coin flip."""

    is_candidate: bool
    probability: float


@dataclass(frozen=True, eq=False)
class ElectionOutcome:
    leader: int | None
    statuses: list
    candidates: frozenset
    rounds_used: int
    ledger: MessageLedger
    transcript: list | None = None

    @property
    def failed(self) -> bool:
        return len(self.candidates) == 0


def candidate_probability(d: int) -> float:
    """Candidacy probability (1 + log2 d) / d for a node of degree d."""
    d = int(d)
    if d < 1:
        raise ValueError(f"degree must be >= 1, got {d}")
    if d <= 2:
        return 1.0
    return (1.0 + math.log2(d)) / d


_PROB_CACHE: "weakref.WeakKeyDictionary[Graph, np.ndarray]" = weakref.WeakKeyDictionary()


def candidate_probabilities(g: Graph) -> np.ndarray:
    """Per-node candidacy probabilities, cached on the graph."""
    arr = _PROB_CACHE.get(g)
    if arr is None:
        uniq = np.unique(g.degrees)
        vals = np.array([candidate_probability(int(d)) for d in uniq], dtype=np.float64)
        arr = vals[np.searchsorted(uniq, g.degrees)]
        arr.flags.writeable = False
        _PROB_CACHE[g] = arr
    return arr


def referee_min(candidate_ids) -> int:
    """Minimum identifier among the candidates a referee heard."""
    vals = [int(x) for x in candidate_ids]
    if not vals:
        raise ValueError("referee heard no candidates")
    if len(set(vals)) != len(vals):
        raise ValueError("duplicate candidate identifiers heard")
    return min(vals)


def decide(own_id: int, neighbor_replies, self_referee_min: int | None = None, *, expected_replies: int | None = None) -> Status:
    """A candidate's final decision from its round-two replies.

    ELECTED iff every neighbor reply equals `own_id` and the node's own
    referee view (when it refereed itself) does too.
    """
    own = int(own_id)
    replies = [int(x) for x in neighbor_replies]
    if expected_replies is not None and len(replies) != expected_replies:
        raise ProtocolError(
            f"candidate expected {expected_replies} replies, got {len(replies)}"
        )
    if all(x == own for x in replies) and (self_referee_min is None or int(self_referee_min) == own):
        return Status.ELECTED
    return Status.NON_ELECTED


class ElectionProgram:
    """The election as a node program for the synchronous engine."""

    rounds = 2

    def on_round(self, view, round_no):
        mem = view.memory
        if round_no == 1:
            is_cand = view.degree <= 2 or view.coin < candidate_probability(view.degree)
            mem["candidate"] = is_cand
            if is_cand:
                own = view.ident
                return [(int(port), own) for port in view.ports]
            return ()
        # round 2: referee replies
        heard = view.inbox
        if mem["candidate"]:
            m = referee_min([pay for _, pay in heard] + [view.ident])
            mem["self_min"] = m
        elif heard:
            m = referee_min(pay for _, pay in heard)
        else:
            return ()
        return [(src, m) for src, _ in heard]

    def finish(self, view):
        mem = view.memory
        if not mem["candidate"]:
            if view.inbox:
                raise ProtocolError("non-candidate received a reply")
            return Status.NON_ELECTED
        replies = [pay for _, pay in view.inbox]
        return decide(view.ident, replies, mem["self_min"], expected_replies=view.degree)


def draw_candidates(g: Graph, rng: "TrialRng | int") -> list[CandidateDraw]:
    """The candidacy coin flips an election with this rng would make."""
    rng = as_trial_rng(rng)
    p = candidate_probabilities(g)
    u = rng.node_uniforms(g.n)
    mask = (g.degrees <= 2) | (u < p)
    return [CandidateDraw(bool(mask[v]), float(p[v])) for v in range(g.n)]


def _check_electable(g: Graph) -> None:
    if g.diameter_class is DiameterClass.UNKNOWN_GT_TWO:
        raise DiameterError("election requires diameter <= 2")


def _singleton_outcome(n: int) -> ElectionOutcome:
    ledger = MessageLedger(per_round=[], sent=np.zeros(n, np.int64), received=np.zeros(n, np.int64), total=0)
    return ElectionOutcome(
        leader=0,
        statuses=[Status.ELECTED],
        candidates=frozenset({0}),
        rounds_used=0,
        ledger=ledger,
        transcript=[],
    )


def _finalize(g: Graph, candidates: frozenset, elected: list, ledger: MessageLedger) -> tuple:
    if len(elected) > 1:
        raise ProtocolError(f"{len(elected)} nodes elected in one run")
    leader = elected[0] if elected else None
    expected = 2 * int(g.degrees[list(candidates)].sum()) if candidates else 0
    if ledger.total != expected:
        raise ProtocolError(
            f"ledger total {ledger.total} != twice the candidates' degree sum {expected}"
        )
    return leader


def elect(g: Graph, ids: IdAssignment, rng: "TrialRng | int") -> ElectionOutcome:
    """Run one election through the message-level engine."""
    _check_electable(g)
    if g.n == 1:
        return _singleton_outcome(1)
    statuses, ledger, transcript = run_synchronous(g, ids, ElectionProgram(), 2, rng)
    candidates = frozenset(m.src for m in transcript[0])
    elected = [v for v, s in enumerate(statuses) if s is Status.ELECTED]
    leader = _finalize(g, candidates, elected, ledger)
    return ElectionOutcome(
        leader=leader,
        statuses=statuses,
        candidates=candidates,
        rounds_used=2,
        ledger=ledger,
        transcript=transcript,
    )


def elect_fast(g: Graph, ids: IdAssignment, rng: "TrialRng | int") -> ElectionOutcome:
    """Run one election with vectorized round evaluation.

    Same coins, same referee semantics, same decision rule as `elect`;
    no per-message transcript.
    """
    _check_electable(g)
    n = g.n
    if n == 1:
        return _singleton_outcome(1)
    rng = as_trial_rng(rng)
    p = candidate_probabilities(g)
    u = rng.node_uniforms(n)
    cand_mask = (g.degrees <= 2) | (u < p)
    cand = np.flatnonzero(cand_mask)
    id_arr = ids.ids
    deg = g.degrees

    statuses = [Status.NON_ELECTED] * n
    if cand.size == 0:
        ledger = MessageLedger(
            per_round=[0, 0], sent=np.zeros(n, np.int64), received=np.zeros(n, np.int64), total=0
        )
        return ElectionOutcome(
            leader=None, statuses=statuses, candidates=frozenset(), rounds_used=2, ledger=ledger
        )

    # round 1: referee state (minimum candidate id heard, candidate count).
    # Two equivalent evaluations: a per-candidate loop when few nodes run,
    # a whole-edge segmented pass when many do (star/wheel-like graphs).
    cand_list = cand.tolist()
    vectorized = cand.size > 48
    if vectorized:
        nbr_ids = np.where(cand_mask[g.indices], id_arr[g.indices], _U64_MAX)
        heard = np.minimum.reduceat(nbr_ids, g.indptr[:-1])
        cnt = np.add.reduceat(cand_mask[g.indices].astype(np.int64), g.indptr[:-1])
    else:
        heard = np.full(n, _U64_MAX, dtype=np.uint64)
        cnt = np.zeros(n, dtype=np.int64)
        for c in cand_list:
            nb = g.neighbors(c)
            heard[nb] = np.minimum(heard[nb], id_arr[c])
            cnt[nb] += 1
    # self-referee: a candidate's own view includes its own id
    full_min = heard.copy()
    full_min[cand] = np.minimum(heard[cand], id_arr[cand])

    # round 2 decisions: every neighbor of a candidate heard it, so
    # unanimity of replies is equivalent to their minimum being own id
    elected = []
    if vectorized:
        reply_min = np.minimum.reduceat(full_min[g.indices], g.indptr[:-1])
        winners = cand[(full_min[cand] == id_arr[cand]) & (reply_min[cand] == id_arr[cand])]
        for c in winners.tolist():
            elected.append(c)
            statuses[c] = Status.ELECTED
    else:
        for c in cand_list:
            nb = g.neighbors(c)
            if full_min[c] == id_arr[c] and full_min[nb].min() == id_arr[c]:
                elected.append(c)
                statuses[c] = Status.ELECTED

    round1 = int(deg[cand].sum())
    sent = deg * cand_mask + cnt
    ledger = MessageLedger(per_round=[round1, round1], sent=sent, received=sent.copy(), total=2 * round1)
    candidates = frozenset(cand_list)
    leader = _finalize(g, candidates, elected, ledger)
    return ElectionOutcome(
        leader=leader, statuses=statuses, candidates=candidates, rounds_used=2, ledger=ledger
    )
