"""Lockstep synchronous message-passing engine.

Node programs see only their own `NodeView` (own identifier, degree,
outgoing port labels, previous-round inbox, scratch memory, and a private
coin), so topology knowledge stays local.  Every delivered message carries
exactly one identifier and is counted exactly once in the ledger.

Randomness is split per node by counter position: node v's coin is word v
of a Philox stream keyed by (seed, trial), so trials are independent and
adding nodes never perturbs existing nodes' coins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Protocol

import numpy as np

from .graphs import Graph, IdAssignment

_MASK64 = (1 << 64) - 1
_ID_REGION = np.array([0, 1, 0, 0], dtype=np.uint64)  # disjoint counter block for id draws


class EngineViolation(RuntimeError):
    """A node program broke the communication discipline; the run aborts."""


class NonNeighborSendError(EngineViolation):
    pass


class PayloadError(EngineViolation):
    """Message payload is not a single identifier."""


class TranscriptError(ValueError):
    pass


class TrialRng:
    """Seeded, counter-based randomness for one trial."""

    def __init__(self, seed: int, trial: int = 0):
        self.seed = int(seed) & _MASK64
        self.trial = int(trial) & _MASK64
        self._key = np.array([self.seed, self.trial], dtype=np.uint64)
        self._coins: np.ndarray | None = None

    def node_uniforms(self, n: int) -> np.ndarray:
        """Uniform [0,1) coins; entry v belongs to node v."""
        if self._coins is None or self._coins.size < n:
            gen = np.random.Generator(np.random.Philox(key=self._key))
            self._coins = gen.random(n)
        return self._coins[:n]

    def id_generator(self) -> np.random.Generator:
        """Generator for identifier draws, on a counter block disjoint
        from the per-node coins."""
        return np.random.Generator(np.random.Philox(key=self._key, counter=_ID_REGION))


def as_trial_rng(rng: "TrialRng | int") -> TrialRng:
    return rng if isinstance(rng, TrialRng) else TrialRng(rng)


class Message(NamedTuple):
    src: int
    dst: int
    payload: int


@dataclass
class MessageLedger:
    """Exact message accounting; each message counts once toward the total."""

    per_round: list[int]
    sent: np.ndarray
    received: np.ndarray
    total: int

    def verify(self) -> None:
        if not (self.total == sum(self.per_round) == int(self.sent.sum()) == int(self.received.sum())):
            raise EngineViolation("ledger sums disagree")


@dataclass(slots=True)
class NodeView:
    """Everything a node program is allowed to read.

    `ports` are opaque send targets (one per incident edge); `inbox` holds
    (port, payload) pairs delivered at the end of the previous round.
    """

    ident: int
    degree: int
    ports: np.ndarray
    inbox: list
    memory: dict
    coin: float


class NodeProgram(Protocol):
    rounds: int

    def on_round(self, view: NodeView, round_no: int) -> Iterable[tuple[int, int]]:
        """Return (port, payload) sends computed from pre-round state."""
        ...

    def finish(self, view: NodeView):
        """Produce the node's final local output after the last round."""
        ...


def run_synchronous(
    g: Graph,
    ids: IdAssignment,
    program: NodeProgram,
    rounds: int,
    rng: "TrialRng | int",
):
    """Run `program` on every node of `g` for `rounds` lockstep rounds.

    All sends in a round are computed from end-of-previous-round state,
    then delivered simultaneously.  Returns (statuses, ledger, transcript)
    where statuses[v] is program.finish's output for node v and transcript
    is a per-round list of Messages.  Pure function of (g, ids, program
    logic, seed).
    """
    n = g.n
    if len(ids) != n:
        raise ValueError("id assignment size does not match graph")
    rng = as_trial_rng(rng)
    coins = rng.node_uniforms(n)
    nbr_sets = g.neighbor_sets
    id_arr = ids.ids
    views = [
        NodeView(
            ident=int(id_arr[v]),
            degree=int(g.degrees[v]),
            ports=g.neighbors(v),
            inbox=[],
            memory={},
            coin=float(coins[v]),
        )
        for v in range(n)
    ]
    sent = [0] * n
    received = [0] * n
    per_round: list[int] = []
    transcript: list[list[Message]] = []

    for r in range(1, rounds + 1):
        pending = []
        for v in range(n):
            outs = program.on_round(views[v], r)
            if outs:
                pending.append((v, outs))
        round_msgs: list[Message] = []
        new_inboxes: list[list] = [[] for _ in range(n)]
        for v, outs in pending:
            allowed = nbr_sets[v]
            for dst, payload in outs:
                if dst not in allowed:
                    raise NonNeighborSendError(f"node {v} sent to non-neighbor {dst} in round {r}")
                if not isinstance(payload, (int, np.integer)) or not 0 <= payload <= _MASK64:
                    raise PayloadError(
                        f"node {v} sent a payload that is not one identifier: {payload!r}"
                    )
                p = int(payload)
                new_inboxes[dst].append((v, p))
                round_msgs.append(Message(v, dst, p))
                sent[v] += 1
                received[dst] += 1
        for v in range(n):
            views[v].inbox = new_inboxes[v]
        per_round.append(len(round_msgs))
        transcript.append(round_msgs)

    statuses = [program.finish(views[v]) for v in range(n)]
    ledger = MessageLedger(
        per_round=per_round,
        sent=np.array(sent, dtype=np.int64),
        received=np.array(received, dtype=np.int64),
        total=sum(per_round),
    )
    ledger.verify()
    return statuses, ledger, transcript


@dataclass
class ReplaySummary:
    """Per-round listing recomputed from a transcript."""

    rounds: list[list[Message]]
    per_round: list[int]
    sent: dict
    received: dict
    total: int

    def reproduces(self, ledger: MessageLedger) -> bool:
        if self.per_round != ledger.per_round or self.total != ledger.total:
            return False
        for v, k in self.sent.items():
            if int(ledger.sent[v]) != k:
                return False
        for v, k in self.received.items():
            if int(ledger.received[v]) != k:
                return False
        return self.total == int(ledger.sent.sum())


def replay(transcript: list[list[Message]]) -> ReplaySummary:
    """Recompute the per-round listing and totals from a transcript."""
    per_round = []
    sent: dict = {}
    received: dict = {}
    total = 0
    for msgs in transcript:
        for m in msgs:
            if not isinstance(m, Message):
                m = Message(*m)
            if m.src == m.dst:
                raise TranscriptError(f"self-delivery in transcript: {m}")
            if not isinstance(m.payload, (int, np.integer)) or not 0 <= m.payload <= _MASK64:
                raise TranscriptError(f"bad payload in transcript: {m}")
            sent[m.src] = sent.get(m.src, 0) + 1
            received[m.dst] = received.get(m.dst, 0) + 1
        per_round.append(len(msgs))
        total += len(msgs)
    return ReplaySummary(rounds=transcript, per_round=per_round, sent=sent, received=received, total=total)


def serialize_transcript(transcript: list[list[Message]]) -> str:
    """Line-oriented audit form: 'round src dst payload' per message."""
    lines = []
    for r, msgs in enumerate(transcript, 1):
        for m in msgs:
            lines.append(f"{r} {m.src} {m.dst} {m.payload}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_transcript(text: str, rounds: int | None = None) -> list[list[Message]]:
    """Inverse of serialize_transcript.  Trailing empty rounds are only
    recoverable when `rounds` is given."""
    out: list[list[Message]] = []
    for lineno, ln in enumerate(text.splitlines(), 1):
        ln = ln.strip()
        if not ln:
            continue
        parts = ln.split()
        if len(parts) != 4:
            raise TranscriptError(f"line {lineno}: expected 'round src dst payload'")
        try:
            r, src, dst, payload = (int(x) for x in parts)
        except ValueError as exc:
            raise TranscriptError(f"line {lineno}: non-integer field") from exc
        if r < 1 or r < len(out):
            raise TranscriptError(f"line {lineno}: rounds must be nondecreasing from 1")
        while len(out) < r:
            out.append([])
        out[r - 1].append(Message(src, dst, payload))
    if rounds is not None:
        if len(out) > rounds:
            raise TranscriptError("transcript has more rounds than declared")
        while len(out) < rounds:
            out.append([])
    return out
