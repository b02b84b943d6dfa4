import numpy as np
import pytest

from d2elect.engine import (
    Message,
    NonNeighborSendError,
    PayloadError,
    TranscriptError,
    TrialRng,
    parse_transcript,
    replay,
    run_synchronous,
    serialize_transcript,
)
from d2elect.graphs import IdAssignment, from_edges, generate


class Silent:
    rounds = 2

    def on_round(self, view, r):
        return ()

    def finish(self, view):
        return None


class CenterBroadcast:
    """Node with the marked id sends its id to all ports in round 1."""

    rounds = 1

    def __init__(self, marked_id):
        self.marked_id = marked_id

    def on_round(self, view, r):
        if r == 1 and view.ident == self.marked_id:
            return [(int(p), view.ident) for p in view.ports]
        return ()

    def finish(self, view):
        return len(view.inbox)


class EchoRelay:
    """Round 1: marked node broadcasts; round 2: receivers forward what
    they heard.  Used to pin down causality."""

    rounds = 2

    def __init__(self, marked_id):
        self.marked_id = marked_id

    def on_round(self, view, r):
        if r == 1 and view.ident == self.marked_id:
            return [(int(p), view.ident) for p in view.ports]
        if r == 2 and view.inbox:
            return [(int(p), payload) for p in view.ports for _, payload in view.inbox]
        return ()

    def finish(self, view):
        return sorted(payload for _, payload in view.inbox)


def ids_for(g, values=None):
    if values is None:
        values = list(range(100, 100 + g.n))
    return IdAssignment.from_values(values)


def test_silent_program_sends_nothing():
    g = generate("wheel", n=9)
    statuses, ledger, transcript = run_synchronous(g, ids_for(g), Silent(), 2, TrialRng(1))
    assert ledger.total == 0
    assert ledger.per_round == [0, 0]
    assert all(not msgs for msgs in transcript)


def test_star_center_broadcast_counts():
    g = generate("star", n=5)  # node 0 is the center
    ids = ids_for(g)
    statuses, ledger, transcript = run_synchronous(g, ids, CenterBroadcast(ids[0]), 1, TrialRng(7))
    assert ledger.total == 4
    assert int(ledger.sent[0]) == 4
    assert all(int(ledger.received[v]) == 1 for v in range(1, 5))
    assert statuses == [0, 1, 1, 1, 1]


def test_determinism_bit_for_bit():
    g = generate("er_diam2", n=24, seed=3)
    ids = ids_for(g)
    out1 = run_synchronous(g, ids, EchoRelay(ids[5]), 2, TrialRng(42, trial=9))
    out2 = run_synchronous(g, ids, EchoRelay(ids[5]), 2, TrialRng(42, trial=9))
    assert serialize_transcript(out1[2]) == serialize_transcript(out2[2])
    assert out1[0] == out2[0]


def test_causality_round2_derives_from_round1():
    # P_3: 0-1-2.  Node 1 hears node 0's broadcast in round 1 and can only
    # forward it in round 2; node 2 must not see it before round 2.
    g = from_edges(3, [(0, 1), (1, 2)])
    ids = ids_for(g)
    statuses, ledger, transcript = run_synchronous(g, ids, EchoRelay(ids[0]), 2, TrialRng(0))
    round1_dsts = {m.dst for m in transcript[0]}
    assert round1_dsts == {1}
    assert Message(1, 2, ids[0]) in transcript[1]
    assert statuses[2] == [ids[0]]


def test_nonneighbor_send_rejected():
    g = from_edges(3, [(0, 1), (1, 2)])

    class Bad:
        rounds = 1

        def on_round(self, view, r):
            return [(2, view.ident)] if view.degree == 1 and view.ident == 100 else ()

        def finish(self, view):
            return None

    with pytest.raises(NonNeighborSendError):
        run_synchronous(g, ids_for(g), Bad(), 1, TrialRng(1))


def test_oversized_payload_rejected():
    g = from_edges(2, [(0, 1)])

    class Chatty:
        rounds = 1

        def on_round(self, view, r):
            return [(int(view.ports[0]), (view.ident, view.ident))]

        def finish(self, view):
            return None

    with pytest.raises(PayloadError):
        run_synchronous(g, ids_for(g), Chatty(), 1, TrialRng(1))


def test_view_exposes_no_topology():
    g = generate("star", n=5)
    seen = {}

    class Probe:
        rounds = 1

        def on_round(self, view, r):
            seen["fields"] = set(view.__slots__)
            return ()

        def finish(self, view):
            return None

    run_synchronous(g, ids_for(g), Probe(), 1, TrialRng(1))
    assert seen["fields"] == {"ident", "degree", "ports", "inbox", "memory", "coin"}


def test_replay_reproduces_ledger():
    g = generate("er_diam2", n=16, seed=5)
    ids = ids_for(g)
    statuses, ledger, transcript = run_synchronous(g, ids, EchoRelay(ids[3]), 2, TrialRng(2))
    assert ledger.total > 0
    summary = replay(transcript)
    assert summary.reproduces(ledger)
    assert summary.per_round == ledger.per_round

    assert replay([]).total == 0
    assert replay([]).per_round == []


def test_replay_rejects_corrupted():
    with pytest.raises(TranscriptError):
        replay([[Message(0, 0, 5)]])
    with pytest.raises(TranscriptError):
        replay([[Message(0, 1, -3)]])


def test_transcript_roundtrip():
    g = from_edges(3, [(0, 1), (1, 2)])
    ids = ids_for(g)
    _, ledger, transcript = run_synchronous(g, ids, EchoRelay(ids[0]), 2, TrialRng(0))
    text = serialize_transcript(transcript)
    back = parse_transcript(text, rounds=2)
    assert back == transcript
    with pytest.raises(TranscriptError):
        parse_transcript("1 0 1\n")
    with pytest.raises(TranscriptError):
        parse_transcript("2 0 1 5\n1 1 0 5\n")


def test_trial_rng_per_node_split():
    a = TrialRng(99, trial=4).node_uniforms(10)
    b = TrialRng(99, trial=4).node_uniforms(50)
    assert np.array_equal(a, b[:10])
    c = TrialRng(99, trial=5).node_uniforms(10)
    assert not np.array_equal(a, c)
    # id draws do not share the coin stream
    r = TrialRng(99, trial=4)
    ids = IdAssignment.random(10, r.id_generator())
    assert np.array_equal(r.node_uniforms(10), a)
