import json
import math

import numpy as np
import pytest

from d2elect.analysis import (
    BucketCase,
    bound_report,
    bucket_index,
    bucket_stats,
    chernoff_reference,
    check_case3_cap_arithmetic,
    check_degree_chain,
    check_graph_bounds,
    exact_expected_messages,
    expectation_upper,
    max_bucket_index,
    no_candidate_probability,
    tail_threshold,
)
from d2elect.graphs import from_edges, generate


def test_bucket_index_values():
    assert bucket_index(1) == 1
    assert bucket_index(4) == 3
    assert bucket_index(7) == 3
    with pytest.raises(ValueError):
        bucket_index(0)
    for d in [1, 2, 3, 5, 8, 9, 1023, 1024, 1025]:
        i = bucket_index(d)
        assert 2 ** (i - 1) <= d < 2**i


def test_max_bucket_index_window():
    for n in [2, 3, 4, 7, 8, 1000, 1024, 1025]:
        k = max_bucket_index(n)
        assert 2 ** (k - 1) <= n < 2**k


def test_bucket_stats_star5():
    g = generate("star", n=5)
    stats = {s.i: s for s in bucket_stats(g)}
    assert set(stats) == {1, 2, 3}  # k = 3 for n = 5
    assert stats[1].n_i == 4 and stats[1].case is BucketCase.CASE_I
    assert stats[2].n_i == 0
    assert stats[3].n_i == 1
    assert abs(stats[3].exact_expected_candidates - 0.75) < 1e-12
    assert abs(stats[3].lemma1_bound - 9 / 8) < 1e-12


def test_bucket_stats_k4():
    g = generate("complete", n=4)
    stats = {s.i: s for s in bucket_stats(g)}
    assert stats[2].n_i == 4
    # 4 * (1 + log2 3) / 3, frozen at high precision
    assert abs(stats[2].exact_expected_candidates - 3.4466166676282082) < 1e-12
    assert abs(stats[2].lemma1_bound - 6.0) < 1e-12
    assert stats[2].case is BucketCase.CASE_II  # 3.45 >= log2(4) = 2


def test_bucket_partition():
    for fam, kw in [
        ("star", dict(n=33)),
        ("wheel", dict(n=17)),
        ("complete", dict(n=21)),
        ("er_diam2", dict(n=50, seed=4)),
    ]:
        g = generate(fam, **kw)
        stats = bucket_stats(g)
        assert sum(s.n_i for s in stats) == g.n
        assert stats[-1].i == max_bucket_index(g.n)
        seen = set()
        for s in stats:
            assert len(s.members) == s.n_i
            assert not (seen & s.members)
            seen |= s.members
            for v in s.members:
                assert bucket_index(g.degree(v)) == s.i
        assert seen == set(range(g.n))


def test_bound_report_k2():
    rep = bound_report(generate("complete", n=2))
    assert rep.exact_expected_messages == 4.0
    assert rep.expectation_upper == 8.0
    assert rep.no_candidate_probability == 0.0


def test_bound_report_k4():
    rep = bound_report(generate("complete", n=4))
    # 8 * (1 + log2 3), frozen at high precision
    assert abs(rep.exact_expected_messages - 20.679700005769249) < 1e-9
    assert abs(rep.expectation_upper - 24.0) < 1e-12


def test_bound_report_star5():
    rep = bound_report(generate("star", n=5))
    assert abs(rep.exact_expected_messages - 14.0) < 1e-12
    assert rep.no_candidate_probability == 0.0  # leaves are forced candidates


def test_no_candidate_probability_k16():
    g = generate("complete", n=16)
    p = (1 + math.log2(15)) / 15
    assert abs(no_candidate_probability(g) - (1 - p) ** 16) < 1e-15


def test_tail_threshold_values():
    assert tail_threshold(2) == 170.0
    assert tail_threshold(256) == 174080.0
    assert tail_threshold(1024) == 870400.0
    with pytest.raises(ValueError):
        tail_threshold(1)


def test_chernoff_reference():
    assert chernoff_reference(1, 6) == 0.015625
    assert chernoff_reference(10, 60) == 2.0**-60
    with pytest.raises(ValueError):
        chernoff_reference(2, 11)


def test_case_labels_and_caps():
    g = generate("star", n=1025)  # center degree 1024 sits alone in bucket 11
    stats = {s.i: s for s in bucket_stats(g)}
    assert stats[1].case_message_cap == 2.0 * g.n
    s11 = stats[11]
    assert s11.n_i == 1
    assert s11.case is BucketCase.CASE_III  # E[Y] < 0.011 < log2(1025)
    assert abs(s11.case_message_cap - 6.0 * 2.0**12 * math.log2(1025)) < 1e-9
    rep = bound_report(g)
    assert rep.case1_cap == 2.0 * g.n
    assert rep.case3_cap_sum <= 48.0 * g.n * math.log2(g.n)


def test_expectation_bound_holds_on_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = int(rng.integers(4, 80))
        p = float(rng.uniform(0.15, 0.95))
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
        try:
            g = from_edges(n, edges)
        except Exception:
            continue
        assert check_graph_bounds(g) == []
        assert exact_expected_messages(g) <= expectation_upper(g.n) * (1 + 1e-9)


def test_degree_chain_full_scan():
    assert check_degree_chain(1 << 20) == []


def test_case3_cap_arithmetic_full_scan():
    assert check_case3_cap_arithmetic(1 << 20) == []


def test_json_field_names():
    g = generate("star", n=5)
    b = bucket_stats(g)[0].to_dict()
    assert set(b) == {
        "i",
        "n_i",
        "members",
        "exact_expected_candidates",
        "lemma1_bound",
        "case",
        "case_message_cap",
    }
    r = bound_report(g).to_dict()
    assert {
        "exact_expected_messages",
        "expectation_upper",
        "tail_threshold",
        "case1_cap",
        "case2_cap_sum",
        "case3_cap_sum",
        "no_candidate_probability",
    } <= set(r)
    json.dumps(b), json.dumps(r)  # serializable as-is
