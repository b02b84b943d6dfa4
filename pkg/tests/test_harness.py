import json
import math

import pytest

from d2elect.cli import main
from d2elect.graphs import generate
from d2elect.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    GraphSpec,
    default_corpus,
    reports_to_csv,
    run_oracle_checks,
    run_point,
    run_trials,
    scaling_sweep,
    verify_bounds,
    wilson_interval,
)


def test_wilson_interval_values():
    lo, hi = wilson_interval(5, 100)
    assert lo == pytest.approx(0.021543679154367962, abs=1e-12)
    assert hi == pytest.approx(0.11175046923191914, abs=1e-12)
    lo0, hi0 = wilson_interval(0, 100000)
    assert lo0 == 0.0
    assert 0.0 < hi0 < 1e-4
    lo1, hi1 = wilson_interval(100, 100)
    assert hi1 == pytest.approx(1.0, abs=1e-12)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_run_trials_k2_every_run_identical():
    config = ExperimentConfig(graph=GraphSpec(family="complete", n=2), trials=10, seed=3)
    rep = run_trials(config)
    assert rep.mean_msgs == 4.0
    assert rep.stddev_msgs == 0.0
    assert rep.max_msgs == 4
    assert rep.failures == 0
    assert rep.rounds_histogram == {2: 10}
    assert rep.safety_violations == 0
    assert rep.exact_fail_prob == 0.0


def test_run_trials_star64_matches_exact_expectation():
    config = ExperimentConfig(graph=GraphSpec(family="star", n=64), trials=1000, seed=11)
    rep = run_trials(config)
    assert rep.failures == 0  # leaves are forced candidates
    stderr = rep.stddev_msgs / math.sqrt(rep.trials)
    assert abs(rep.mean_msgs - rep.exact_expected_messages) <= 3 * stderr
    assert rep.tail_exceed == 0
    # bucket means track the exact expectations
    for b in rep.bucket_candidates:
        assert abs(b.mean_candidates - b.exact_expected_candidates) <= 0.2 + 0.1 * b.n_i


def test_engines_produce_identical_reports():
    g = generate("er_diam2", n=16, seed=2)
    a = run_point(g, "er_diam2", 400, seed=9, engine="fast")
    b = run_point(g, "er_diam2", 400, seed=9, engine="message")
    assert a.mean_msgs == b.mean_msgs
    assert a.stddev_msgs == b.stddev_msgs
    assert a.max_msgs == b.max_msgs
    assert a.failures == b.failures
    assert a.rounds_histogram == b.rounds_histogram
    assert [x.to_dict() for x in a.bucket_candidates] == [x.to_dict() for x in b.bucket_candidates]


def test_reports_deterministic_and_parallel_equal_serial():
    spec = GraphSpec(family="complete", n=32)
    config = ExperimentConfig(graph=spec, trials=300, seed=5)
    csv1 = reports_to_csv([run_trials(config)])
    csv2 = reports_to_csv([run_trials(config)])
    assert csv1 == csv2
    par = ExperimentConfig(graph=spec, trials=300, seed=5, jobs=3)
    assert reports_to_csv([run_trials(par)]) == csv1


def test_scaling_sweep_rows_and_normalized_column():
    config = ExperimentConfig(
        graph=GraphSpec(family="complete"), n_values=(8, 16, 32), trials=400, seed=2
    )
    reports = scaling_sweep(config)
    assert [r.n for r in reports] == [8, 16, 32]
    for r in reports:
        stderr = r.stddev_msgs / math.sqrt(r.trials)
        norm_sd = stderr / (r.n * (1 + math.log2(r.n)))
        assert r.normalized_mean <= 2.0 + 3 * norm_sd
        assert r.mean_msgs <= r.max_msgs


def test_csv_schema():
    assert CSV_COLUMNS[:14] == [
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
    ]
    config = ExperimentConfig(graph=GraphSpec(family="star", n=8), trials=20, seed=1)
    text = reports_to_csv([run_trials(config)])
    header, row = text.strip().split("\n")
    assert header == ",".join(CSV_COLUMNS)
    assert len(row.split(",")) == len(CSV_COLUMNS)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(graph=GraphSpec(family="star", n=8), trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(graph=GraphSpec(family="star"), n_values=(1,))
    with pytest.raises(ValueError):
        ExperimentConfig(graph=GraphSpec(family="star", n=8), output_format="xml")
    with pytest.raises(ValueError):
        ExperimentConfig(graph=GraphSpec(family="star", n=8), engine="warp")


def test_graph_spec_from_file(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("3 2\n0 1\n1 2\n")
    spec = GraphSpec(path=str(path))
    g = spec.build()
    assert g.n == 3
    assert spec.label() == "file:g.txt"


def test_verify_bounds_small_corpus():
    corpus = [("k4", generate("complete", n=4)), ("star9", generate("star", n=9))]
    listing = verify_bounds(corpus, chain_limit=4096)
    assert listing.ok
    lines = listing.lines()
    assert any(line.startswith("PASS k4") for line in lines)
    assert any("per-degree chain" in line for line in lines)


def test_default_corpus_smoke():
    labels = []
    listing = verify_bounds(
        ((label, g) for label, g in default_corpus(seed=1, er_instances=4, max_n=64)),
        chain_limit=1024,
    )
    assert listing.ok
    assert len(listing.entries) == 4 * 4 + 4  # 4 sizes x 4 families + 4 ER


def test_run_oracle_checks_smoke():
    results = run_oracle_checks(trials=150, seed=2)
    assert len(results) >= 20
    for label, report, rel in results:
        assert report.ok, (label, report.first_divergence)
        assert rel <= 1e-9


# --- CLI -------------------------------------------------------------------

def test_cli_run_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    rc = main(["run", "--graph", "complete", "--n", "2", "--trials", "5", "--seed", "1",
               "--out", str(out)])
    assert rc == 0
    text = out.read_text()
    assert text.startswith(",".join(CSV_COLUMNS))
    assert "complete" in text


def test_cli_sweep_json(tmp_path):
    out = tmp_path / "s.json"
    rc = main(["sweep", "--graph", "star", "--n", "8,16", "--trials", "30", "--seed", "2",
               "--format", "json", "--out", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert [row["n"] for row in payload] == [8, 16]
    assert all(row["failures"] == 0 for row in payload)


def test_cli_rerun_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sweep", "--graph", "er_diam2", "--n", "16,24", "--trials", "50", "--seed", "7"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "graph": {"family": "complete", "n": 8},
        "trials": 25,
        "seed": 4,
        "format": "json",
    }))
    out = tmp_path / "out.json"
    rc = main(["run", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["n"] == 8 and payload["trials"] == 25
    # CLI flags override the file
    rc = main(["run", "--config", str(cfg), "--trials", "10", "--out", str(out)])
    assert json.loads(out.read_text())["trials"] == 10


def test_cli_verify_bounds(tmp_path):
    out = tmp_path / "vb.txt"
    rc = main(["verify-bounds", "--er-instances", "2", "--max-n", "16",
               "--chain-limit", "1024", "--out", str(out)])
    assert rc == 0
    assert "PASS" in out.read_text()


def test_cli_oracle_check(tmp_path):
    out = tmp_path / "oc.txt"
    rc = main(["oracle-check", "--trials", "60", "--seed", "3", "--out", str(out)])
    assert rc == 0
    text = out.read_text()
    assert "FAIL" not in text


def test_cli_bad_input_exit_code():
    assert main(["run", "--graph", "star", "--n", "2", "--trials", "5"]) == 2
    assert main(["run", "--graph", "complete", "--n", "4,8", "--trials", "5"]) == 2
