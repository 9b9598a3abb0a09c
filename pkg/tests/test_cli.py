import json

import pytest

from minwalk import io as mio
from minwalk.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_simulate_writes_stats_and_manifest(tmp_path):
    code = run(tmp_path, "simulate", "--p", "0.8", "--q", "0.2", "--s", "0.5", "--n", "4096", "--replicas", "3000", "--seed", "7")
    assert code == 0
    rows = mio.read_csv(tmp_path / "stats.csv")
    assert list(rows[0]) == list(mio.STATS_HEADER)
    assert [int(r["checkpoint"]) for r in rows] == [2**k for k in range(13)]
    assert int(rows[-1]["count"]) == 3000
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["engine"] == "reduced"
    assert manifest["config"]["p"] == 0.8
    first = (tmp_path / "stats.csv").read_text().splitlines()[0]
    assert first == f"# manifest_sha256={manifest['manifestHash']}"
    assert mio.manifest_hash(manifest) == manifest["manifestHash"]


def test_simulate_is_byte_identical_across_threads(tmp_path):
    args = ["simulate", "--p", "0.7", "--q", "0.1", "--n", "3000", "--replicas", "9000", "--seed", "3"]
    assert main([*args, "--threads", "1", "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--threads", "4", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "stats.csv").read_bytes() == (tmp_path / "b" / "stats.csv").read_bytes()


def test_single_replica_path_csv(tmp_path):
    assert run(tmp_path, "simulate", "--n", "100", "--replicas", "1", "--checkpoints", "1,10,100") == 0
    path = mio.read_csv(tmp_path / "path.csv")
    assert [int(r["checkpoint"]) for r in path] == [1, 10, 100]


def test_invalid_probability_exits_2(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--p", "1.2", "--n", "10", "--replicas", "10") == 2
    assert "p must lie in" in capsys.readouterr().err


def test_enumerate(tmp_path):
    assert run(tmp_path, "enumerate", "--s", "0.3", "--n", "1") == 0
    rows = mio.read_csv(tmp_path / "pmf.csv")
    assert [(int(r["x"]), float(r["probability"])) for r in rows] == [(0, 0.7), (1, 0.3)]
    assert run(tmp_path, "enumerate", "--p", "0.8", "--q", "0.2", "--n", "3") == 0
    probs = [float(r["probability"]) for r in mio.read_csv(tmp_path / "pmf.csv")]
    assert sum(probs) == pytest.approx(1.0)
    assert len(probs) == 4


def test_enumerate_over_cap(tmp_path, capsys):
    assert run(tmp_path, "enumerate", "--n", "5000") == 2
    assert "cap" in capsys.readouterr().err


def test_verify_clt_pass(tmp_path):
    code = run(tmp_path, "verify", "clt", "--p", "0.5", "--q", "0.5", "--n", "4096", "--replicas", "20000")
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["schemaVersion"] == mio.SCHEMA_VERSION
    assert report["reports"][0]["verdict"] == "pass"
    assert (tmp_path / "summary.txt").read_text().startswith("# manifest_sha256=")


def test_verify_hypothesis_violation(tmp_path, capsys):
    assert run(tmp_path, "verify", "clt", "--p", "0.9", "--q", "0.1") == 2
    assert "alpha ≤ 1/2 required" in capsys.readouterr().err


def test_verify_limit_reports_four_moments(tmp_path):
    code = run(tmp_path, "verify", "limit", "--p", "0.75", "--q", "0", "--s", "1", "--n", "1024", "--replicas", "5000")
    assert code in (0, 3)
    est = json.loads((tmp_path / "report.json").read_text())["reports"][0]["estimates"]
    assert {"m1", "m2", "m3", "m4"} <= set(est)


def test_verify_statistical_failure_exits_3(tmp_path):
    # a deliberately tight window the estimate cannot meet
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"thresholds": {"variance_ratio": [0.999999, 1.000001]}}))
    code = main(["verify", "clt", "--config", str(cfg), "--n", "1024", "--replicas", "2000", "--out", str(tmp_path)])
    assert code == 3


def test_verify_lil_diag_exits_0(tmp_path):
    assert run(tmp_path, "verify", "lil-diag", "--n", "20000", "--replicas", "2") == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["reports"][0]["verdict"] == "diagnostic"


def test_verify_all_skips_inapplicable(tmp_path):
    code = run(tmp_path, "verify", "all", "--p", "0.5", "--q", "0.5", "--n", "2048", "--replicas", "2000", "--checkpoints", "pow2")
    report = json.loads((tmp_path / "report.json").read_text())
    assert [s["theorem"] for s in report["skipped"]] == ["limit"]
    assert code in (0, 3)


def test_phase_diagram_cli(tmp_path):
    code = run(tmp_path, "phase-diagram", "--point", "0.5,0.5", "--point", "0.8,0,1", "--n", "16384", "--replicas", "5000", "--first-checkpoint", "64")
    assert code == 0
    rows = mio.read_csv(tmp_path / "phase.csv")
    assert [r["regime"] for r in rows] == ["diffusive", "superdiffusive"]
    assert float(rows[1]["predicted_exponent"]) == pytest.approx(1.6)


def test_phase_diagram_empty_grid(tmp_path):
    assert run(tmp_path, "phase-diagram") == 2
    assert run(tmp_path, "phase-diagram", "--point", "a,b") == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 0.6, "q": 0.3, "n": 64, "replicas": 10}))
    assert main(["simulate", "--config", str(cfg), "--q", "0.1", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["p"] == 0.6
    assert manifest["config"]["q"] == 0.1
    assert manifest["config"]["s"] == 0.5


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"pp": 0.6}))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_config_round_trip():
    cfg = mio.RunConfig(p=0.3, q=0.1, checkpoints=[1, 5, 9], thresholds={"ks_pvalue": 0.01}, n=10)
    assert mio.parse_config(mio.emit_config(cfg)) == cfg
    assert mio.parse_config(mio.emit_config(mio.RunConfig())) == mio.RunConfig()


def test_real_formatting_round_trips():
    for v in (0.1, 1 / 3, 2.0**-1074, 1e300, -0.0):
        assert float(mio.fmt_real(v)) == v
