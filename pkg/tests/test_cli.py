import json
import subprocess
import sys

import pytest
import yaml

from holoforms import cli

SMALL = {
    "check-gc": {"chart": {"n": [16, 16]}},
    "develop": {"chart": {"n": [16, 16]}, "tolerances": {"pullback": 1e-3}},
    "monodromy": {"chart": {"n": [64, 16]}},
    "gauss-bonnet": {"surface": {"n": [32, 64]}},
    "geodesic": {"cases": 3, "near_isotropic": 2},
    "models": {"samples": 10},
    "sweep": {"family": {"samples": 5}, "chart": {"n": [32, 16]}},
}


def write(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


@pytest.mark.parametrize("command", sorted(SMALL))
def test_commands_pass(tmp_path, command, capsys):
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(write(tmp_path, SMALL[command])), "--out", str(out)])
    assert code == cli.EXIT_PASS, capsys.readouterr().err
    report = json.loads((out / "report.json").read_text())
    assert report["pass"] and report["command"] == command
    assert set(report) == {"command", "config", "refine", "summary", "gates", "artifacts", "pass"}
    for name in report["artifacts"]:
        assert (out / name).exists()


def test_deterministic(tmp_path):
    cfgp = write(tmp_path, SMALL["geodesic"])
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["geodesic", "--config", str(cfgp), "--out", str(a), "--seed", "7"]) == 0
    assert cli.main(["geodesic", "--config", str(cfgp), "--out", str(b), "--seed", "7"]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert "wall_time_s" in json.loads((a / "timing.json").read_text())


def test_seed_changes_samples(tmp_path):
    cfgp = write(tmp_path, SMALL["models"])
    cli.main(["models", "--config", str(cfgp), "--out", str(tmp_path / "a"), "--seed", "1"])
    cli.main(["models", "--config", str(cfgp), "--out", str(tmp_path / "b"), "--seed", "2"])
    ra = json.loads((tmp_path / "a" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "report.json").read_text())
    assert ra["config"]["seed"] == 1 and ra["summary"] != rb["summary"]


def test_report_round_trip(tmp_path):
    cfgp = write(tmp_path, SMALL["check-gc"])
    cli.main(["check-gc", "--config", str(cfgp), "--out", str(tmp_path / "a")])
    first = tmp_path / "a" / "report.json"
    cli.main(["check-gc", "--config", str(first), "--out", str(tmp_path / "b")])
    assert first.read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_refine_ratio(tmp_path):
    cli.main(["develop", "--config", str(write(tmp_path, SMALL["develop"])), "--out", str(tmp_path / "o"),
              "--refine", "1"])
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert 3.5 < report["summary"]["refinement_ratio"][0] < 4.5


def test_monodromy_json(tmp_path):
    cli.main(["monodromy", "--config", str(write(tmp_path, SMALL["monodromy"])), "--out", str(tmp_path)])
    mon = json.loads((tmp_path / "monodromy.json").read_text())
    assert len(mon["Q"]) == 4 and len(mon["A"]) == 2
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["summary"]["expected_abs_trace"] == pytest.approx(2.589366, abs=1e-6)


class TestExitCodes:
    def test_gate_failure(self, tmp_path):
        cfg = {"psi": {"name": "scalar", "value": 1.0}, "chart": {"n": [16, 16]}}
        assert cli.main(["check-gc", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path)]) == cli.EXIT_GATE
        assert json.loads((tmp_path / "report.json").read_text())["pass"] is False

    def test_develop_refuses_invalid_data(self, tmp_path):
        cfg = {"psi": {"name": "scalar", "value": 1.0}, "chart": {"n": [16, 16]}}
        assert cli.main(["develop", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path)]) == cli.EXIT_GATE

    def test_numerical(self, tmp_path):
        cfg = {"metric": {"name": "conformal", "params": {"base": "euclidean", "f": "0*x"}}, "chart": {"n": [8, 8]}}
        assert cli.main(["check-gc", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path)]) == cli.EXIT_NUMERIC

    @pytest.mark.parametrize("cfg", [
        {"bogus": 1},
        {"tolerances": {"gate": -1}},
        {"chart": {"n": [4, 4]}},
        {"chart": {"n": [16, 99999]}},
        {"metric": {"name": "no-such-metric"}},
        {"metric": {"name": "conformal", "params": {"base": "euclidean", "f": "__import__('os')"}}},
    ])
    def test_schema(self, tmp_path, cfg):
        assert cli.main(["check-gc", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path)]) == cli.EXIT_USAGE

    def test_not_a_mapping(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("- 1\n- 2\n")
        assert cli.main(["check-gc", "--config", str(p), "--out", str(tmp_path)]) == cli.EXIT_USAGE

    def test_bad_yaml(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("a: [1, 2\n")
        assert cli.main(["check-gc", "--config", str(p), "--out", str(tmp_path)]) == cli.EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert cli.main(["check-gc", "--config", str(tmp_path / "nope.yaml")]) == cli.EXIT_USAGE

    def test_unknown_command(self):
        assert cli.main(["frobnicate"]) == cli.EXIT_USAGE

    def test_negative_refine(self, tmp_path):
        assert cli.main(["check-gc", "--refine", "-1", "--out", str(tmp_path)]) == cli.EXIT_USAGE


def test_module_entry_point(tmp_path):
    cfgp = write(tmp_path, SMALL["models"])
    proc = subprocess.run([sys.executable, "-m", "holoforms", "models", "--config", str(cfgp), "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "models: PASS" in proc.stdout


def test_coarse_geodesic_fails_gate(tmp_path):
    cfg = {"cases": 3, "steps": 50, "near_isotropic": 0}
    assert cli.main(["geodesic", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path)]) == cli.EXIT_GATE
