import json
import subprocess
import sys

import pytest

from advgap.cli import main

CONFIG = """model_kind = "gaussian"
d_list = [8, 32]
noise_list = [1.0]
epsilon_list = [0.0, 0.2]
n_grid = [1, 4, 16]
trials = 2
theta_mode = "prior"
classifier_kinds = ["plain", "thresholded"]
base_seed = 3
mc_test_points = 300
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "sweep.toml"
    path.write_text(CONFIG)
    return path


class TestPipeline:
    def test_sample_train_eval_attack(self, tmp_path, capsys):
        data = tmp_path / "s.json"
        clf = tmp_path / "c.json"
        assert main(["sample", "--model", "gaussian", "--d", "4", "--noise", "1", "--n", "10",
                     "--format", "json", "--out", str(data)]) == 0
        doc = json.loads(data.read_text())
        assert len(doc["X"]) == 10 and doc["model"]["kind"] == "gaussian"
        assert main(["train", "--data", str(data), "--out", str(clf)]) == 0
        assert json.loads(clf.read_text())["classifier"]["kind"] == "linear"
        assert main(["eval", "--classifier", str(clf), "--model-file", str(clf), "--trials", "2000",
                     "--format", "json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert 0 <= out["p_hat"] <= 1 and out["analytic"] is not None
        for attack in ("optimal", "pgd"):
            assert main(["attack", "--classifier", str(clf), "--model-file", str(clf), "--eps", "0.2",
                         "--attack", attack, "--trials", "2000", "--format", "json"]) == 0
            out = json.loads(capsys.readouterr().out)
            assert out["kind"] == ("exact" if attack == "optimal" else "lower-bound")

    def test_sample_csv(self, capsys):
        assert main(["sample", "--model", "bernoulli", "--d", "3", "--noise", "0.2", "--n", "4"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "y,x0,x1,x2" and len(lines) == 5

    def test_bounds_json(self, capsys):
        assert main(["bounds", "cor_gausslinf_n", "eps=0.1", "d=10000"]) == 0
        assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(64)

    def test_bounds_list(self, capsys):
        assert main(["bounds", "--list", "--format", "csv"]) == 0
        assert "thm_gauss_linf_lower" in capsys.readouterr().out


class TestSweepCommands:
    def test_sweep_twice_byte_identical(self, config, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--config", str(config), "--out", str(a)]) == 0
        assert main(["sweep", "--config", str(config), "--out", str(b), "--threads", "4"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_flag_overrides_config(self, config, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["sweep", "--config", str(config), "--out", str(a)])
        main(["sweep", "--config", str(config), "--out", str(b), "--seed", "99"])
        assert a.read_bytes() != b.read_bytes()

    def test_find_min_n_from_csv(self, config, tmp_path, capsys):
        out = tmp_path / "s.csv"
        main(["sweep", "--config", str(config), "--out", str(out)])
        assert main(["find-min-n", "--input", str(out), "--target", "0.5", "--format", "json"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert {r["aggregate"] for r in rows} == {"median over trials"}


class TestExitCodes:
    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["no-such-command"])
        assert exc.value.code == 2

    def test_unknown_check(self):
        assert main(["verify", "not_a_check"]) == 2

    def test_unknown_bound(self):
        assert main(["bounds", "nonsense"]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["sweep", "--config", str(tmp_path / "absent.toml")]) == 3

    def test_unwritable_output(self, config, tmp_path):
        assert main(["sweep", "--config", str(config), "--out", str(tmp_path / "no" / "x.csv")]) == 3

    def test_verify_trivial_passes(self, capsys):
        assert main(["verify", "trivial", "--seed", "7"]) == 0
        assert capsys.readouterr().out.count("PASS") == 2

    def test_verify_failure_exit_code(self, monkeypatch):
        from advgap import analytic
        monkeypatch.setattr(analytic, "_noise_scale", lambda w: float(abs(w).sum()))
        assert main(["verify", "analytic_mc_gaussian"]) == 1

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "advgap.cli", "bounds", "cor_gaussian_robust_error", "d=100"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and json.loads(proc.stdout)["value"] == pytest.approx(0.495)
