from __future__ import annotations

import json

import pytest

from nlslab import __version__
from nlslab.cli import RunConfig, main


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


class TestRunConfig:
    def test_text_round_trip(self):
        cfg = RunConfig(command="scan", potential="inverse:1:0.5", p=4.0, omega_range="2:10:5", seed="1,2")
        assert RunConfig.from_text(cfg.to_text()) == RunConfig(**{**cfg.__dict__, "out": RunConfig().out})
        assert RunConfig.from_text(cfg.to_text()).to_text() == cfg.to_text()

    def test_config_file_overridden_by_flags(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("potential = harmonic:1\np = 3\nomega = -2  # below threshold\n")
        code, out = run(tmp_path, "groundstate", "--config", str(cfg), "--omega", "1")
        assert code == 0
        data = json.loads((out / "groundstate.json").read_text())
        assert "omega = 1.0" in data["config"]

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = blue\n")
        code, _ = run(tmp_path, "groundstate", "--config", str(cfg))
        assert code == 1
        assert "colour" in capsys.readouterr().err


class TestGroundstate:
    def test_writes_files(self, tmp_path):
        code, out = run(tmp_path, "groundstate", "--potential", "harmonic:1", "--p", "3", "--omega", "1")
        assert code == 0
        text = (out / "groundstate.csv").read_text()
        assert text.startswith(f"# nlslab {__version__}\n")
        assert "\nr,phi\n" in text
        data = json.loads((out / "groundstate.json").read_text())
        assert data["version"] == __version__
        assert data["ground_state"]["residual"] < 1e-6

    def test_omega_below_threshold(self, tmp_path, capsys):
        code, _ = run(tmp_path, "groundstate", "--potential", "harmonic:1", "--omega", "-2")
        assert code == 1
        assert "omega below omega1" in capsys.readouterr().err

    def test_p_not_above_one(self, tmp_path, capsys):
        code, _ = run(tmp_path, "groundstate", "--omega", "1", "--p", "1")
        assert code == 1
        assert "p" in capsys.readouterr().err

    def test_deterministic(self, tmp_path):
        args = ("groundstate", "--potential", "inverse:1:0.5", "--p", "2", "--omega", "2.5")
        _, a = run(tmp_path / "a", *args)
        _, b = run(tmp_path / "b", *args)
        for name in ("groundstate.csv", "groundstate.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestVerify:
    def test_harmonic_all_pass(self, tmp_path):
        code, out = run(tmp_path, "verify", "--potential", "harmonic:1", "--p", "3", "--omega", "1")
        assert code == 0
        bundle = json.loads((out / "verify.json").read_text())
        assert set(bundle["checks"]) == {"ground_state", "uniqueness", "pohozaev", "nondegeneracy", "fm_mmp", "key1"}

    def test_zero_potential_fails_only_iv(self, tmp_path):
        code, out = run(tmp_path, "verify", "--potential", "zero", "--oracle-mode", "--p", "3", "--omega", "1")
        assert code != 0
        checks = json.loads((out / "verify.json").read_text())["checks"]
        failed = [name for name, entry in checks.items() if not entry["passed"]]
        assert failed == ["uniqueness"]
        iv = [c for c in checks["uniqueness"]["checks"] if c["name"] == "IV"][0]
        assert iv["reason"] == "G ≡ 0"

    def test_inverse_above_threshold(self, tmp_path):
        code, _ = run(tmp_path, "verify", "--potential", "inverse:1:0.5", "--p", "2", "--omega", "2.2")
        assert code == 0

    def test_inverse_at_omega_one_refused(self, tmp_path, capsys):
        # omega1 = 1.6535 for this potential, so omega = 1 has no ground state
        code, _ = run(tmp_path, "verify", "--potential", "inverse:1:0.5", "--p", "2", "--omega", "1")
        assert code == 1
        assert "omega below omega1" in capsys.readouterr().err


class TestScan:
    @pytest.mark.parametrize("p", ["3", "5"])
    def test_harmonic_all_stable(self, tmp_path, p):
        code, out = run(tmp_path, "scan", "--potential", "harmonic:1", "--p", p, "--omega-range=-0.9:20:12")
        assert code == 0
        points = json.loads((out / "scan.json").read_text())["points"]
        assert len(points) == 12
        assert all(pt["verdict"] == "stable" for pt in points)

    def test_zero_potential_gated(self, tmp_path, capsys):
        code, _ = run(tmp_path, "scan", "--potential", "zero", "--p", "3")
        assert code == 1
        assert "(V1) violated" in capsys.readouterr().err

    def test_spectrum_and_slope(self, tmp_path):
        code, out = run(tmp_path, "spectrum", "--omega", "1")
        assert code == 0
        assert json.loads((out / "spectrum.json").read_text())["spectrum"]["morse_index"] == 1
        code, out = run(tmp_path, "slope", "--omega", "1")
        assert code == 0
        assert json.loads((out / "slope.json").read_text())["slope"]["verdict"] == "stable"


class TestEvolve:
    def test_unperturbed(self, tmp_path):
        code, out = run(tmp_path, "evolve", "--omega", "1", "--eps", "0", "--T", "1")
        assert code == 0
        runs = json.loads((out / "evolve.json").read_text())["runs"]
        assert runs[0]["max_distance"] < 1e-6

    def test_phase_wrap_guard(self, tmp_path, capsys):
        code, _ = run(tmp_path, "evolve", "--omega", "1", "--dt", "0.1", "--T", "1")
        assert code == 1
        assert "phase-wrap guard" in capsys.readouterr().err

    def test_conservation_breach_exit(self, tmp_path):
        # the critical soliton has E ~ 0, so the relative energy drift trips the guard
        code, out = run(
            tmp_path, "evolve", "--potential", "zero", "--oracle-mode", "--p", "5", "--omega", "1", "--T", "1", "--seed", "1"
        )
        assert code == 4
        assert (out / "evolve_seed1.csv").exists()
        assert json.loads((out / "evolve.json").read_text())["runs"][0]["breach"]
