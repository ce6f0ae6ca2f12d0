"""Command line behavior: exit codes, artifact layout, determinism."""

import subprocess
import sys
from pathlib import Path

import pytest

from abandonq import cli
from abandonq.experiments import Budget

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL_MODEL = """
[model]
n = 5

[model.arrival]
family = exponential
mean = 0.16666666666666666

[model.service]
family = exponential
mean = 1.0

[model.patience]
family = exponential
mean = 2.0

[sim]
horizon = 2000
replications = 3
seed = 11
"""


@pytest.fixture()
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_MODEL)
    return str(path)


@pytest.fixture()
def tiny_budget(monkeypatch):
    monkeypatch.setitem(cli.SIM_BUDGETS, "desk", Budget(2, 3000.0))


class TestApprox:
    def test_published_row(self, capsys):
        assert cli.main(["approx", str(CONFIGS / "model_md100.cfg")]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("system,n,rho,gamma,abd_fraction")
        fields = out[1].split(",")
        assert fields[0] == "M/D/100+M"
        values = [float(x) for x in fields[4:]]
        # the gamma = 10 row: five moments then six tails
        expected = [0.1667, 200.0, 700.0, 1.823, 0.05000,
                    0.2750, 0.1160, 0.008414, 0.2398, 0.07865, 0.002339]
        for got, want in zip(values, expected):
            assert got == pytest.approx(want, rel=5e-4)

    def test_out_dir(self, tmp_path):
        assert cli.main(["approx", str(CONFIGS / "model_mln5.cfg"),
                         "--out", str(tmp_path)]) == 0
        assert (tmp_path / "approx.csv").exists()

    def test_underloaded_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "under.cfg"
        cfg.write_text(SMALL_MODEL.replace("mean = 0.16666666666666666", "mean = 0.25"))
        with pytest.warns(UserWarning):
            code = cli.main(["approx", str(cfg)])
        assert code == 2
        assert "overloaded" in capsys.readouterr().err

    def test_missing_config(self, capsys):
        assert cli.main(["approx", "nowhere.cfg"]) == 2
        assert "error:" in capsys.readouterr().err


class TestSim:
    def test_stdout_csv(self, small_cfg, capsys):
        assert cli.main(["sim", small_cfg]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "measure,value,half_width_95,replications"
        measures = {ln.split(",")[0] for ln in lines[1:]}
        assert {"abd_fraction", "queue_mean", "queue_var"} <= measures
        assert all(ln.endswith(",3") for ln in lines[1:])

    def test_out_dir_with_histogram(self, small_cfg, tmp_path):
        out = tmp_path / "run"
        assert cli.main(["sim", small_cfg, "--out", str(out)]) == 0
        hist = (out / "histogram.csv").read_text().splitlines()
        assert hist[0] == "state,probability"
        assert sum(float(r.split(",")[1]) for r in hist[1:]) == pytest.approx(1.0)
        assert (out / "results.csv").exists()

    def test_seed_override_changes_values(self, small_cfg, capsys):
        cli.main(["sim", small_cfg])
        first = capsys.readouterr().out
        cli.main(["sim", small_cfg, "--seed", "12"])
        second = capsys.readouterr().out
        cli.main(["sim", small_cfg])
        third = capsys.readouterr().out
        assert first != second
        assert first == third

    def test_budget_flag(self, small_cfg, tiny_budget, capsys):
        assert cli.main(["sim", small_cfg, "--budget", "desk"]) == 0
        lines = capsys.readouterr().out.splitlines()[1:]
        assert all(ln.endswith(",2") for ln in lines)

    def test_bad_budget_name(self, small_cfg):
        with pytest.raises(SystemExit):
            cli.main(["sim", small_cfg, "--budget", "lavish"])


class TestExact:
    def test_markov_small(self, small_cfg, capsys):
        assert cli.main(["exact", small_cfg]) == 0
        captured = capsys.readouterr()
        rows = captured.out.splitlines()
        assert rows[0] == "state,probability"
        assert sum(float(r.split(",")[1]) for r in rows[1:]) == pytest.approx(1.0)
        assert "gaussian comparison" in captured.err

    def test_unsupported_service(self, tmp_path, capsys):
        cfg = tmp_path / "det.cfg"
        cfg.write_text(SMALL_MODEL.replace("family = exponential\nmean = 1.0",
                                           "family = deterministic\nmean = 1.0"))
        assert cli.main(["exact", str(cfg)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_out_dir(self, small_cfg, tmp_path):
        out = tmp_path / "exact"
        assert cli.main(["exact", small_cfg, "--out", str(out)]) == 0
        assert (out / "exact_pmf.csv").exists()
        assert (out / "exact_report.txt").exists()


class TestOu:
    def test_default_path(self, capsys):
        assert cli.main(["ou", "--seed", "5"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,x"
        assert len(lines) == 1002  # header + t in [0, 10] at dt 0.01

    def test_reproducible(self, capsys):
        cli.main(["ou", "--seed", "5"])
        first = capsys.readouterr().out
        cli.main(["ou", "--seed", "5"])
        assert capsys.readouterr().out == first

    def test_multi_path_config(self, tmp_path, capsys):
        cfg = tmp_path / "ou.cfg"
        cfg.write_text("[ou]\nt_max = 1.0\ndt = 0.5\npaths = 3\nseed = 1\n")
        assert cli.main(["ou", str(cfg)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,x1,x2,x3"
        assert len(lines) == 4


class TestYsLaw:
    def test_default_grid(self, capsys):
        assert cli.main(["ys-law"]) == 0
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        assert lines[0] == "s,ca2,cs2,variance,initial,arrival,service,abandonment"
        assert len(lines) == 1 + 5 * 9
        assert "max relative gap" in captured.err

    def test_short_horizon_fails_check(self, tmp_path, capsys):
        cfg = tmp_path / "ys.cfg"
        cfg.write_text("[ys]\ns_check = 1.0\ntol = 1e-9\n")
        assert cli.main(["ys-law", str(cfg)]) == 1


class TestFclt:
    def test_default_cell_passes(self, capsys):
        assert cli.main(["fclt"]) == 0
        captured = capsys.readouterr()
        assert captured.out.splitlines()[0] == "t,mean,var,se"
        assert "variance slope" in captured.err

    def test_short_patience_fails(self, tmp_path, capsys):
        cfg = tmp_path / "fclt.cfg"
        cfg.write_text("[fclt]\nn_streams = 200\ngamma = 1.0\nreplications = 600\n")
        assert cli.main(["fclt", str(cfg)]) == 1

    def test_out_dir(self, tmp_path):
        cfg = tmp_path / "fclt.cfg"
        cfg.write_text("[fclt]\nn_streams = 20\ngamma = 50\nreplications = 600\n")
        out = tmp_path / "fclt_out"
        code = cli.main(["fclt", str(cfg), "--out", str(out)])
        assert code in (0, 1)  # small cell, checks may sit at the edge
        assert (out / "fclt_report.csv").exists()
        assert (out / "fclt_report.txt").exists()


class TestReproduce:
    def test_ys_plan(self, tmp_path, capsys):
        out = tmp_path / "ys"
        code = cli.main(["reproduce", str(CONFIGS / "plan_ys_law.cfg"), "--out", str(out)])
        assert code == 0
        assert (out / "ys_law.csv").exists()
        captured = capsys.readouterr()
        assert "9/9 checks passed" in captured.out

    def test_byte_identical_reruns(self, tmp_path, tiny_budget, monkeypatch):
        from abandonq import experiments
        monkeypatch.setitem(experiments.SWEEP_BUDGETS, "desk", Budget(2, 3000.0))
        cfg = tmp_path / "plan.cfg"
        cfg.write_text(
            "[plan]\nkind = ConvergenceSweep\nn = 4, 9\ngammas = 2, 8\n"
            "small_n = 3\nservices = exponential\nseed = 0\n"
        )
        out1, out2 = tmp_path / "a", tmp_path / "b"
        code1 = cli.main(["reproduce", str(cfg), "--out", str(out1)])
        code2 = cli.main(["reproduce", str(cfg), "--out", str(out2)])
        assert code1 == code2
        names = sorted(p.name for p in out1.glob("*"))
        assert names == sorted(p.name for p in out2.glob("*"))
        for name in names:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_flag_changes_artifacts(self, tmp_path, tiny_budget, monkeypatch):
        from abandonq import experiments
        monkeypatch.setitem(experiments.SWEEP_BUDGETS, "desk", Budget(2, 3000.0))
        cfg = tmp_path / "plan.cfg"
        cfg.write_text(
            "[plan]\nkind = ConvergenceSweep\nn = 4\ngammas = 2\n"
            "small_n = 3\nservices = exponential\n"
        )
        cli.main(["reproduce", str(cfg), "--out", str(tmp_path / "s0")])
        cli.main(["reproduce", str(cfg), "--seed", "1", "--out", str(tmp_path / "s1")])
        a = (tmp_path / "s0" / "convergence_sweep.csv").read_bytes()
        b = (tmp_path / "s1" / "convergence_sweep.csv").read_bytes()
        assert a != b

    def test_bad_plan_config(self, tmp_path, capsys):
        cfg = tmp_path / "plan.cfg"
        cfg.write_text("[plan]\nkind = Unknown\n")
        assert cli.main(["reproduce", str(cfg)]) == 2
        assert "kind" in capsys.readouterr().err


class TestParser:
    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            cli.main([])

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "abandonq.cli", "approx", str(CONFIGS / "model_me2_100.cfg")],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("system,n,rho,gamma")
        assert "M/E2/100+M" in proc.stdout
