"""Experiment plans: grids, artifacts, reference validation, determinism."""

import math

import numpy as np
import pytest

from abandonq import experiments
from abandonq.diffusion import approximate
from abandonq.distributions import make_dist
from abandonq.errors import InvalidParams, ReferenceMismatch
from abandonq.experiments import (
    BUDGET_NAMES,
    MEASURES,
    PLAN_KINDS,
    TAIL_MEASURES,
    Budget,
    CellCheck,
    ExperimentPlan,
    TableCell,
    ValidationReport,
    approx_value,
    default_services,
    find_reference,
    grid_model,
    h2_service,
    load_reference,
    matches_sig_digits,
    run_plan,
    system_label,
    validate_against_reference,
)


class TestPlanValidation:
    def test_kind_names(self):
        assert len(PLAN_KINDS) == 6
        assert BUDGET_NAMES == ("desk", "paper")

    def test_bad_kind(self):
        with pytest.raises(InvalidParams, match="kind"):
            ExperimentPlan(kind="Tables")

    def test_bad_budget(self):
        with pytest.raises(InvalidParams, match="budget"):
            ExperimentPlan(kind="Figure1", budget="huge")

    def test_bad_grid(self):
        with pytest.raises(InvalidParams, match="positive"):
            ExperimentPlan(kind="Figure1", gammas=(0.0,))
        with pytest.raises(InvalidParams, match="rho"):
            ExperimentPlan(kind="Figure1", rho=1.0)
        with pytest.raises(InvalidParams, match="server"):
            ExperimentPlan(kind="Figure1", n=(0,))


class TestGridPieces:
    def test_default_services(self):
        services = default_services(2.0)
        assert [s.family for s in services] == ["deterministic", "erlang2", "lognormal"]
        assert all(s.mean == pytest.approx(0.5) for s in services)
        assert services[2].scv == pytest.approx(1.52)

    def test_h2_service(self):
        dist = h2_service()
        assert dist.mean == pytest.approx(1.0, abs=1e-3)
        assert dist.scv == pytest.approx(4.0, abs=1e-3)

    def test_system_label(self):
        assert system_label(make_dist("deterministic", mean=1.0), 100) == "M/D/100+M"
        assert system_label(h2_service(), 5) == "M/H2/5+M"

    def test_grid_model(self):
        model = grid_model(100, 10.0, make_dist("erlang2", mean=1.0), 1.2, 1.0)
        assert model.lam == pytest.approx(120.0)
        assert model.rho == pytest.approx(1.2)
        assert model.gamma == pytest.approx(10.0)

    def test_approx_value_covers_all_measures(self):
        approx = approximate(n=100, mu=1.0, rho=1.2, gamma=10.0, ca2=1.0, cs2=0.5)
        assert approx_value(approx, "abd_fraction") == approx.alpha
        assert approx_value(approx, "queue_mean") == approx.q
        assert approx_value(approx, "queue_var") == approx.sigma2_queue
        assert approx_value(approx, "wait_mean") == approx.w
        assert approx_value(approx, "wait_var") == approx.sigma2_wait
        assert approx_value(approx, "queue_tail_0.5") == approx.queue_tail(0.5)
        assert approx_value(approx, "wait_tail_2") == approx.wait_tail(2.0)
        with pytest.raises(InvalidParams):
            approx_value(approx, "sojourn_mean")


class TestSigDigits:
    def test_within_half_ulp(self):
        assert matches_sig_digits(0.16665, 0.1667)
        assert matches_sig_digits(0.16675, 0.1667)
        assert not matches_sig_digits(0.16676, 0.1667)
        assert not matches_sig_digits(0.1656, 0.1667)

    def test_scales(self):
        assert matches_sig_digits(1460.4, 1460.0)
        assert not matches_sig_digits(1460.6, 1460.0)
        assert matches_sig_digits(0.0050004, 0.005000)

    def test_zero_reference(self):
        assert matches_sig_digits(1e-5, 0.0)
        assert not matches_sig_digits(0.01, 0.0)


class TestReferenceData:
    def test_row_count(self):
        ref = load_reference()
        assert len(ref) == 324
        assert {r.source for r in ref} == {"sim", "approx"}
        assert {r.table for r in ref} == {"table_measures", "table_tails"}

    def test_every_approx_row_matches_closed_form(self):
        """The shipped closed-form values are reproducible from scratch."""
        for row in load_reference():
            if row.source != "approx":
                continue
            n = int(row.system.split("/")[2].split("+")[0])
            scv = {"D": 0.0, "E2": 0.5, "LN": 1.52}[row.system.split("/")[1]]
            gamma = row.gamma if row.gamma is not None else 3.0  # tails are gamma-free
            approx = approximate(n=n, mu=1.0, rho=1.2, gamma=gamma, ca2=1.0, cs2=scv)
            assert matches_sig_digits(approx_value(approx, row.measure), row.value), row

    def test_sim_rows_have_half_widths(self):
        for row in load_reference():
            if row.source == "sim":
                assert row.half_width is not None and row.half_width > 0
                assert row.gamma is not None

    def test_find_reference_wildcard(self):
        cell = find_reference("M/D/100+M", 7.7, "queue_tail_1", "approx")
        assert cell is not None and cell.value == pytest.approx(0.1160)
        assert find_reference("M/D/100+M", 7.7, "queue_tail_1", "sim") is None
        exact = find_reference("M/D/100+M", 10.0, "queue_mean", "approx")
        assert exact is not None and exact.value == pytest.approx(200.0)


def _cell(measure, sim_value, approx_val, system="M/D/100+M", gamma=10.0):
    return TableCell(
        table="table_measures",
        system=system,
        service="deterministic",
        n=100,
        rho=1.2,
        gamma=gamma,
        measure=measure,
        sim_value=sim_value,
        half_width=0.01,
        approx_value=approx_val,
        replications=10,
    )


class TestValidate:
    def test_matching_cell_passes(self):
        report = validate_against_reference([_cell("queue_mean", 200.9, 200.0)], "desk")
        assert report.passed
        assert {c.source for c in report.checks} == {"sim", "approx"}

    def test_sim_out_of_band_fails(self):
        report = validate_against_reference([_cell("queue_mean", 208.0, 200.0)], "desk")
        assert not report.passed
        bad = report.failures
        assert len(bad) == 1 and bad[0].source == "sim"
        with pytest.raises(ReferenceMismatch, match="queue_mean"):
            report.raise_if_failed()

    def test_approx_off_fails(self):
        report = validate_against_reference([_cell("queue_mean", 200.0, 200.3)], "desk")
        assert any(not c.passed and c.source == "approx" for c in report.checks)

    def test_paper_bands_tighter(self):
        cell = _cell("queue_var", 790.0, 700.0)  # ref sim 749.2
        desk = validate_against_reference([cell], "desk")
        paper = validate_against_reference([cell], "paper")
        sim_desk = [c for c in desk.checks if c.source == "sim"][0]
        sim_paper = [c for c in paper.checks if c.source == "sim"][0]
        assert sim_desk.passed and not sim_paper.passed

    def test_unknown_cell_skipped(self):
        report = validate_against_reference(
            [_cell("queue_mean", 5.0, 5.0, system="M/D/7+M", gamma=3.0)], "desk"
        )
        assert len(report.checks) == 0 and report.passed

    def test_rel_gap(self):
        assert _cell("queue_mean", 200.0, 190.0).rel_gap == pytest.approx(0.05)


class TestRunPlanFast:
    def test_ys_plan(self):
        result = run_plan(ExperimentPlan(kind="YsLawReport"))
        assert result.passed
        assert set(result.artifacts) == {"ys_law.csv", "ys_law_report_validation.txt"}
        lines = result.artifacts["ys_law.csv"].splitlines()
        assert lines[0] == "s,variance,initial,arrival,service,abandonment"
        assert len(lines) == 6
        assert len(result.details["grid_checks"]) == 9

    def test_empty_grid_warns_and_passes(self):
        plan = ExperimentPlan(kind="TableMeasures", services=())
        with pytest.warns(UserWarning, match="empty model grid"):
            result = run_plan(plan)
        assert result.passed
        assert result.artifacts == {}
        assert result.cells == []

    def test_figure_plan_small(self):
        plan = ExperimentPlan(kind="Figure1", n=(5,), gammas=(1.0,))
        result = run_plan(plan)
        assert result.passed and result.validation is None
        assert "figure_h2_gamma1.csv" in result.artifacts
        rows = result.artifacts["figure_h2_gamma1.csv"].splitlines()[1:]
        pmf = np.array([float(r.split(",")[1]) for r in rows])
        gauss = np.array([float(r.split(",")[2]) for r in rows])
        assert pmf.sum() == pytest.approx(1.0, abs=1e-8)
        assert 0.0 < result.details["tv"][1.0] < 1.0
        # the reported tv also counts gaussian mass outside the chain support,
        # so the half-L1 over the CSV states is a lower bound
        assert result.details["tv"][1.0] >= 0.5 * np.abs(pmf - gauss).sum() - 1e-9

    def test_write(self, tmp_path):
        result = run_plan(ExperimentPlan(kind="YsLawReport"), out_dir=tmp_path / "ys")
        files = sorted(p.name for p in (tmp_path / "ys").glob("*"))
        assert files == ["ys_law.csv", "ys_law_report_validation.txt"]


@pytest.fixture()
def tiny_budget(monkeypatch):
    monkeypatch.setitem(experiments.SIM_BUDGETS, "desk", Budget(3, 4000.0))
    monkeypatch.setitem(experiments.SWEEP_BUDGETS, "desk", Budget(3, 4000.0))
    monkeypatch.setitem(experiments.FCLT_REPLICATIONS, "desk", 600)


TINY_TABLE = dict(
    kind="TableMeasures",
    n=(5,),
    gammas=(20.0, 50.0),
    services=(make_dist("deterministic", mean=1.0),),
)


class TestRunPlanTables:
    def test_table_cells_and_artifacts(self, tiny_budget):
        result = run_plan(ExperimentPlan(**TINY_TABLE), reference=())
        assert result.passed
        assert set(result.artifacts) == {
            "table_measures.csv", "table_measures.md", "table_measures_validation.txt",
        }
        assert len(result.cells) == 2 * len(MEASURES)
        for cell in result.cells:
            assert cell.system == "M/D/5+M"
            assert cell.replications == 3
            assert math.isfinite(cell.sim_value)
            assert cell.approx_value == pytest.approx(
                approx_value(grid_model(5, cell.gamma, TINY_TABLE["services"][0], 1.2, 1.0).approx(), cell.measure)
            )
        header = result.artifacts["table_measures.csv"].splitlines()[0]
        assert header.startswith("table,system,service,n,rho,gamma,measure,sim_value")
        assert "### M/D/5+M" in result.artifacts["table_measures.md"]

    def test_tails_measures(self, tiny_budget):
        plan = ExperimentPlan(**{**TINY_TABLE, "kind": "TableTails", "gammas": (50.0,)})
        result = run_plan(plan, reference=())
        assert sorted({c.measure for c in result.cells}) == sorted(TAIL_MEASURES)

    def test_byte_identical_artifacts(self, tiny_budget):
        first = run_plan(ExperimentPlan(**TINY_TABLE), reference=())
        second = run_plan(ExperimentPlan(**TINY_TABLE), reference=())
        assert first.artifacts == second.artifacts

    def test_seed_changes_sim_not_approx(self, tiny_budget):
        base = run_plan(ExperimentPlan(**TINY_TABLE), reference=())
        moved = run_plan(ExperimentPlan(**TINY_TABLE, seed=1), reference=())
        for a, b in zip(base.cells, moved.cells):
            assert a.approx_value == b.approx_value
            assert a.sim_value != b.sim_value

    def test_worker_pool_matches_inline(self, tiny_budget):
        inline = run_plan(ExperimentPlan(**TINY_TABLE), reference=())
        pooled = run_plan(ExperimentPlan(**TINY_TABLE), reference=(), workers=2)
        assert inline.artifacts == pooled.artifacts

    def test_validation_against_shipped_reference(self, tiny_budget):
        """Approx cells hit the reference even when the sim budget is tiny."""
        result = run_plan(ExperimentPlan(**TINY_TABLE))
        assert result.validation is not None
        approx_checks = [c for c in result.validation.checks if c.source == "approx"]
        assert len(approx_checks) == 2 * len(MEASURES)
        assert all(c.passed for c in approx_checks)


class TestRunPlanSweepAndFclt:
    def test_sweep_structure(self, tiny_budget):
        plan = ExperimentPlan(
            kind="ConvergenceSweep",
            n=(4, 16),
            gammas=(2.0, 8.0),
            small_n=3,
            services=(make_dist("exponential", mean=1.0),),
        )
        result = run_plan(plan)
        csv_lines = result.artifacts["convergence_sweep.csv"].splitlines()
        assert csv_lines[0] == "regime,n,gamma,ks_distance,replications"
        assert len(csv_lines) == 5
        assert set(result.details) == {"many_server", "long_patience"}
        assert result.details["many_server"]["points"] == [(4, 2.0), (16, 4.0)]
        for ks in result.details["many_server"]["ks"]:
            assert 0.0 < ks < 1.0
        assert len(result.validation.checks) == 2

    def test_monotone_helper(self):
        mono = experiments._monotone_with_one_inversion
        assert mono([0.5, 0.3, 0.2])
        assert mono([0.5, 0.3, 0.35, 0.2])
        assert not mono([0.5, 0.6, 0.3, 0.4])
        assert mono([0.1])

    def test_fclt_plan(self, tiny_budget):
        plan = ExperimentPlan(
            kind="FcltReport",
            n=(200,),
            gammas=(50.0,),
            services=(make_dist("erlang2", mean=1.0),),
        )
        result = run_plan(plan)
        assert set(result.artifacts) == {
            "fclt_report.csv", "fclt_report.txt", "fclt_report_validation.txt",
        }
        lines = result.artifacts["fclt_report.csv"].splitlines()
        assert lines[0] == "n,gamma,law,t,mean,var,se"
        assert len(lines) == 5
        report = result.details["reports"][(200, 50.0, "erlang2")]
        assert report.target_slope == pytest.approx(0.5)
        assert {c.measure for c in result.validation.checks} == {
            "variance_slope", "increment_corr",
        }


class TestValidationReportText:
    def test_summary_lines(self):
        check = CellCheck(
            system="M/D/100+M", gamma=10.0, measure="queue_mean", source="sim",
            ours=201.0, reference=200.0, band="rel 0.01", passed=True,
        )
        report = ValidationReport(checks=(check,))
        text = report.summary()
        assert "PASS M/D/100+M gamma=10 queue_mean [sim]" in text
        assert text.endswith("1/1 checks passed")

    def test_nan_gamma_line(self):
        check = CellCheck(
            system="many_server (lognormal)", gamma=float("nan"), measure="ks_monotone",
            source="sim", ours=0.0, reference=1.0, band="at most one inversion", passed=True,
        )
        assert "gamma=nan" not in check.line()
