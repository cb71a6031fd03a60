import json
import pathlib

import pytest

from uavplan.cli import main
from uavplan.evaluator import check_feasibility, load_plan
from uavplan.exact import solve_model_exhaustive
from uavplan.milp import build_milp, solution_to_text
from uavplan.scenario import load_scenario

from scenarios import tiny_delivery

DATA = pathlib.Path(__file__).parent / "data"


def run(*args) -> int:
    return main([str(a) for a in args])


@pytest.fixture
def sf_small_file(tmp_path):
    out = tmp_path / "sf-small.scenario"
    out.write_text((DATA / "sf-small.scenario").read_text())
    return out


class TestGenerate:
    def test_preset_matches_bundled_fixture(self, tmp_path):
        out = tmp_path / "s.scenario"
        assert run("generate", "--preset", "sf-small", "--seed", 1, "--out", out) == 0
        assert out.read_bytes() == (DATA / "sf-small.scenario").read_bytes()

    def test_repeated_invocation_identical(self, tmp_path):
        a, b = tmp_path / "a.scenario", tmp_path / "b.scenario"
        run("generate", "--dims", "6,3,2,2,10", "--seed", 3, "--out", a)
        run("generate", "--dims", "6,3,2,2,10", "--seed", 3, "--out", b)
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.scenario.manifest.json").exists()

    def test_bad_dims_exit_2(self, tmp_path, capsys):
        assert run("generate", "--dims", "0,0,0,0,0", "--out", tmp_path / "x") == 2
        assert capsys.readouterr().err


class TestValidate:
    def test_valid_scenario(self, sf_small_file):
        assert run("validate", sf_small_file, "--json") == 0

    def test_broken_scenario(self, tmp_path):
        bad = tmp_path / "bad.scenario"
        bad.write_text("{ nope")
        assert run("validate", bad) == 2


class TestSolve:
    def test_heuristic_with_preset(self, sf_small_file, tmp_path, capsys):
        plan_file = tmp_path / "plan.json"
        assert (
            run(
                "solve", "--scenario", sf_small_file, "--engine", "heuristic",
                "--preset", "coverage", "--out", plan_file,
            )
            == 0
        )
        summary = json.loads(capsys.readouterr().out)
        assert 0.0 <= summary["objective"] <= 1.0
        assert summary["feasible"] is True
        s = load_scenario(sf_small_file.read_text())
        plan = load_plan(plan_file.read_text(), s)
        assert check_feasibility(s, plan).ok
        assert (tmp_path / "plan.json.tours.json").exists()
        assert (tmp_path / "plan.json.summary.json").exists()

    def test_exact_on_tiny_mixed_matches_pinned_value(self, tmp_path, capsys):
        from test_exact import TINY_MIXED_OBJECTIVE

        scen = tmp_path / "tiny.scenario"
        scen.write_text((DATA / "tiny-mixed.scenario").read_text())
        assert run("solve", "--scenario", scen, "--engine", "exact", "--out", tmp_path / "p.json") == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["objective"] == pytest.approx(TINY_MIXED_OBJECTIVE, abs=1e-9)
        assert summary["proven_optimal"] is True

    def test_exact_guard_refusal_exit_3(self, sf_small_file, tmp_path):
        assert run("solve", "--scenario", sf_small_file, "--engine", "exact", "--out", tmp_path / "p") == 3


class TestLpRoundTrip:
    def test_export_matches_golden(self, tmp_path):
        scen = tmp_path / "t.scenario"
        scen.write_text((DATA / "tiny-delivery.scenario").read_text())
        out = tmp_path / "model.lp"
        assert run("export-lp", "--scenario", scen, "--out", out) == 0
        assert out.read_bytes() == (DATA / "tiny-delivery.lp").read_bytes()

    def test_import_externally_solved_model(self, tmp_path, capsys):
        scen = tmp_path / "t.scenario"
        scen.write_text((DATA / "tiny-delivery.scenario").read_text())
        model = build_milp(tiny_delivery())
        status, val, sol = solve_model_exhaustive(model)
        sol_file = tmp_path / "model.sol"
        sol_file.write_text(solution_to_text(sol))
        out = tmp_path / "plan.json"
        assert run("import-solution", "--scenario", scen, "--solution", sol_file, "--out", out) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["objective"] == pytest.approx(val, abs=1e-6)

    def test_import_nan_exit_2(self, tmp_path, capsys):
        scen = tmp_path / "t.scenario"
        scen.write_text((DATA / "tiny-delivery.scenario").read_text())
        sol_file = tmp_path / "model.sol"
        sol_file.write_text("lam_0_0_0 nan\n")
        assert run("import-solution", "--scenario", scen, "--solution", sol_file, "--out", tmp_path / "p") == 2
        assert "lam_0_0_0" in capsys.readouterr().err


class TestEvaluate:
    def test_reports_written(self, sf_small_file, tmp_path, capsys):
        plan_file = tmp_path / "plan.json"
        run("solve", "--scenario", sf_small_file, "--out", plan_file)
        capsys.readouterr()
        assert run("evaluate", "--scenario", sf_small_file, "--plan", plan_file, "--out", tmp_path / "rep") == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["feasible"] is True
        viol = (tmp_path / "rep.violations.csv").read_text()
        assert viol.startswith("tag,indices,magnitude")
        assert (tmp_path / "rep.satisfaction.csv").exists()

    def test_infeasible_plan_is_data_not_an_error(self, sf_small_file, tmp_path, capsys):
        s = load_scenario(sf_small_file.read_text())
        from uavplan.evaluator import Plan, serialize_plan

        plan_file = tmp_path / "idle.json"
        plan_file.write_text(serialize_plan(Plan.idle(s)))  # deliveries unserved
        assert (
            run(
                "evaluate", "--scenario", sf_small_file, "--plan", plan_file,
                "--out", tmp_path / "rep", "--format", "json",
            )
            == 0
        )
        summary = json.loads(capsys.readouterr().out)
        assert summary["feasible"] is False
        assert summary["violations"] >= 1
        doc = json.loads((tmp_path / "rep.violations.json").read_text())
        assert {v["tag"] for v in doc} == {"DELIVERY"}
        assert (tmp_path / "rep.satisfaction.json").exists()


class TestCompare:
    def test_single_run_single_row(self, sf_small_file, tmp_path):
        out = tmp_path / "cmp.csv"
        assert (
            run(
                "compare", "--scenario", sf_small_file, "--uav-counts", "3",
                "--runs", "heuristic:flexible:save-time", "--out", out,
            )
            == 0
        )
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 2  # header + one row
        assert lines[0].startswith("run,engine,equipment,preset")

    def test_preset_sweep_save_time_minimizes_energy(self, sf_small_file, tmp_path):
        out = tmp_path / "cmp.csv"
        runs = "heuristic:save-time,heuristic:coverage,heuristic:monitoring"
        assert (
            run("compare", "--scenario", sf_small_file, "--uav-counts", "4", "--runs", runs, "--out", out)
            == 0
        )
        lines = out.read_text().strip().splitlines()
        header = lines[0].split(",")
        energy_col = header.index("energy_charges")
        preset_col = header.index("preset")
        energy = {}
        for row in lines[1:]:
            cells = row.split(",")
            energy[cells[preset_col]] = float(cells[energy_col])
        assert energy["save-time"] == min(energy.values())


def test_rerun_reproduces_outputs_byte_identically(sf_small_file, tmp_path):
    first, second = tmp_path / "r1", tmp_path / "r2"
    first.mkdir()
    second.mkdir()
    for root in (first, second):
        run("solve", "--scenario", sf_small_file, "--preset", "coverage", "--out", root / "plan.json")
        run("export-lp", "--scenario", sf_small_file, "--out", root / "model.lp")
    for name in ("plan.json", "plan.json.summary.json", "plan.json.tours.json", "model.lp"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
