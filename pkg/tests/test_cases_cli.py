"""Case files, the experiment driver and the command-line interface."""

import json

import numpy as np
import pytest

from slabpn import CaseFile, bundled_case, run_case, sweep_epsilon
from slabpn.cli import main
from slabpn.solution import FluxSolution
from slabpn.svgplot import line_plot

TINY_CASE = """
name = "tiny"

[problem]
kind = "diffusive"
order = 1
epsilon = 1e-2
alpha = 1e-2
source = "manufactured"

[run]
solvers = ["lsfe"]
scalings = ["unscaled", "diffusive"]
reference = "analytic"
grid_points = 120

[lsfe]
n_elements = 20
"""

MC_CASE = """
name = "tinymc"

[problem]
kind = "regions"
order = 1
bc_left = "reflective"
bc_right = "reflective"

[[problem.regions]]
x_lo = 0.0
x_hi = 4.0
sigma_t = 1.0
sigma_a = 1.0
q = 1.0

[run]
solvers = ["lsfe"]
scalings = ["unscaled"]
reference = "mc"
grid_points = 10

[lsfe]
n_elements = 8

[mc]
n_histories = 20000
seed = 3
n_cells = 10
"""


@pytest.fixture
def tiny_case(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_CASE)
    return path


@pytest.fixture
def mc_case(tmp_path):
    path = tmp_path / "tinymc.toml"
    path.write_text(MC_CASE)
    return path


class TestCaseFile:
    @pytest.mark.parametrize("name", ["asymptotic_eps2", "interface",
                                      "interface_tanh"])
    def test_bundled_cases_parse(self, name):
        case = bundled_case(name)
        problem = case.make_problem(case.scalings[0])
        assert problem.x_right == 10.0

    def test_unknown_top_key(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text(TINY_CASE + "\n[extra]\nfoo = 1\n")
        with pytest.raises(ValueError, match="unknown key"):
            CaseFile.load(path)

    def test_unknown_solver_key(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text(TINY_CASE + "\n[pinn]\nnot_a_knob = 2\n")
        with pytest.raises(ValueError, match="unknown key"):
            CaseFile.load(path)

    def test_unknown_problem_key(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text(TINY_CASE.replace('epsilon = 1e-2',
                                          'epsilon = 1e-2\nwhatever = 3'))
        with pytest.raises(ValueError, match="unknown key"):
            CaseFile.load(path)

    def test_epsilon_override(self, tiny_case):
        case = CaseFile.load(tiny_case)
        p = case.make_problem("unscaled", epsilon=1e-3)
        assert p.eps.epsilon == 1e-3

    def test_missing_required(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('name = "x"\n[problem]\nkind = "diffusive"\n')
        with pytest.raises(ValueError):
            CaseFile.load(path)


class TestRunCase:
    def test_artifacts_and_report(self, tiny_case, tmp_path):
        case = CaseFile.load(tiny_case)
        out = tmp_path / "out"
        report = run_case(case, outdir=out)
        assert (out / "tiny_lsfe_unscaled.csv").exists()
        assert (out / "tiny_lsfe_diffusive.csv").exists()
        assert (out / "tiny_reference.csv").exists()
        assert (out / "tiny.svg").exists()
        assert (out / "tiny_report.json").exists()
        runs = {(r["solver"], r["scaling"]): r for r in report["runs"]}
        assert runs[("lsfe", "diffusive")]["xi_rel"] < 0.02
        assert runs[("lsfe", "unscaled")]["xi_rel"] > 0.5
        data = json.loads((out / "tiny_report.json").read_text())
        assert data["case"] == "tiny"

    def test_reproducible_artifacts(self, tiny_case, tmp_path):
        case = CaseFile.load(tiny_case)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_case(case, outdir=out1)
        run_case(case, outdir=out2)
        for name in ("tiny_lsfe_unscaled.csv", "tiny_reference.csv",
                     "tiny.svg"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_mc_reference_case(self, mc_case, tmp_path):
        case = CaseFile.load(mc_case)
        report = run_case(case, outdir=tmp_path / "mc")
        run = report["runs"][0]
        # flat infinite-medium flux: LSFE matches MC closely
        assert run["xi_rel"] < 0.1


class TestSweep:
    def test_single_epsilon(self, tiny_case, tmp_path):
        case = CaseFile.load(tiny_case)
        rows, csv_path = sweep_epsilon(case, [1e-2], outdir=tmp_path)
        assert len(rows) == 2
        text = open(csv_path).read()
        assert "eps=0.01" in text

    def test_unscaled_monotone_scaled_below(self, tiny_case, tmp_path):
        case = CaseFile.load(tiny_case)
        rows, _ = sweep_epsilon(case, [1e-2, 1e-3, 1e-4], outdir=tmp_path)
        unscaled = [r["xi_rel"] for r in rows if r["scaling"] == "unscaled"]
        scaled = [r["xi_rel"] for r in rows if r["scaling"] == "diffusive"]
        assert unscaled[0] < unscaled[1] < unscaled[2]
        assert all(s < u for s, u in zip(scaled, unscaled))

    def test_requires_analytic_reference(self, mc_case, tmp_path):
        case = CaseFile.load(mc_case)
        with pytest.raises(ValueError):
            sweep_epsilon(case, [1e-2], outdir=tmp_path)


class TestSvg:
    def test_deterministic(self):
        x = np.linspace(0, 10, 20)
        series = [("a", x, np.sin(x)), ("b", x, np.cos(x))]
        assert line_plot(series) == line_plot(series)

    def test_structure(self):
        x = np.linspace(0, 10, 20)
        svg = line_plot([("flux", x, x**2)], title="t")
        assert svg.startswith("<svg")
        assert "polyline" in svg and "flux" in svg


class TestCli:
    def test_run(self, tiny_case, tmp_path, capsys):
        code = main(["--outdir", str(tmp_path / "cli"), "run", str(tiny_case)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert "errors_percent" in out

    def test_error_command(self, tmp_path, capsys):
        grid = np.linspace(0, 1, 11)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        FluxSolution(grid, (grid + 1.0)[:, None]).to_csv(a)
        FluxSolution(grid, 1.01 * (grid + 1.0)[:, None]).to_csv(b)
        code = main(["error", str(b), str(a)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["xi_rel"] == pytest.approx(0.01, rel=1e-9)

    def test_plot_command(self, tmp_path, capsys):
        grid = np.linspace(0, 1, 11)
        a = tmp_path / "a.csv"
        FluxSolution(grid, (grid + 1.0)[:, None]).to_csv(a)
        svg = tmp_path / "out.svg"
        code = main(["plot", str(a), "-o", str(svg)])
        assert code == 0
        assert svg.read_text().startswith("<svg")

    def test_mc_command(self, mc_case, tmp_path, capsys):
        code = main(["--outdir", str(tmp_path), "mc", str(mc_case),
                     "--seed", "5"])
        assert code == 0
        manifest = json.loads(capsys.readouterr().out)
        assert manifest["seed"] == 5
        assert (tmp_path / "tinymc_mc.csv").exists()

    def test_sweep_command(self, tiny_case, tmp_path, capsys):
        code = main(["--outdir", str(tmp_path), "sweep", str(tiny_case),
                     "--eps", "1e-2,1e-3"])
        assert code == 0
        assert "table:" in capsys.readouterr().out

    def test_failure_is_json(self, capsys):
        code = main(["run", "/nonexistent/case.toml"])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert "error" in err

    def test_env_outdir(self, tiny_case, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("SLABPN_OUTDIR", str(tmp_path / "env"))
        code = main(["run", str(tiny_case)])
        assert code == 0
        assert (tmp_path / "env" / "tiny.svg").exists()
