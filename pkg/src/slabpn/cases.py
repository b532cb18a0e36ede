"""Declarative experiment cases: TOML parsing, runs, and epsilon sweeps.

A case file names a slab problem, the solvers to run on it (each with
its own config block), the reference to compare against, and the
evaluation grid size.  ``run_case`` executes everything and writes flux
CSVs, an error-report JSON and an SVG overlay plot; ``sweep_epsilon``
repeats a diffusive-regime case across epsilon values and tabulates the
relative errors.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .base import evaluation_grid
from .lsfe import LsfeSolver
from .pinn import PinnSolver
from .problems import (BoundaryKind, MaterialRegion, ScalingMode, SlabProblem,
                       diffusive_slab)
from .reference import AnalyticDiffusion, McReference
from .solution import compute_error
from .svgplot import save_plot

_PROBLEM_KEYS = {"kind", "order", "epsilon", "alpha", "x_left", "x_right",
                 "bc_left", "bc_right", "source", "regions"}
_REGION_KEYS = {"x_lo", "x_hi", "sigma_t", "sigma_a", "q"}
_RUN_KEYS = {"solvers", "scalings", "reference", "grid_points"}
_PINN_KEYS = {"hidden_layers", "hidden_width", "activation", "n_collocation",
              "boundary_weight", "optimizer", "learning_rate", "max_steps",
              "lbfgs_memory", "lbfgs_max_iters", "lbfgs_tol", "seeds",
              "log_every", "output_scale", "residual_scale", "boundary_scale"}
_LSFE_KEYS = {"n_elements", "boundary_weight"}
_MC_KEYS = {"n_histories", "seed", "weight_cutoff", "n_cells", "n_chunks"}
_TOP_KEYS = {"name", "problem", "run", "pinn", "lsfe", "mc", "output"}


def _check_keys(table, allowed, where):
    unknown = set(table) - allowed
    if unknown:
        raise ValueError(f"unknown key(s) in [{where}]: {sorted(unknown)}")


@dataclass
class CaseFile:
    """Parsed experiment case."""

    name: str
    problem_spec: dict
    solvers: list
    scalings: list
    reference: str
    grid_points: int = 200
    pinn_config: dict = field(default_factory=dict)
    lsfe_config: dict = field(default_factory=dict)
    mc_config: dict = field(default_factory=dict)
    outdir: str | None = None

    @classmethod
    def parse(cls, data, name_hint="case"):
        _check_keys(data, _TOP_KEYS, "case")
        prob = data.get("problem")
        if prob is None:
            raise ValueError("case file needs a [problem] table")
        _check_keys(prob, _PROBLEM_KEYS, "problem")
        kind = prob.get("kind", "regions" if "regions" in prob else "diffusive")
        if kind == "diffusive":
            for key in ("epsilon", "alpha"):
                if key not in prob:
                    raise ValueError(f"diffusive problem needs '{key}'")
        elif kind == "regions":
            regions = prob.get("regions")
            if not regions:
                raise ValueError("regions problem needs [[problem.regions]]")
            for reg in regions:
                _check_keys(reg, _REGION_KEYS, "problem.regions")
        else:
            raise ValueError(f"unknown problem kind {kind!r}")
        run = data.get("run", {})
        _check_keys(run, _RUN_KEYS, "run")
        solvers = list(run.get("solvers", ["lsfe"]))
        for solver in solvers:
            if solver not in ("pinn", "lsfe"):
                raise ValueError(f"unknown solver {solver!r}")
        scalings = [str(s) for s in run.get("scalings", ["unscaled"])]
        for s in scalings:
            ScalingMode(s)
        reference = run.get("reference", "analytic")
        if reference not in ("analytic", "mc"):
            raise ValueError(f"unknown reference {reference!r}")
        for table, allowed in (("pinn", _PINN_KEYS), ("lsfe", _LSFE_KEYS),
                               ("mc", _MC_KEYS)):
            _check_keys(data.get(table, {}), allowed, table)
        out = data.get("output", {})
        _check_keys(out, {"dir"}, "output")
        case = cls(
            name=str(data.get("name", name_hint)),
            problem_spec=prob,
            solvers=solvers,
            scalings=scalings,
            reference=reference,
            grid_points=int(run.get("grid_points", 200)),
            pinn_config=dict(data.get("pinn", {})),
            lsfe_config=dict(data.get("lsfe", {})),
            mc_config=dict(data.get("mc", {})),
            outdir=out.get("dir"),
        )
        case.make_problem(case.scalings[0])  # validate eagerly
        return case

    @classmethod
    def load(cls, path):
        path = Path(path)
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        return cls.parse(data, name_hint=path.stem)

    def make_problem(self, scaling, epsilon=None):
        """Instantiate the SlabProblem under a scaling mode.

        ``epsilon`` overrides the case epsilon (diffusive problems only).
        """
        prob = self.problem_spec
        kind = prob.get("kind", "regions" if "regions" in prob else "diffusive")
        order = int(prob.get("order", 1))
        bc_l = BoundaryKind(prob.get("bc_left", "vacuum"))
        bc_r = BoundaryKind(prob.get("bc_right", "vacuum"))
        mode = ScalingMode(scaling)
        if kind == "diffusive":
            eps = float(epsilon if epsilon is not None else prob["epsilon"])
            alpha = float(prob["alpha"])
            source = prob.get("source", "manufactured")
            if source == "manufactured":
                source = (1.0, 15.0 * alpha, -1.5 * alpha)
            return diffusive_slab(eps, alpha, source,
                                  x_left=float(prob.get("x_left", 0.0)),
                                  x_right=float(prob.get("x_right", 10.0)),
                                  order=order, bc_left=bc_l, bc_right=bc_r,
                                  scaling=mode)
        if epsilon is not None:
            raise ValueError("epsilon override requires a diffusive problem")
        regions = tuple(
            MaterialRegion(float(r["x_lo"]), float(r["x_hi"]),
                           float(r["sigma_t"]), float(r["sigma_a"]),
                           r.get("q", 0.0))
            for r in prob["regions"])
        return SlabProblem(regions, order, bc_l, bc_r, mode)

    def make_solver(self, kind, seed_base=None):
        if kind == "lsfe":
            return LsfeSolver(**self.lsfe_config)
        if kind == "pinn":
            cfg = dict(self.pinn_config)
            if "seeds" in cfg:
                cfg["seeds"] = tuple(cfg["seeds"])
            if seed_base is not None:
                n = len(cfg.get("seeds", (0, 1, 2)))
                cfg["seeds"] = tuple(seed_base + i for i in range(n))
            return PinnSolver(**cfg)
        raise ValueError(f"unknown solver {kind!r}")

    def make_reference(self, seed_base=None):
        if self.reference == "analytic":
            return AnalyticDiffusion()
        cfg = dict(self.mc_config)
        if seed_base is not None:
            cfg["seed"] = seed_base
        return McReference(**cfg)


def bundled_case(name):
    """Load one of the case files shipped with the package."""
    res = importlib.resources.files("slabpn") / "cases" / f"{name}.toml"
    with importlib.resources.as_file(res) as path:
        return CaseFile.load(path)


def run_case(case, outdir=".", seed=None):
    """Execute all (solver, scaling) combinations of a case.

    Writes one flux CSV per combination, the reference CSV, a JSON
    report with configs and error metrics, and an SVG overlay of all
    phi0 curves.  Returns the report dict.
    """
    outdir = Path(case.outdir or outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()

    base_problem = case.make_problem(case.scalings[0])
    reference = case.make_reference(seed_base=seed)
    ref_problem = case.make_problem("unscaled")
    reference.fit(ref_problem)
    if case.reference == "mc":
        ref_solution = reference.to_solution()
        grid = ref_solution.grid
    else:
        grid = evaluation_grid(base_problem, case.grid_points)
        ref_solution = reference.to_solution(grid)
    ref_csv = outdir / f"{case.name}_reference.csv"
    ref_solution.to_csv(ref_csv)

    report = {
        "case": case.name,
        "reference": case.reference,
        "grid_points": int(grid.size),
        "runs": [],
        "artifacts": [str(ref_csv)],
    }
    series = []
    for solver_kind in case.solvers:
        for scaling in case.scalings:
            problem = case.make_problem(scaling)
            solver = case.make_solver(solver_kind, seed_base=seed)
            t0 = time.perf_counter()
            solver.fit(problem)
            seconds = time.perf_counter() - t0
            sol = solver.to_solution(grid)
            err = compute_error(sol, ref_solution, grid)
            label = f"{solver_kind}_{scaling}"
            csv_path = outdir / f"{case.name}_{label}.csv"
            sol.to_csv(csv_path)
            entry = {
                "solver": solver_kind,
                "scaling": scaling,
                "xi_rel": err.xi_rel,
                "xi_rel_percent": round(100.0 * err.xi_rel, 1),
                "xi_rel_pointwise": err.xi_rel_pointwise,
                "seconds": seconds,
                "config": _jsonable(solver.get_params()),
                "csv": str(csv_path),
            }
            if solver_kind == "pinn":
                entry["restarts"] = [
                    {"seed": t.seed, "best_loss": t.best_loss,
                     "status": t.status,
                     "xi_rel": compute_error(
                         type(sol)(grid, t.network.forward(grid),
                                   {"solver": "pinn"}),
                         ref_solution, grid).xi_rel}
                    for t in solver.trained_]
            if len(base_problem.interfaces) == 1:
                cut = base_problem.interfaces[0]
                mask = grid >= cut
                sub = compute_error(
                    type(sol)(grid[mask], sol.moments[mask], sol.metadata),
                    type(sol)(grid[mask], ref_solution.moments[mask],
                              ref_solution.metadata))
                entry["xi_rel_beyond_interface"] = sub.xi_rel
            report["runs"].append(entry)
            report["artifacts"].append(str(csv_path))
            series.append((label, grid, sol.phi0))

    series.append((f"reference ({case.reference})", grid, ref_solution.phi0))
    svg_path = outdir / f"{case.name}.svg"
    save_plot(svg_path, series, title=case.name, ylabel="phi_0")
    report["artifacts"].append(str(svg_path))
    report["seconds_total"] = time.perf_counter() - t_start

    json_path = outdir / f"{case.name}_report.json"
    with open(json_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    report["report_json"] = str(json_path)
    return report


def sweep_epsilon(case, epsilons, outdir=".", seed=None):
    """Run a diffusive case across epsilon values; tabulate xi_rel.

    Returns the rows and writes a CSV shaped like the headline error
    table: one row per (solver, scaling), one column per epsilon.
    """
    if case.reference != "analytic":
        raise ValueError("epsilon sweeps need the analytic reference")
    outdir = Path(case.outdir or outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for eps in epsilons:
        for solver_kind in case.solvers:
            for scaling in case.scalings:
                problem = case.make_problem(scaling, epsilon=eps)
                solver = case.make_solver(solver_kind, seed_base=seed)
                solver.fit(problem)
                grid = evaluation_grid(problem, case.grid_points)
                sol = solver.to_solution(grid)
                ref = AnalyticDiffusion().fit(problem).to_solution(grid)
                err = compute_error(sol, ref, grid)
                rows.append({"epsilon": eps, "solver": solver_kind,
                             "scaling": scaling, "xi_rel": err.xi_rel})
    csv_path = outdir / f"{case.name}_sweep.csv"
    eps_sorted = list(dict.fromkeys(epsilons))
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver"] + [f"eps={e:g}" for e in eps_sorted])
        for solver_kind in case.solvers:
            for scaling in case.scalings:
                cells = []
                for eps in eps_sorted:
                    for row in rows:
                        if (row["epsilon"] == eps
                                and row["solver"] == solver_kind
                                and row["scaling"] == scaling):
                            cells.append(f"{100.0 * row['xi_rel']:.1f}%")
                writer.writerow([f"{solver_kind} {scaling}"] + cells)
    return rows, str(csv_path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
