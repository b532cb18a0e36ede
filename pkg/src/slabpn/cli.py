"""Command-line driver for the solver lab.

Subcommands:

    slabpn run <case.toml>            run all solvers of a case
    slabpn sweep <case.toml> --eps .. epsilon sweep with error table
    slabpn error <sol.csv> <ref.csv>  relative error between two fluxes
    slabpn mc <case.toml>             Monte Carlo reference only
    slabpn plot <csv...> -o out.svg   overlay phi0 curves

The output directory comes from --outdir, else $SLABPN_OUTDIR, else the
working directory.  Failures exit nonzero with a JSON error object on
stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .cases import CaseFile, run_case, sweep_epsilon
from .reference import McReference
from .solution import FluxSolution, compute_error


def _outdir(args):
    return args.outdir or os.environ.get("SLABPN_OUTDIR", ".")


def _cmd_run(args):
    case = CaseFile.load(args.case)
    report = run_case(case, outdir=_outdir(args), seed=args.seed)
    summary = {
        "case": report["case"],
        "errors_percent": {f"{r['solver']}_{r['scaling']}": r["xi_rel_percent"]
                           for r in report["runs"]},
        "report": report["report_json"],
    }
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_sweep(args):
    case = CaseFile.load(args.case)
    epsilons = [float(e) for e in args.eps.split(",")]
    rows, csv_path = sweep_epsilon(case, epsilons, outdir=_outdir(args),
                                   seed=args.seed)
    for row in rows:
        print(f"eps={row['epsilon']:g} {row['solver']} {row['scaling']}: "
              f"{100.0 * row['xi_rel']:.1f}%")
    print(f"table: {csv_path}")
    return 0


def _cmd_error(args):
    sol = FluxSolution.from_csv(args.solution, {"solver": args.solution})
    ref = FluxSolution.from_csv(args.reference, {"solver": args.reference})
    report = compute_error(sol, ref)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_mc(args):
    case = CaseFile.load(args.case)
    cfg = dict(case.mc_config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    problem = case.make_problem("unscaled")
    ref = McReference(**cfg).fit(problem)
    outdir = _outdir(args)
    os.makedirs(outdir, exist_ok=True)
    tally_csv = os.path.join(outdir, f"{case.name}_mc.csv")
    manifest_path = os.path.join(outdir, f"{case.name}_mc_manifest.json")
    ref.tally_.to_csv(tally_csv)
    manifest = {
        "case": case.name,
        "n_histories": ref.tally_.n_histories,
        "seed": ref.tally_.seed,
        "balance": ref.tally_.balance_mean,
        "balance_stderr": ref.tally_.balance_stderr,
        "absorbed": ref.tally_.absorbed,
        "leaked": ref.tally_.leaked,
        "tally_csv": tally_csv,
    }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(manifest, indent=2))
    return 0


def _cmd_plot(args):
    from .svgplot import save_plot

    series = []
    for path in args.csv:
        sol = FluxSolution.from_csv(path)
        label = os.path.splitext(os.path.basename(path))[0]
        series.append((label, sol.grid, sol.phi0))
    save_plot(args.output, series, ylabel="phi_0")
    print(args.output)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="slabpn",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default=None,
                        help="output directory (default: $SLABPN_OUTDIR or .)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the solvers of a case file")
    p_run.add_argument("case")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the base seed of stochastic solvers")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="epsilon sweep of a diffusive case")
    p_sweep.add_argument("case")
    p_sweep.add_argument("--eps", required=True,
                         help="comma-separated epsilon values")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_err = sub.add_parser("error", help="relative error between two flux CSVs")
    p_err.add_argument("solution")
    p_err.add_argument("reference")
    p_err.set_defaults(func=_cmd_error)

    p_mc = sub.add_parser("mc", help="Monte Carlo reference for a case")
    p_mc.add_argument("case")
    p_mc.add_argument("--seed", type=int, default=None)
    p_mc.set_defaults(func=_cmd_mc)

    p_plot = sub.add_parser("plot", help="overlay phi0 curves from CSVs")
    p_plot.add_argument("csv", nargs="+")
    p_plot.add_argument("-o", "--output", required=True)
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        err = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
