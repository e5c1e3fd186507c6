# src/bin/main.py

"""
Command-line front end for the fractional BDF toolkit: weight tables,
Mittag-Leffler values, Volterra limits, single solves, decay indices,
stability ratios, the batch experiments and parameter sweeps.

### Tasks:
- **weights**: Writes `k,omega,delta` (QIA: `j,mu` of row n) and checks the
  sign/partial-sum conditions.
- **mlf**: Evaluates E_{alpha,beta}(z) at a list of points.
- **volterra**: Derives rho from `--alpha --c2` (or takes `--rho`) and prints the
  limit estimate next to c1 / (1 - rho).
- **solve**: Integrates one problem with one scheme and writes `t,x1,...,xd`.
- **decay**: Computes the contractivity (p) or dissipativity (q) index as `t,e,index`.
- **ratios**: Prints the stability ratios of a scheme as key=value lines.
- **experiment**: Reproduces a named experiment (`--set key=value` overrides).
- **sweep**: Solves a (scheme, alpha, h) grid and writes a summary CSV.

### Command-Line Arguments:
- `--out`: Output folder (default `FBDF_OUT_DIR` or `output`).
- `--jobs`: Worker processes for experiments and sweeps (default `FBDF_JOBS`).
- `--log-level`: Logging level (default `INFO`).

### Exit Codes:
- `0`: success; `1`: invalid arguments; `2`: Newton failure; `3`: overflow.
  `experiment` and `sweep` return 0 only when every cell completed (F-ABM
  blow-ups count as completed observations).

### Logging:
- The script logs task execution status, errors, and results into `main.log`
  in the log folder (`FBDF_LOG_DIR`, default `logs`) and to the console.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

# Set path to make sure import
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from mod.analysis import contractivity_index, dissipativity_index, layer_reference_norm, stability_ratios
from mod.experiments import (
    ExperimentName,
    ExperimentSpec,
    all_observed,
    parse_override,
    run_experiment,
    sweep,
    sweep_grid,
)
from mod.mlf import MlParams, ml
from mod.problems import build_problem, default_initial, subdiffusion_initial, subdiffusion_problem
from mod.solver import SolverConfig, StatusKind, solve
from mod.weights import decay_exponent, make_weights, verify_assumption_a
from utils.config import get_settings
from utils.csv_io import trajectory_frame, write_csv_table

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CODES = {
    StatusKind.COMPLETED: EXIT_OK,
    StatusKind.NEWTON_FAILURE: 2,
    StatusKind.OVERFLOW: 3,
}
SCHEMES = ["gl", "l1", "bdf2", "qia", "fabm"]
PROBLEMS = ["lorenz", "subdiffusion", "cubic", "coupled", "linear"]


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with code 1; code 2 is a Newton failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def setup_logging(log_dir, level="INFO"):
    os.makedirs(log_dir, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(os.path.join(log_dir, "main.log"), mode="a"),
            logging.StreamHandler(),
        ],
        force=True,
    )


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _add_problem_args(parser):
    parser.add_argument("--problem", choices=PROBLEMS, required=True, help="Benchmark problem")
    parser.add_argument("--c1", type=float, help="Lorenz c1")
    parser.add_argument("--c2", type=float, help="Lorenz c2")
    parser.add_argument("--c3", type=float, help="Lorenz c3")
    parser.add_argument("--nx", type=int, help="Sub-diffusion interior nodes in x")
    parser.add_argument("--ny", type=int, help="Sub-diffusion interior nodes in y")
    parser.add_argument("--k", type=float, help="Sub-diffusion coefficient")
    parser.add_argument("--lam", type=float, help="Linear problem rate")
    parser.add_argument("--dimension", type=int, help="Linear problem dimension")


def _problem_params(args):
    keys = {
        "lorenz": ("c1", "c2", "c3"),
        "subdiffusion": ("nx", "ny", "k"),
        "linear": ("lam", "dimension"),
    }.get(args.problem, ())
    return {key: getattr(args, key) for key in keys if getattr(args, key) is not None}


def _add_run_args(parser, schemes=SCHEMES):
    parser.add_argument("--scheme", choices=schemes, required=True, help="Time-stepping scheme")
    parser.add_argument("--alpha", type=float, required=True, help="Fractional order in (0, 1)")
    parser.add_argument("--h", type=float, required=True, help="Step size")
    parser.add_argument("--T", type=float, required=True, help="Final time")
    parser.add_argument("--csv", type=Path, help="Output CSV path")


def _initial(args, problem, text, which):
    if text is not None:
        return np.asarray(_floats(text))
    if args.problem == "subdiffusion":
        params = _problem_params(args)
        _, grid = subdiffusion_problem(params.get("nx", 31), params.get("ny", 31), params.get("k", 1.0))
        return subdiffusion_initial(grid, which)
    return default_initial(args.problem, problem.dimension)


def build_parser():
    settings = get_settings()
    parser = _Parser(description="Fractional BDF toolkit: solves, diagnostics and experiments")
    parser.add_argument("--out", type=Path, default=settings.out_dir, help="Output folder")
    parser.add_argument("--jobs", type=int, default=settings.jobs, help="Worker processes")
    parser.add_argument("--log-level", default="INFO", help="Logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="Write a weight table")
    p.add_argument("--scheme", choices=SCHEMES[:4], required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="Number of steps")
    p.add_argument("--csv", type=Path)

    p = sub.add_parser("mlf", help="Evaluate Mittag-Leffler functions")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--z", required=True, help="Comma-separated arguments")
    p.add_argument("--method", default="auto", choices=["auto", "series", "asymptotic", "integral"])

    p = sub.add_parser("volterra", help="Volterra decay demonstration")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--c1", type=float, default=1.0, help="Forcing amplitude")
    p.add_argument("--c2", type=float, default=0.2, help="Kernel amplitude, q_j = c2 (j+1)^-(1+alpha)")
    p.add_argument("--rho", type=float, help="Kernel mass; replaces --c2 when given")
    p.add_argument("--n", type=int, default=100_000)

    p = sub.add_parser("solve", help="Integrate one problem")
    _add_problem_args(p)
    _add_run_args(p)
    p.add_argument("--x0", help="Comma-separated initial state")
    p.add_argument("--initial", type=int, choices=[1, 2], default=1, help="Sub-diffusion profile")

    p = sub.add_parser("decay", help="Contractivity or dissipativity index")
    p.add_argument("--kind", choices=["p", "q"], required=True)
    _add_problem_args(p)
    _add_run_args(p, SCHEMES[:4])
    p.add_argument("--x0", help="Comma-separated initial state")
    p.add_argument("--y0", help="Second initial state (kind p)")
    p.add_argument("--normalize-at", type=float, default=1.0)
    p.add_argument("--layer-h", type=float, default=0.0, help="Fine step for |x(t_ref)| (kind q, 0 uses the run grid)")

    p = sub.add_parser("ratios", help="Stability ratios of a scheme")
    p.add_argument("--scheme", choices=SCHEMES[:4], required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--b", type=float, required=True)

    p = sub.add_parser("experiment", help="Reproduce a named experiment")
    p.add_argument("name", choices=[e.value for e in ExperimentName])
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="Override a parameter")

    p = sub.add_parser("sweep", help="Solve a (scheme, alpha, h) grid")
    _add_problem_args(p)
    p.add_argument("--schemes", required=True, help="Comma-separated schemes")
    p.add_argument("--alphas", required=True, help="Comma-separated orders")
    p.add_argument("--hs", required=True, help="Comma-separated step sizes")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--x0", help="Comma-separated initial state")
    p.add_argument("--csv", type=Path)
    return parser


def run_weights(args):
    table = make_weights(args.scheme, args.alpha, args.n)
    if table.kind.row_dependent:
        # mu[j] multiplies x_{n-j} in row n
        mu = table.lag_row(args.n)
        frame = pd.DataFrame({"j": np.arange(mu.size), "mu": mu})
    else:
        k = np.arange(args.n + 1)
        frame = pd.DataFrame({"k": k, "omega": table.conv[: args.n + 1], "delta": table.starting[: args.n + 1]})
    path = write_csv_table(frame, args.csv or args.out / f"weights_{args.scheme}_alpha{args.alpha:g}.csv")
    logging.info(f"✅ Saved weight table to {path}")
    report = verify_assumption_a(table)
    print(f"positive_leading={report.positive_leading.passed}")
    print(f"nonpositive_tail={report.nonpositive_tail.passed} first_violation={report.nonpositive_tail.first_violation}")
    print(f"nonnegative_partial_sums={report.nonnegative_partial_sums.passed}")
    if args.n >= 200 and not table.kind.row_dependent:
        window = (args.n // 10, args.n)
        print(f"decay_exponent={decay_exponent(table.conv, window):.6f}")
    return EXIT_OK


def run_mlf(args):
    params = MlParams(args.alpha, args.beta)
    converged = True
    for z in _floats(args.z):
        result = ml(params, z, args.method)
        converged &= result.converged
        print(f"z={z:.17g} value={result.value:.17g} error={result.error:.3g} method={result.method}")
    return EXIT_OK if converged else EXIT_USAGE


def run_volterra(args):
    overrides = {"alpha": args.alpha, "c1": args.c1, "c2": args.c2, "n": args.n}
    if args.rho is not None:
        overrides["rho"] = args.rho
    manifest = run_experiment(ExperimentSpec(ExperimentName.VOLTERRA_LEMMA_DEMO, overrides, args.out), args.jobs)
    for key in ("c2", "rho", "expected_limit", "limit_estimate", "limit_spread", "rate_chain_estimate"):
        print(f"{key}={manifest[key]:.17g}")
    return EXIT_OK


def run_solve(args):
    problem = build_problem(args.problem, **_problem_params(args))
    x0 = _initial(args, problem, args.x0, args.initial)
    config = SolverConfig.for_horizon(args.h, args.T)
    logging.info(f"🔁 Solving {args.problem} with {args.scheme}, alpha={args.alpha:g}, h={args.h:g}...")
    traj = solve(problem, args.scheme, args.alpha, config, x0)
    path = write_csv_table(
        trajectory_frame(traj),
        args.csv or args.out / f"{args.problem}_{args.scheme}_alpha{args.alpha:g}.csv",
    )
    logging.info(f"✅ Saved trajectory to {path} (status {traj.status})")
    return EXIT_CODES[traj.status.kind]


def run_decay(args):
    problem = build_problem(args.problem, **_problem_params(args))
    config = SolverConfig.for_horizon(args.h, args.T)
    x0 = _initial(args, problem, args.x0, 1)
    traj_x = solve(problem, args.scheme, args.alpha, config, x0)
    if not traj_x.completed:
        logging.error(f"❌ run from x0 stopped: {traj_x.status}")
        return EXIT_CODES[traj_x.status.kind]
    if args.kind == "p":
        traj_y = solve(problem, args.scheme, args.alpha, config, _initial(args, problem, args.y0, 2))
        if not traj_y.completed:
            logging.error(f"❌ run from y0 stopped: {traj_y.status}")
            return EXIT_CODES[traj_y.status.kind]
        report = contractivity_index(traj_x, traj_y, args.normalize_at)
    else:
        reference = None
        if args.layer_h > 0:
            reference = layer_reference_norm(problem, args.scheme, args.alpha, x0, args.normalize_at, args.layer_h)
        report = dissipativity_index(traj_x, args.normalize_at, reference)
    frame = pd.DataFrame({"t": report.times, "e": report.e, "index": report.index})
    path = write_csv_table(frame, args.csv or args.out / f"{args.problem}_{args.scheme}_{args.kind}_alpha{args.alpha:g}.csv")
    logging.info(f"✅ Saved decay report to {path}")
    return EXIT_OK


def run_ratios(args):
    ratios = stability_ratios(args.scheme, args.alpha, args.h, args.lam, args.b)
    for line in ratios.as_lines():
        print(line)
    return EXIT_OK


def run_named_experiment(args):
    overrides = dict(parse_override(item) for item in args.set)
    manifest = run_experiment(ExperimentSpec(args.name, overrides, args.out), args.jobs)
    return EXIT_OK if manifest["all_completed"] else EXIT_USAGE


def run_sweep(args):
    grid = sweep_grid(args.schemes.split(","), _floats(args.alphas), _floats(args.hs))
    x0 = _floats(args.x0) if args.x0 else None
    if x0 is None and args.problem == "subdiffusion":
        x0 = _initial(args, None, None, 1)
    summary = sweep(
        args.problem,
        grid,
        args.T,
        x0=x0,
        problem_params=_problem_params(args),
        jobs=args.jobs,
        out_path=args.csv or args.out / f"sweep_{args.problem}.csv",
    )
    return EXIT_OK if all_observed(summary) else EXIT_USAGE


HANDLERS = {
    "weights": run_weights,
    "mlf": run_mlf,
    "volterra": run_volterra,
    "solve": run_solve,
    "decay": run_decay,
    "ratios": run_ratios,
    "experiment": run_named_experiment,
    "sweep": run_sweep,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(get_settings().log_dir, args.log_level)
    try:
        return HANDLERS[args.command](args)
    except ValueError as e:
        logging.error(f"❌ {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
