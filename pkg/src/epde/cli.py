"""Command-line front end.

    python -m epde solve --case II --alpha 0.8 --k 3 --M 30 --N 1000
    python -m epde converge --case I --alpha 0.2 --k 3 --N-list 40,80,160,320,640
    python -m epde mconverge --case II --alpha 0.8 --M-list 5,10,15,20,25,30
    python -m epde region --alpha 0.6 --k 3
    python -m epde ml --alpha 0.5 --z -1
    python -m epde grid-dump --alpha 0.5 --M 10

Options can also come from a ``key=value`` file passed with ``--config``;
flags on the command line win. Exit status: 0 on success, 2 for invalid
input, 1 for a numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from contextlib import contextmanager
from functools import partial

import numpy as np

from . import report
from .cases import CASES, make_case
from .core import Linear, Nonlinear, ProblemError, validate_problem
from .mittag_leffler import Z_MAX, MittagLefflerError, ml
from .quadrature import QuadratureError, gauss_jacobi_grid
from .stability import RegionSpec, StabilityError, region_scan
from .stepper import SolverError, exact_states, solve
from .studies import REFERENCES, ReferenceUnavailable, run_convergence, run_mconvergence, steps_from_dts

__all__ = ["main", "build_parser", "FORCINGS"]

EXIT_OK, EXIT_NUMERIC, EXIT_INVALID = 0, 1, 2


class ConfigError(ValueError):
    pass


# -- named right-hand sides -----------------------------------------------------


def _zero(alpha, lam, t):
    return 0.0


def _gamma(alpha, lam, t):
    return math.gamma(1.0 + alpha)


def _sin(alpha, lam, t):
    return math.sin(t)


def _case4(alpha, lam, t):
    return math.gamma(3.0 + alpha) * t * t / 2.0 + lam * t ** (6.0 + 3.0 * alpha)


FORCINGS = {"zero": _zero, "gamma": _gamma, "sin": _sin, "case4": _case4}


def _cubic(lam, forcing, t, phi):
    return -lam * phi**3 + forcing(t)


def _problem_from_args(args):
    if args.case is not None:
        if args.alpha is None:
            raise ProblemError([("alpha", "missing")])
        return make_case(args.case, args.alpha, horizon=args.T, lam=args.lam)
    issues = []
    if args.forcing not in FORCINGS:
        issues.append(("forcing", f"unknown id {args.forcing!r}; choose from {', '.join(FORCINGS)}"))
    lam = 0.0 if args.lam is None else args.lam
    raw = {"alpha": args.alpha, "phi0": args.phi0, "T": args.T, "name": "inline problem"}
    if not issues:
        forcing = partial(FORCINGS[args.forcing], args.alpha if args.alpha is not None else math.nan, lam)
        raw["rhs"] = Linear(lam, forcing) if args.rhs == "linear" else Nonlinear(partial(_cubic, lam, forcing))
    try:
        return validate_problem(raw)
    except ProblemError as exc:
        raise ProblemError(exc.issues + issues) from None


# -- parser -------------------------------------------------------------------------


def _int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_problem(p):
    g = p.add_argument_group("problem")
    g.add_argument("--case", choices=CASES, type=str.upper, help="built-in problem")
    g.add_argument("--alpha", type=float, help="fractional order in (0, 1)")
    g.add_argument("--lam", type=float, help="reaction coefficient lambda")
    g.add_argument("--phi0", type=float, default=None, help="initial value (inline problems)")
    g.add_argument("--T", type=float, default=1.0, help="horizon")
    g.add_argument("--forcing", default="zero", help=f"forcing id for inline problems: {', '.join(FORCINGS)}")
    g.add_argument("--rhs", choices=("linear", "cubic"), default="linear",
                   help="inline right-hand side: -lam phi + f, or -lam phi^3 + f")


def _add_scheme(p, startup_default):
    p.add_argument("--k", type=int, default=3, help="BDF order 1..5")
    p.add_argument("--M", type=int, default=30, help="highest collocation index")
    p.add_argument("--startup", choices=("cascade", "refined", "exact"), default=startup_default)
    p.add_argument("--refine", type=int, default=64, help="substeps for refined startup")


def _add_out(p):
    p.add_argument("--out", help="CSV path (default: standard output)")


def build_parser():
    parser = argparse.ArgumentParser(prog="epde", description="Caputo fractional ODE solver (extended-system BDF).")
    parser.add_argument("--config", help="key=value file; command-line flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem and write the trajectory")
    _add_problem(p)
    _add_scheme(p, "cascade")
    p.add_argument("--N", type=int, help="number of steps")
    p.add_argument("--dt", type=float, help="step size (alternative to --N)")
    p.add_argument("--picard-tol", type=float, default=1e-15)
    p.add_argument("--picard-max-iter", type=int, default=100)
    p.add_argument("--states-out", help="also write the collocation states to this CSV")
    _add_out(p)

    p = sub.add_parser("converge", help="temporal convergence table")
    _add_problem(p)
    _add_scheme(p, "exact")
    p.add_argument("--N-list", type=_int_list, help="increasing step counts")
    p.add_argument("--dt-list", type=_float_list, help="decreasing step sizes")
    p.add_argument("--reference", choices=REFERENCES, default="auto")
    p.add_argument("--self-reference", action="store_true", help="fine-step run of the same scheme as reference")
    p.add_argument("--norm", choices=("endpoint", "max"), default="endpoint")
    _add_out(p)

    p = sub.add_parser("mconverge", help="error versus M at fixed small dt")
    _add_problem(p)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--startup", choices=("cascade", "refined", "exact"), default="exact")
    p.add_argument("--M-list", type=_int_list, required=True)
    p.add_argument("--dt", type=float, help="step size (default 1e-4 T)")
    p.add_argument("--reference", choices=("auto", "exact", "self"), default="auto")
    p.add_argument("--self-reference", action="store_true")
    _add_out(p)

    p = sub.add_parser("region", help="spectral radius of the amplification operator over a sigma window")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--M", type=int, default=30)
    p.add_argument("--dt", type=float, help="step size (default T / N)")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--x-min", type=float, default=-15.0)
    p.add_argument("--x-max", type=float, default=5.0)
    p.add_argument("--y-min", type=float, default=-10.0)
    p.add_argument("--y-max", type=float, default=10.0)
    p.add_argument("--nx", type=int, default=301)
    p.add_argument("--ny", type=int, default=301)
    p.add_argument("--method", choices=("secular", "companion"), default="secular")
    _add_out(p)

    p = sub.add_parser("ml", help="Mittag-Leffler function E_alpha(z)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--z", type=float, required=True)

    p = sub.add_parser("grid-dump", help="Gauss-Jacobi collocation grid")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--M", type=int, required=True)
    _add_out(p)
    return parser


def read_config(path):
    """``key=value`` lines; ``#`` starts a comment; keys use - or _ freely."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {num}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _apply_config(subparser, config):
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in config.items():
        if key not in known or key in ("help", "config"):
            raise ConfigError(f"config: unknown key {key!r} for this command")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in _TRUE | _FALSE:
                raise ConfigError(f"config: {key} expects true/false, got {value!r}")
            defaults[key] = value.lower() in _TRUE
        else:
            defaults[key] = value
            # argparse type-converts string defaults itself, except for choices
            if action.type is str.upper:
                defaults[key] = value.upper()
    subparser.set_defaults(**defaults)
    for action in subparser._actions:
        if action.dest in defaults and action.required:
            action.required = False


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        config = read_config(known.config)
        command = next((a for a in argv if a in _subparsers(parser)), None)
        if command is not None:
            _apply_config(_subparsers(parser)[command], config)
    return parser.parse_args(argv)


def _subparsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


# -- commands -----------------------------------------------------------------------


@contextmanager
def _output(path):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _config_of(args):
    skip = {"out", "states_out", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _summary_stream(args):
    return sys.stdout if args.out else sys.stderr


def cmd_solve(args):
    problem = _problem_from_args(args)
    if (args.N is None) == (args.dt is None):
        raise ConfigError("N/dt: give exactly one of --N and --dt")
    N = args.N if args.N is not None else steps_from_dts([args.dt], problem.horizon)[0]
    grid = gauss_jacobi_grid(args.M, problem.alpha)
    states = exact_states(problem, grid) if args.startup == "exact" else None
    traj = solve(
        problem, args.M, args.k, N,
        startup_mode=args.startup, refine=args.refine, exact=states, grid=grid,
        picard_tol=args.picard_tol, picard_max_iter=args.picard_max_iter,
        store_states=bool(args.states_out),
    )
    prov = report.provenance_line("solve", _config_of(args))
    with _output(args.out) as fh:
        report.write_trajectory(fh, traj, prov)
    if args.states_out:
        with _output(args.states_out) as fh:
            report.write_states(fh, traj, prov)
    info = traj.info
    print(
        f"final phi={report.fmt(traj.final)} wall time={info['wall_time']:.3f}s "
        f"peak state size={info['peak_state_size']}",
        file=_summary_stream(args),
    )


def cmd_converge(args):
    problem = _problem_from_args(args)
    if (args.N_list is None) == (args.dt_list is None):
        raise ConfigError("N-list/dt-list: give exactly one of --N-list and --dt-list")
    Ns = args.N_list if args.N_list is not None else steps_from_dts(args.dt_list, problem.horizon)
    reference = "self" if args.self_reference else args.reference
    table = run_convergence(
        problem, args.k, args.M, Ns, startup=args.startup, reference=reference,
        norm=args.norm, refine=args.refine,
    )
    with _output(args.out) as fh:
        report.write_convergence(fh, table, report.provenance_line("converge", _config_of(args)))
    print(f"fitted slope={table.slope:.4f} reference={table.reference}", file=_summary_stream(args))


def cmd_mconverge(args):
    problem = _problem_from_args(args)
    reference = "self" if args.self_reference else args.reference
    table = run_mconvergence(problem, args.M_list, k=args.k, dt=args.dt, startup=args.startup, reference=reference)
    with _output(args.out) as fh:
        report.write_mconvergence(fh, table, report.provenance_line("mconverge", _config_of(args)))
    print(f"error ratio={table.ratio:.3e} reference={table.reference}", file=_summary_stream(args))


def cmd_region(args):
    dt = args.dt if args.dt is not None else args.T / args.N
    spec = RegionSpec(
        alpha=args.alpha, k=args.k, M=args.M, dt=dt,
        x_range=(args.x_min, args.x_max), y_range=(args.y_min, args.y_max),
        nx=args.nx, ny=args.ny,
    )
    field = region_scan(spec, method=args.method)
    with _output(args.out) as fh:
        report.write_region(fh, field, report.provenance_line("region", _config_of(args)))
    print(f"stable points={field.stable_count} of {field.rho.size}", file=_summary_stream(args))


def cmd_ml(args):
    if not 0.0 < args.alpha <= 1.0:
        raise ConfigError(f"alpha: must lie in (0, 1], got {args.alpha}")
    if not abs(args.z) <= Z_MAX:
        raise ConfigError(f"z: |z| must not exceed {Z_MAX:g}, got {args.z}")
    print(report.fmt(ml(args.alpha, args.z)))


def cmd_grid_dump(args):
    grid = gauss_jacobi_grid(args.M, args.alpha)
    with _output(args.out) as fh:
        report.write_grid(fh, grid, report.provenance_line("grid-dump", _config_of(args)))


COMMANDS = {
    "solve": cmd_solve,
    "converge": cmd_converge,
    "mconverge": cmd_mconverge,
    "region": cmd_region,
    "ml": cmd_ml,
    "grid-dump": cmd_grid_dump,
}

_NUMERIC = (SolverError, QuadratureError, StabilityError, MittagLefflerError, ArithmeticError, np.linalg.LinAlgError)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"epde: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # argparse: --help or a usage error
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except ProblemError as exc:
        for name, msg in exc.issues:
            print(f"epde: error: {name}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except _NUMERIC as exc:
        print(f"epde: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ReferenceUnavailable, ValueError, KeyError) as exc:
        print(f"epde: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
