"""Command-line interface: ``dirac-workbench analyze|simulate|spectrum|operators``.

Machine output (JSON or CSV) goes to ``--out`` (``-`` for stdout, the
default); diagnostics go to stderr. Exit codes:

====  ==========================================================
0     success
1     unreadable input: JSON/schema/expression errors, off-surface
      sample points, invalid command-line values
2     unsupported singular structure
3     inconsistent constraint chain
4     first-class constraints present (no Dirac bracket table)
5     integrator error (including an off-surface initial state)
6     eigensolver failure
====  ==========================================================
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager

from .brackets import BracketError
from .dirac import ChainLimitError, FirstClassError, InconsistentChainError, UnsupportedSingularStructure
from .dynamics import IntegrationError, OffSurfaceState
from .eigen import EigenSolverError
from .estimators import METHODS, ConstrainedIntegrator, DiracAnalyzer
from .expr import ExprError
from .model import ModelError, load_model
from .quantum import (
    RingParams,
    algebra_residuals,
    analytic_spectrum,
    fourier_spectrum,
    grid_spectrum,
    nonhermitian_ordering_demo,
)
from .report import analysis_report, dumps

EXIT_INPUT = 1
EXIT_UNSUPPORTED = 2
EXIT_INCONSISTENT = 3
EXIT_FIRST_CLASS = 4
EXIT_INTEGRATOR = 5
EXIT_EIGEN = 6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse would exit with 2, which is reserved for unsupported structures
        raise UsageError(message)


@contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _finite(text):
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"{text!r} is not a finite number")
    return value


def cmd_analyze(args):
    analyzer = DiracAnalyzer(max_generations=args.max_generations).fit(load_model(args.model))
    report = analysis_report(analyzer.model_, analyzer.structure_)
    with _open_out(args.out) as fh:
        fh.write(dumps(report))
    return 0


def _initial_state(args, model):
    if args.initial is not None:
        return [float(v) for v in args.initial.split(",")]
    if "initial_state" in model.defaults:
        return model.defaults["initial_state"]
    raise UsageError("no initial state: pass --initial or set defaults.initial_state in the model")


def cmd_simulate(args):
    model = load_model(args.model)
    h = args.h if args.h is not None else model.defaults.get("h", 1e-3)
    steps = args.steps if args.steps is not None else model.defaults.get("steps", 1000)
    if not math.isfinite(h) or h <= 0:
        raise UsageError("--h must be finite and positive")
    if steps < 0:
        raise UsageError("--steps must be >= 0")
    integrator = ConstrainedIntegrator(method=args.method, h=h, steps=steps).fit(model)
    trajectory = integrator.predict(_initial_state(args, model))
    with _open_out(args.out) as fh:
        trajectory.to_csv(fh)
    return 0


def _ring_params(args):
    try:
        return RingParams(r0=args.r0, m=args.m, hbar=args.hbar, alpha=args.alpha, beta=args.beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_spectrum(args):
    p = _ring_params(args)
    if args.levels < 1:
        raise UsageError("--levels must be >= 1")
    if args.method == "analytic":
        result = analytic_spectrum(p, args.levels, include_e0=not args.no_e0)
    elif args.method == "grid":
        if args.gridN < 16:
            raise UsageError("--gridN must be >= 16")
        if args.levels > args.gridN:
            raise UsageError("--levels exceeds --gridN")
        result = grid_spectrum(p, args.gridN, args.levels, include_e0=not args.no_e0)
    else:
        if args.N < 2:
            raise UsageError("--N must be >= 2")
        if args.no_e0:
            raise UsageError("--no-e0 is not available for the fourier method")
        if args.levels > 2 * args.N + 1:
            raise UsageError("--levels exceeds the basis dimension 2N+1")
        result = fourier_spectrum(p, args.N, args.levels)
    with _open_out(args.out) as fh:
        fh.write(dumps(result.to_json()))
    return 0


def cmd_operators(args):
    p = _ring_params(args)
    if args.N < 4:
        raise UsageError("--N must be >= 4")
    report = {"residuals": algebra_residuals(p, args.N), "ordering": nonhermitian_ordering_demo(p, args.N)}
    with _open_out(args.out) as fh:
        fh.write(dumps(report))
    return 0


def _add_ring_flags(sub):
    sub.add_argument("--alpha", type=_finite, default=0.0, help="flux parameter")
    sub.add_argument("--beta", type=_finite, default=0.0, help="boundary parameter, taken mod 1")
    sub.add_argument("--r0", type=_finite, default=1.0)
    sub.add_argument("--m", type=_finite, default=1.0)
    sub.add_argument("--hbar", type=_finite, default=1.0)


def build_parser():
    parser = _Parser(prog="dirac-workbench", description="Dirac constraint analysis, constrained dynamics and the quantum ring.")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = subs.add_parser("analyze", help="constraint chain, M, G, Dirac brackets as JSON")
    a.add_argument("model", help="model file, or a bundled model name such as circle.json")
    a.add_argument("--max-generations", type=int, default=10)
    a.add_argument("--out", default="-")
    a.set_defaults(func=cmd_analyze)

    s = subs.add_parser("simulate", help="integrate a trajectory and write CSV")
    s.add_argument("model")
    s.add_argument("--h", type=_finite, default=None)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--method", choices=METHODS, default="dirac-rk4")
    s.add_argument("--initial", default=None, help="comma-separated state in x,y,...,px,py,... order")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_simulate)

    q = subs.add_parser("spectrum", help="energy levels of the quantum ring as JSON")
    _add_ring_flags(q)
    q.add_argument("--levels", type=int, default=5)
    q.add_argument("--method", choices=("analytic", "grid", "fourier"), default="analytic")
    q.add_argument("--gridN", type=int, default=128)
    q.add_argument("--N", type=int, default=16, help="Fourier truncation for --method fourier")
    q.add_argument("--no-e0", action="store_true", help="drop the constant hbar^2/(8 m r0^2)")
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_spectrum)

    o = subs.add_parser("operators", help="operator-algebra residuals and ordering report as JSON")
    _add_ring_flags(o)
    o.add_argument("--N", type=int, default=16)
    o.add_argument("--out", default="-")
    o.set_defaults(func=cmd_operators)
    return parser


def _fail(code, message):
    print(f"dirac-workbench: error: {message}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_INPUT, str(exc))
    except UnsupportedSingularStructure as exc:
        return _fail(EXIT_UNSUPPORTED, f"unsupported singular structure: {exc}")
    except (InconsistentChainError, ChainLimitError) as exc:
        return _fail(EXIT_INCONSISTENT, f"inconsistent constraint chain: {exc}")
    except FirstClassError as exc:
        return _fail(EXIT_FIRST_CLASS, f"first-class constraints present: {exc}")
    except (IntegrationError, OffSurfaceState) as exc:
        return _fail(EXIT_INTEGRATOR, f"integration failed: {exc}")
    except EigenSolverError as exc:
        return _fail(EXIT_EIGEN, f"eigensolver failed: {exc}")
    except (ModelError, ExprError, BracketError, json.JSONDecodeError, FileNotFoundError, ValueError) as exc:
        return _fail(EXIT_INPUT, str(exc))


if __name__ == "__main__":
    sys.exit(main())
