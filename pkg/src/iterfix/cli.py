"""Command-line interface.

    iterfix check     problem.txt   # class membership of the right-hand side
    iterfix constants problem.txt   # contraction constants and hypotheses
    iterfix solve     problem.txt   # Picard iteration, CSV solutions, residuals
    iterfix reduce    problem.txt   # print the conjugated right-hand side

Every command writes ``report.json`` into ``--out``.  Exit codes: 0 success,
1 internal error, 2 contraction hypotheses fail, 3 bad input or class
membership failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .classes import check_F_class, check_G_class, classify_regime
from .conjugate import (
    ConjugationError, check_odd_integer_weights, reduce_G_to_F, reduce_negative_axis,
    reflect, reflect_interval,
)
from .constants import ConstantsError, compute_constants, normalize_weights
from .expr import BinOp, ExprError, PiecewiseExpr, Piece, num
from .gridfn import ClassParams, GridError, write_csv
from .problem import ProblemError, load_problem
from .report import new_report, write_report
from .solver import (
    ClassMembershipError, HypothesisError, ProblemSpec, SolveError, fixed_point_defect,
    residual_product, solve,
)

EXIT_OK, EXIT_INTERNAL, EXIT_HYPOTHESIS, EXIT_INPUT = 0, 1, 2, 3
AXES = ("positive", "negative", "real-line")


class InputError(ValueError):
    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason


@dataclass
class RunConfig:
    command: str
    problem_path: str
    output_dir: str = "."
    grid_size: int | None = None
    tol: float | None = None
    max_iters: int | None = None
    axis: str | None = None
    normalize: bool = False


@dataclass
class Prepared:
    """The problem moved to additive form on I, plus what is needed to go back."""

    axis: str
    lam: tuple[float, ...]
    lam_input: tuple[float, ...]
    scale: float
    F: PiecewiseExpr
    I: tuple[float, float]
    G_input: PiecewiseExpr | None
    G_pos: PiecewiseExpr | None
    J_input: tuple[float, float] | None
    J_pos: tuple[float, float] | None
    delta: float
    M: float
    Mstar: float
    grid: int
    tol: float
    max_iters: int


def _pow_pieces(e: PiecewiseExpr, exponent: float) -> PiecewiseExpr:
    return e.map_pieces(lambda p: Piece(p.interval, BinOp("^", p.body, num(exponent))))


def _scale_pieces(e: PiecewiseExpr, factor: float) -> PiecewiseExpr:
    return e.map_pieces(lambda p: Piece(p.interval, BinOp("*", num(factor), p.body)))


def prepare(cfg: RunConfig, problem) -> Prepared:
    opts = problem.options
    grid = cfg.grid_size if cfg.grid_size is not None else int(opts.get("grid", 1025))
    tol = cfg.tol if cfg.tol is not None else float(opts.get("tol", 1e-10))
    max_iters = cfg.max_iters if cfg.max_iters is not None else int(opts.get("max_iters", 200))
    normalize = cfg.normalize or str(opts.get("normalize", "no")).lower() in ("yes", "true", "1")

    default_axis = "positive" if problem.function_name == "G" else "real-line"
    axis = cfg.axis or opts.get("axis") or default_axis
    if axis not in AXES:
        raise InputError(f"unknown axis {axis!r}", "bad_axis")
    if (problem.function_name == "F") != (axis == "real-line"):
        raise InputError(f"axis {axis!r} does not fit a [function {problem.function_name}] section",
                         "axis_function_mismatch")

    lam_input = tuple(problem.lam)
    if axis == "negative":
        # checked before anything else is computed
        check_odd_integer_weights(lam_input)

    lam, scale = lam_input, 1.0
    if normalize and abs(math.fsum(lam) - 1.0) > 1e-12:
        lam, scale = normalize_weights(lam)

    G_input = G_pos = None
    J_input = J_pos = None
    if axis == "real-line":
        F = problem.function if scale == 1.0 else _scale_pieces(problem.function, 1.0 / scale)
        I = problem.interval
    else:
        G_input, J_input = problem.function, problem.interval
        if axis == "negative":
            if J_input[1] >= 0:
                raise InputError("J must lie in the negative half-line", "interval_not_negative")
            G_pos, J_pos = reduce_negative_axis(G_input, lam_input), reflect_interval(J_input)
        else:
            if J_input[0] <= 0:
                raise InputError("J must lie in the positive half-line", "interval_not_positive")
            G_pos, J_pos = G_input, J_input
        if scale != 1.0:
            G_pos = _pow_pieces(G_pos, 1.0 / scale)
        F = reduce_G_to_F(G_pos)
        I = (math.log(J_pos[0]), math.log(J_pos[1]))

    return Prepared(axis, tuple(lam), lam_input, scale, F, I, G_input, G_pos, J_input, J_pos,
                    problem.delta, problem.M, problem.Mstar, grid, tol, max_iters)


def _regimes(prep: Prepared) -> dict:
    rhs = ClassParams(prep.delta, prep.lam[0] * prep.M, prep.Mstar, prep.I)
    sol = ClassParams(prep.delta, prep.M, prep.Mstar, prep.I)
    return {"rhs_class": classify_regime(rhs).value, "solution_class": classify_regime(sol).value}


def _check_verdicts(prep: Prepared) -> dict:
    p = ClassParams(prep.delta, prep.lam[0] * prep.M, prep.Mstar, prep.I)
    out = {"F": check_F_class(prep.F, p).as_dict()}
    if prep.G_pos is not None:
        out["G"] = check_G_class(prep.G_pos, prep.J_pos, p.replace(interval=prep.J_pos)).as_dict()
    return out


def cmd_constants(prep: Prepared, report: dict, out: Path) -> tuple[int, str | None]:
    c = compute_constants(prep.lam, prep.delta, prep.M, prep.Mstar)
    report["constants"] = c.as_dict()
    report["verdicts"]["regimes"] = _regimes(prep)
    if c.hypotheses_hold:
        return EXIT_OK, None
    if c.trivial_weights:
        report["meta"]["note"] = "only lambda_1 is non-zero: the solution equals the right-hand side"
        return EXIT_OK, None
    return EXIT_HYPOTHESIS, c.failure_reason()


def cmd_check(prep: Prepared, report: dict, out: Path) -> tuple[int, str | None]:
    verdicts = _check_verdicts(prep)
    report["verdicts"].update(verdicts)
    report["verdicts"]["regimes"] = _regimes(prep)
    if all(v["member"] for v in verdicts.values()):
        return EXIT_OK, None
    return EXIT_INPUT, "not_in_class"


def cmd_reduce(prep: Prepared, report: dict, out: Path) -> tuple[int, str | None]:
    files = {}
    (out / "reduced_F.txt").write_text(prep.F.to_source() + "\n")
    files["reduced_F"] = "reduced_F.txt"
    report["meta"]["reduced"] = {"F": prep.F.to_source(), "I": list(prep.I)}
    if prep.axis == "negative":
        (out / "reduced_H.txt").write_text(prep.G_pos.to_source() + "\n")
        files["reduced_H"] = "reduced_H.txt"
        report["meta"]["reduced"]["H"] = prep.G_pos.to_source()
        report["meta"]["reduced"]["J_H"] = list(prep.J_pos)
    report["solution_files"] = files
    return EXIT_OK, None


def cmd_solve(prep: Prepared, report: dict, out: Path) -> tuple[int, str | None]:
    spec = ProblemSpec(
        lam=prep.lam, F=prep.F, interval=prep.I,
        params=ClassParams(prep.delta, prep.M, prep.Mstar, prep.I),
        grid_size=prep.grid, tol=prep.tol, max_iters=prep.max_iters,
        G=prep.G_pos, J=prep.J_pos,
    )
    report["constants"] = compute_constants(prep.lam, prep.delta, prep.M, prep.Mstar).as_dict()
    report["verdicts"]["regimes"] = _regimes(prep)
    try:
        res = solve(spec)
    except ClassMembershipError as exc:
        report["verdicts"]["F"] = exc.verdict.as_dict()
        raise
    report["verdicts"]["F"] = res.verdict.as_dict()
    report["convergence"] = {
        "converged": True,
        "iterations": res.iterations,
        "distances": res.distances,
        "ratios": res.ratios(),
        "apriori_bound": res.apriori_bound,
        "aposteriori_bound": res.aposteriori_bound,
        "tol": prep.tol,
        "grid": prep.grid,
        "trivial_weights": res.trivial_weights,
        "notes": res.notes,
    }
    residuals = {
        "residual_star": res.residual_star,
        "fixed_point_defect": fixed_point_defect(res.f, prep.F, prep.lam),
    }
    files = {"f": "solution_f.csv"}
    write_csv(res.f, out / "solution_f.csv")
    if res.g is not None:
        residuals["residual_product"] = res.residual_product
        files["g"] = "solution_g.csv"
        write_csv(res.g, out / "solution_g.csv")
        if prep.axis == "negative":
            g_neg = reflect(res.g)
            residuals["residual_product_negative"] = residual_product(
                g_neg, prep.G_input, prep.lam_input, prep.J_input)
            files["g_negative"] = "solution_g_negative.csv"
            write_csv(g_neg, out / "solution_g_negative.csv")
    report["residuals"] = residuals
    report["solution_files"] = files
    return EXIT_OK, None


COMMANDS = {"check": cmd_check, "constants": cmd_constants, "solve": cmd_solve, "reduce": cmd_reduce}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = new_report()
    meta = report["meta"]
    meta.update(command=cfg.command, problem=Path(cfg.problem_path).name, version=__version__)
    code, reason, message = EXIT_OK, None, ""
    try:
        if cfg.command not in COMMANDS:
            raise InputError(f"unknown command {cfg.command!r}", "bad_command")
        problem = load_problem(cfg.problem_path)
        prep = prepare(cfg, problem)
        meta.update(axis=prep.axis, lambda_input=list(prep.lam_input), lambda_used=list(prep.lam),
                    normalization_factor=prep.scale, interval_I=list(prep.I), grid=prep.grid,
                    tol=prep.tol, max_iters=prep.max_iters)
        code, reason = COMMANDS[cfg.command](prep, report, out)
    except HypothesisError as exc:
        report["constants"] = exc.constants.as_dict()
        code, reason, message = EXIT_HYPOTHESIS, exc.reason, str(exc)
    except ClassMembershipError as exc:
        code, reason, message = EXIT_INPUT, exc.reason, str(exc)
    except (ProblemError, InputError, ConstantsError, ConjugationError) as exc:
        code, reason, message = EXIT_INPUT, getattr(exc, "reason", "bad_input"), str(exc)
    except (ExprError, GridError) as exc:
        code, reason, message = EXIT_INPUT, "bad_input", str(exc)
    except FileNotFoundError as exc:
        code, reason, message = EXIT_INPUT, "problem_not_found", str(exc)
    except SolveError as exc:
        code, reason, message = EXIT_INTERNAL, exc.reason, str(exc)
    except Exception as exc:  # noqa: BLE001
        code, reason, message = EXIT_INTERNAL, "internal_error", "".join(
            traceback.format_exception_only(type(exc), exc)).strip()
    meta.update(exit_code=code, reason=reason, message=message or None,
                generated_at=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    write_report(report, out / "report.json")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iterfix", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("check", "check class membership of the right-hand side"),
        ("constants", "compute contraction constants and hypotheses"),
        ("solve", "solve the equation and write CSV solutions"),
        ("reduce", "write the right-hand side in additive form"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("problem", help="problem file")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--grid", type=int, default=None, help="grid nodes (default 1025)")
        p.add_argument("--tol", type=float, default=None, help="C1 stopping tolerance (default 1e-10)")
        p.add_argument("--max-iters", type=int, default=None, help="Picard iteration cap (default 200)")
        p.add_argument("--axis", choices=AXES, default=None,
                       help="half-line of the product equation, or real-line for an F problem")
        p.add_argument("--normalize", action="store_true",
                       help="divide the weights by their sum (and take the matching root of G)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.problem, args.out, args.grid, args.tol,
                    args.max_iters, args.axis, args.normalize)
    code = run(cfg)
    report_path = Path(cfg.output_dir) / "report.json"
    status = {0: "ok", 1: "internal error", 2: "hypotheses fail", 3: "input rejected"}[code]
    print(f"{cfg.command}: {status} (exit {code}); report: {report_path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
