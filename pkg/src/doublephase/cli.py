"""Command-line front end.

Exit codes: 0 ok, 1 failed invariant check, 2 usage/validation error,
3 non-convergence, 4 lambda at or below the spectrum threshold.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from .checks import run_checks
from .eigen import SolverOptions, principal_eigenpair
from .energy import DEFAULT_EPS, EnergyParams
from .errors import InfeasibleLambda, NonConvergence
from .mesh import build_mesh
from .nehari import solve_any
from .spectrum import scan_lambda, sweep_beta, threshold

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NONCONV, EXIT_INFEASIBLE = 0, 1, 2, 3, 4

log = logging.getLogger("doublephase")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("mesh and solver")
    g.add_argument("--dim", type=int, default=1, choices=(1, 2))
    g.add_argument("--n", type=_ints, required=True, help="interior nodes per axis, e.g. 31 or 15,15")
    g.add_argument("--extent", type=_floats, default=[1.0], help="domain length per axis")
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--max-iter", type=int, default=50000)
    g.add_argument("--eps-reg", type=float, default=DEFAULT_EPS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--restarts", type=int, default=1)
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--out", default="-", help="output path (default stdout)")
    g.add_argument("-v", "--verbose", action="store_true")

    def energy_flags(sp, need_lambda=True):
        sp.add_argument("--alpha", type=float, required=True)
        sp.add_argument("--beta", type=float, required=True)
        sp.add_argument("--p", type=float, required=True)
        sp.add_argument("--q", type=float, required=True)
        if need_lambda:
            sp.add_argument("--lambda", dest="lam", type=float, required=True)

    parser = argparse.ArgumentParser(
        prog="doublephase",
        description="Double-phase (p,q)-Laplacian Dirichlet eigenvalue solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eig1", parents=[common], help="principal eigenpair of the r-Laplacian")
    sp.add_argument("--r", "--q", dest="r", type=float, required=True)
    sp.add_argument("--dump", help="write the eigenfunction as CSV to this path")

    sp = sub.add_parser("solve", parents=[common], help="eigenfunction for a given lambda")
    energy_flags(sp)
    sp.add_argument("--dump", help="write the eigenfunction as CSV to this path")

    sp = sub.add_parser("scan", parents=[common], help="feasibility scan over a lambda grid")
    energy_flags(sp, need_lambda=False)
    sp.add_argument("--lambda-min", type=float, required=True)
    sp.add_argument("--lambda-max", type=float, required=True)
    sp.add_argument("--lambda-steps", type=int, required=True)

    sp = sub.add_parser("sweep-beta", parents=[common], help="endpoints for alpha = 1 - beta")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--betas", type=_floats, required=True)
    sp.add_argument("--K", type=int, default=0, help="linear eigenvalues listed at beta = 1")

    sp = sub.add_parser("check", parents=[common], help="run the invariant suite")
    energy_flags(sp, need_lambda=False)
    sp.add_argument("--lambda", dest="lam", type=float,
                    help="default: twice the threshold beta*lambda1(q)")
    return parser


def _mesh(args):
    if args.dim == 1 and len(args.n) != 1:
        raise UsageError("--n takes one value in 1D")
    try:
        return build_mesh(args.dim, args.n, args.extent)
    except ValueError as exc:
        raise UsageError(str(exc))


def _opts(args) -> SolverOptions:
    try:
        return SolverOptions(tol=args.tol, max_iter=args.max_iter, seed=args.seed,
                             restarts=args.restarts)
    except ValueError as exc:
        raise UsageError(str(exc))


def _params(args, lam) -> EnergyParams:
    try:
        return EnergyParams(args.alpha, args.beta, args.p, args.q, lam, args.eps_reg)
    except ValueError as exc:
        raise UsageError(str(exc))


def _mesh_label(mesh) -> str:
    return "x".join(str(k) for k in mesh.n)


def _csv(header, rows, comments=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    for line in comments:
        buf.write("# " + line + "\n")
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def function_csv(u) -> str:
    mesh = u.mesh
    x = mesh.coordinates()
    header = ["index", "x"] + (["y"] if mesh.dim == 2 else []) + ["value"]
    rows = [[i, *x[i], v] for i, v in enumerate(u.values)]
    return _csv(header, rows)


def cmd_eig1(args) -> int:
    mesh = _mesh(args)
    if not args.r > 1:
        raise UsageError("--r must exceed 1")
    code = EXIT_OK
    try:
        pair = principal_eigenpair(mesh, args.r, _opts(args), args.eps_reg)
    except NonConvergence as exc:
        pair, code = exc.result, EXIT_NONCONV
        log.error("%s", exc)
    report = {
        "r": args.r, "n": list(mesh.n), "dim": mesh.dim, "lam1": pair.lam1,
        "residual": pair.residual, "iters": pair.iterations, "converged": pair.converged,
    }
    if args.format == "json":
        report["u1"] = pair.u1.values.tolist()
        text = _json(report)
    else:
        text = _csv(["r", "n", "dim", "lam1", "residual", "iters"],
                    [[args.r, _mesh_label(mesh), mesh.dim, pair.lam1, pair.residual,
                      pair.iterations]])
    _emit(text, args.out)
    if args.dump:
        _emit(function_csv(pair.u1), args.dump)
    return code


def solve_report(res, params) -> dict:
    return {
        "branch": res.branch,
        "alpha": params.alpha, "beta": params.beta, "p": params.p, "q": params.q,
        "lambda": res.lam,
        "threshold": res.threshold,
        "m_lambda": res.m_lambda,
        "constraint_residual": res.constraint_residual,
        "weak_residual": res.weak_residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "sign_changes": res.sign_changes,
        "trace": [list(t) for t in res.trace],
        "u_hat": res.u_hat.values.tolist(),
    }


SOLVE_COLUMNS = ["branch", "lambda", "threshold", "m_lambda", "constraint_residual",
                 "weak_residual", "iterations", "converged", "sign_changes"]


def cmd_solve(args) -> int:
    mesh = _mesh(args)
    params = _params(args, args.lam)
    code = EXIT_OK
    try:
        res = solve_any(params, mesh, _opts(args))
    except InfeasibleLambda as exc:
        sys.stderr.write(
            f"lambda={params.lam:.10g} is not an eigenvalue: threshold "
            f"beta*lambda1(q) = {exc.threshold:.10g}\n"
        )
        return EXIT_INFEASIBLE
    except NonConvergence as exc:
        if exc.result is None or not hasattr(exc.result, "branch"):
            sys.stderr.write(f"{exc}\n")
            return EXIT_NONCONV
        res, code = exc.result, EXIT_NONCONV
        log.error("%s", exc)
    report = solve_report(res, params)
    if args.format == "json":
        text = _json(report)
    else:
        text = _csv(SOLVE_COLUMNS, [[report[c] for c in SOLVE_COLUMNS]])
    _emit(text, args.out)
    if args.dump:
        _emit(function_csv(res.u_hat), args.dump)
    return code


def cmd_scan(args) -> int:
    mesh = _mesh(args)
    if args.lambda_steps < 1 or not 0 < args.lambda_min <= args.lambda_max:
        raise UsageError("need 0 < --lambda-min <= --lambda-max and --lambda-steps >= 1")
    if args.lambda_steps > 1 and args.lambda_min == args.lambda_max:
        raise UsageError("--lambda-min equals --lambda-max but several steps requested")
    _params(args, args.lambda_min)
    grid = np.linspace(args.lambda_min, args.lambda_max, args.lambda_steps)
    try:
        scan = scan_lambda(args.alpha, args.beta, args.p, args.q, mesh, grid, _opts(args),
                           args.eps_reg)
    except NonConvergence as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_NONCONV
    rows = [[r.lam, r.feasible, r.m_lambda, r.weak_residual, r.error] for r in scan.rows]
    meta = {
        "threshold_estimate": scan.threshold_estimate,
        "threshold_predicted": scan.threshold_predicted,
        "lam1": scan.lam1,
        "monotone": scan.monotone,
        "threshold_outside_grid": scan.threshold_outside_grid,
    }
    if args.format == "json":
        text = _json({
            "alpha": args.alpha, "beta": args.beta, "p": args.p, "q": args.q,
            "n": list(mesh.n), "dim": mesh.dim, **meta,
            "anomalies": scan.anomalies,
            "rows": [dict(zip(["lambda", "feasible", "m_lambda", "weak_residual", "error"], r))
                     for r in rows],
        })
    else:
        text = _csv(["lambda", "feasible", "m_lambda", "weak_residual", "error"], rows,
                    [f"{k}={fmt(v)}" for k, v in meta.items()])
    _emit(text, args.out)
    failed = [r for r in scan.rows if r.error and r.error != "InfeasibleLambda"]
    return EXIT_NONCONV if len(failed) == len(scan.rows) else EXIT_OK


def cmd_sweep(args) -> int:
    mesh = _mesh(args)
    try:
        sweep = sweep_beta(args.p, args.q, mesh, args.betas, args.K, _opts(args), args.eps_reg)
    except ValueError as exc:
        raise UsageError(str(exc))
    except NonConvergence as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_NONCONV
    if args.format == "json":
        text = _json({
            "p": args.p, "q": args.q, "n": list(mesh.n), "dim": mesh.dim, "lam1": sweep.lam1,
            "entries": [{"beta": e.beta, "alpha": e.alpha, "endpoint": e.endpoint}
                        for e in sweep.entries],
            "linear_spectrum_at_one": sweep.linear_spectrum_at_one,
        })
    else:
        comments = []
        if sweep.linear_spectrum_at_one:
            comments.append("linear_spectrum_at_one (beta=1)")
            comments.append("k,lambda_k")
            comments += [f"{k},{fmt(v)}" for k, v in enumerate(sweep.linear_spectrum_at_one, 1)]
        text = _csv(["beta", "alpha", "endpoint"],
                    [[e.beta, e.alpha, e.endpoint] for e in sweep.entries], comments)
    _emit(text, args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    mesh = _mesh(args)
    opts = _opts(args)
    lam = args.lam
    if lam is None:
        _params(args, 1.0)
        lam = 2.0 * threshold(args.alpha, args.beta, args.p, args.q, mesh, opts, args.eps_reg)
    params = _params(args, lam)
    try:
        results = run_checks(params, mesh, opts)
    except InfeasibleLambda as exc:
        sys.stderr.write(f"infeasible lambda: threshold {exc.threshold:.10g}\n")
        return EXIT_INFEASIBLE
    except NonConvergence as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_NONCONV
    if args.format == "json":
        text = _json([{"check": r.name, "passed": r.passed, "value": r.value,
                       "tolerance": r.tolerance} for r in results])
    else:
        text = _csv(["check", "passed", "value", "tolerance"],
                    [[r.name, r.passed, r.value, r.tolerance] for r in results])
    _emit(text, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


COMMANDS = {
    "eig1": cmd_eig1,
    "solve": cmd_solve,
    "scan": cmd_scan,
    "sweep-beta": cmd_sweep,
    "check": cmd_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog} {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
