"""Command-line drivers.

Every command prints (or writes) a table as CSV or JSON with a provenance
header.  Exit status: 0 success, 2 an asserted inequality failed beyond its
tolerance, 1 usage or input error.

CSV schemas (in column order):

    ball         d, R, alpha, alpha_star, is_discrete, k, lambda1
    effective    shape, d, alpha, constraint, lambda_eff, error_estimate, converged, essential_bottom, T
    geometry     shape, d, quantity, value
    validate2d   shape, alpha, n_s, n_t, T, outer_bc, lambda, residual, iterations
    scan-thm1    shape, alpha, constraint, bound, validator, ball_ref, margin
    scan-thm2    shape, alpha, constraint, bound, validator, ball_ref, margin, inequality_margin
    asymptotics  d, R, alpha, lambda1, predictor, remainder_ratio
                 (with --r: alpha, r, R, predictor_disks, predictor_ball,
                 predictor_difference, exact_disk, exact_ball, exact_difference, reversed)

Scan margins are ``ball_ref - validator`` when a validator value is present
and ``ball_ref - bound`` otherwise.  The scan-thm1 validator is the
Richardson-extrapolated value of the Dirichlet ladder: the raw Dirichlet
value carries a one-signed discretisation error that would show up as a
spurious violation in the equality case (the disk itself).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import math
import os
import re
import shlex
import sys
from dataclasses import dataclass, field

from . import __version__, ball, effective1d, geometry, pde2d, shapes
from .errors import ExtRobinError, GeometryParseError

SIG = 12
THM1_TOL = 1e-4
THM2_TOL = 1e-6
INEQ_TOL = 1e-10
VALIDATE_TOL = 1e-3

SCAN_COLUMNS = ("shape", "alpha", "constraint", "bound", "validator", "ball_ref", "margin")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse with exit status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    params: dict
    output: str | None = None
    format: str = "csv"


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)
    failed: list = field(default_factory=list)   # messages for violated inequalities


# -- formatting -------------------------------------------------------------


def fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.{SIG}g}"
    if value is None:
        return ""
    return str(value)


def json_value(value):
    if isinstance(value, float):
        if math.isnan(value):
            return None
        return float(f"{value:.{SIG}g}")
    return value


def provenance(argv, seed):
    return {"command": "extrobin " + " ".join(shlex.quote(a) for a in argv),
            "seed": seed, "version": __version__}


def render(table: Table, fmt_name: str, prov: dict) -> str:
    if fmt_name == "json":
        rows = [{c: json_value(r.get(c)) for c in table.columns} for r in table.rows]
        return json.dumps({"provenance": prov, "columns": list(table.columns), "rows": rows}, indent=2) + "\n"
    out = io.StringIO()
    for key in ("command", "seed", "version"):
        out.write(f"# {key}: {prov[key]}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.columns)
    for r in table.rows:
        writer.writerow([fmt(r.get(c)) for c in table.columns])
    return out.getvalue()


PLOT_TEMPLATE = '''"""Plot {x} against {y} from {data}.  Generated file; needs matplotlib."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {data!r}
with open(path) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
groups = {{}}
for row in rows:
    if row[{y!r}] == "":
        continue
    groups.setdefault(row.get({group!r}, ""), []).append((float(row[{x!r}]), float(row[{y!r}])))
for label, pts in sorted(groups.items()):
    pts.sort()
    plt.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=label or None)
plt.xlabel({x!r})
plt.ylabel({y!r})
if len(groups) > 1:
    plt.legend()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''

PLOT_AXES = {
    "ball": ("alpha", "lambda1", "d"),
    "effective": ("alpha", "lambda_eff", "shape"),
    "geometry": ("quantity", "value", "shape"),
    "validate2d": ("n_t", "lambda", "outer_bc"),
    "scan-thm1": ("alpha", "margin", "shape"),
    "scan-thm2": ("alpha", "margin", "shape"),
    "asymptotics": ("alpha", "remainder_ratio", "d"),
}


def plot_script(command, data_path, table):
    x, y, group = PLOT_AXES[command]
    if x not in table.columns:
        x, y, group = "alpha", "predictor_difference", "r"
    return PLOT_TEMPLATE.format(x=x, y=y, group=group, data=data_path)


# -- helpers ------------------------------------------------------------------


def float_list(text):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def str_list(text):
    vals = [v.strip() for v in str(text).split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def thread_count():
    raw = os.environ.get("EXTROBIN_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"EXTROBIN_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def parallel_map(func, items):
    """Map in order; uses processes when EXTROBIN_THREADS > 1."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [func(it) for it in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


# -- commands -----------------------------------------------------------------


def cmd_ball(args, library):
    table = Table(("d", "R", "alpha", "alpha_star", "is_discrete", "k", "lambda1"))
    for a in args.alpha:
        sp = ball.solve(args.d, args.R, a)
        table.rows.append({"d": args.d, "R": args.R, "alpha": a, "alpha_star": sp.alpha_star,
                           "is_discrete": sp.is_discrete, "k": sp.k, "lambda1": sp.lambda1})
    return table


def _effective_cell(cell):
    spec, d, alpha, n, seed, library = cell
    shape = shapes.resolve_shape(spec, library, d=d, seed=seed)
    cfg = effective1d.TruncationConfig(n=n)
    if shapes.is_planar(shape):
        mc = shapes.as_multicurve(shape)
        w = effective1d.weight_from_multicurve(mc)
        constraint, dim = shapes.average_perimeter(shape), 2
    else:
        rep = geometry.axisym_curvatures(shape)
        w = effective1d.weight_from_steiner(geometry.steiner_polynomial(shape, rep))
        constraint, dim = rep.M_total, shape.d
    res = effective1d.min_rayleigh(w, alpha, cfg)
    return {"shape": spec, "d": dim, "alpha": alpha, "constraint": constraint,
            "lambda_eff": res.eigenvalue, "error_estimate": res.residual, "converged": res.converged,
            "essential_bottom": res.essential_bottom, "T": res.T_used}


def cmd_effective(args, library):
    table = Table(("shape", "d", "alpha", "constraint", "lambda_eff", "error_estimate", "converged",
                   "essential_bottom", "T"))
    cells = [(s, args.d, a, args.n, args.seed, library) for s in args.shapes for a in args.alphas]
    table.rows = parallel_map(_effective_cell, cells)
    return table


def cmd_geometry(args, library):
    table = Table(("shape", "d", "quantity", "value"))
    for spec in args.shapes:
        shape = shapes.resolve_shape(spec, library, d=args.d, seed=args.seed)
        rows = []
        if shapes.is_planar(shape):
            mc = shapes.as_multicurve(shape)
            dim = 2
            rows.append(("components", len(mc)))
            rows.append(("total_perimeter", mc.total_perimeter))
            rows.append(("average_perimeter", shapes.average_perimeter(shape)))
            for i, comp in enumerate(mc.components):
                m = geometry.curve_metrics(comp)
                rows += [(f"perimeter[{i}]", m.perimeter), (f"area[{i}]", m.enclosed_area),
                         (f"total_curvature[{i}]", m.total_curvature),
                         (f"min_curvature[{i}]", m.min_curvature), (f"max_curvature[{i}]", m.max_curvature)]
        else:
            dim = shape.d
            rep = geometry.axisym_curvatures(shape)
            ineq = geometry.check_curvature_inequalities(shape, rep)
            P = geometry.steiner_polynomial(shape, rep)
            rows += [("area", rep.area), ("M_total", rep.M_total), ("M_min", rep.M_min), ("M_max", rep.M_max),
                     ("equivalent_radius", geometry.equivalent_ball_radius(rep)),
                     ("gauss_kronecker_defect", ineq.gauss_kronecker_defect),
                     ("inequality_margin", ineq.min_margin)]
            rows += [(f"steiner_c{j}", c) for j, c in enumerate(P.coeffs)]
            if ineq.min_margin < -INEQ_TOL:
                table.failed.append(f"{spec}: curvature inequality margin {ineq.min_margin:.3e}")
        for q, v in rows:
            table.rows.append({"shape": spec, "d": dim, "quantity": q, "value": float(v) if not isinstance(v, int) else v})
    return table


def _ladder(args):
    return pde2d.LadderConfig(n_s=args.n_s, n_t=args.n_t, outer_bcs=tuple(args.outer_bcs))


def cmd_validate2d(args, library):
    table = Table(("shape", "alpha", "n_s", "n_t", "T", "outer_bc", "lambda", "residual", "iterations"))
    shape = shapes.resolve_shape(args.shape, library, seed=args.seed)
    if not isinstance(shape, geometry.Curve2D):
        raise UsageError("validate2d needs a single convex planar curve")
    if args.perimeter is not None:
        shape = shapes.normalize_perimeter(shape, args.perimeter)
    for a in args.alphas:
        res = pde2d.lambda1_exterior_2d(shape, a, _ladder(args))
        for row in res.refinement_table:
            table.rows.append({"shape": args.shape, "alpha": a, **row})
        bound = effective1d.bound_thm1(shapes.as_multicurve(shape), a)
        if res.lambda_dirichlet > bound + VALIDATE_TOL:
            table.failed.append(f"alpha={a}: estimate {res.lambda_dirichlet:.12g} above bound {bound:.12g}")
    return table


def _thm1_cell(cell):
    spec, c, alpha, n_s, n_t, validate, seed, library = cell
    shape = shapes.normalize_perimeter(shapes.resolve_shape(spec, library, seed=seed), c)
    mc = shapes.as_multicurve(shape)
    bound = effective1d.bound_thm1(mc, alpha)
    ball_ref = ball.solve(2, shapes.equal_perimeter_radius(c), alpha).lambda1
    validator = math.nan
    if validate and isinstance(shape, geometry.Curve2D):
        if geometry.curve_metrics(shape).min_curvature >= -geometry.CONVEXITY_TOL:
            res = pde2d.lambda1_exterior_2d(shape, alpha, pde2d.LadderConfig(n_s=n_s, n_t=n_t,
                                                                            outer_bcs=("dirichlet",)))
            validator = res.lambda_extrapolated
    margin = ball_ref - (bound if math.isnan(validator) else validator)
    return {"shape": spec, "alpha": alpha, "constraint": c, "bound": bound, "validator": validator,
            "ball_ref": ball_ref, "margin": margin}


def cmd_scan_thm1(args, library):
    table = Table(SCAN_COLUMNS)
    cells = [(s, args.perimeter, a, args.n_s, args.n_t, not args.no_validate, args.seed, library)
             for s in args.shapes for a in args.alphas]
    table.rows = parallel_map(_thm1_cell, cells)
    for r in table.rows:
        if r["margin"] < -THM1_TOL:
            table.failed.append(f"{r['shape']} alpha={r['alpha']}: margin {r['margin']:.3e}")
    return table


def _thm2_cell(cell):
    spec, d, target, alpha, n, seed, library = cell
    body = shapes.resolve_shape(spec, library, d=d, seed=seed)
    if shapes.is_planar(body):
        raise UsageError(f"scan-thm2 needs bodies, got planar shape {spec!r}")
    body = shapes.normalize_mean_curvature(body, target)
    rep = effective1d.theorem2_chain(body, alpha, effective1d.TruncationConfig(n=n))
    ineq = geometry.check_curvature_inequalities(body)
    return {"shape": spec, "alpha": alpha, "constraint": rep.M_total, "bound": rep.steiner_value,
            "validator": math.nan, "ball_ref": rep.ball_value, "margin": rep.margin,
            "inequality_margin": ineq.min_margin}


def cmd_scan_thm2(args, library):
    table = Table(SCAN_COLUMNS + ("inequality_margin",))
    cells = [(s, args.d, args.M_total, a, args.n, args.seed, library) for s in args.shapes for a in args.alphas]
    table.rows = parallel_map(_thm2_cell, cells)
    for r in table.rows:
        if r["margin"] < -THM2_TOL:
            table.failed.append(f"{r['shape']} alpha={r['alpha']}: margin {r['margin']:.3e}")
        if r["inequality_margin"] < -INEQ_TOL:
            table.failed.append(f"{r['shape']}: curvature inequality margin {r['inequality_margin']:.3e}")
    return table


def emit_sharpness_example(r: float, R: float, alpha_grid) -> Table:
    """Two-term predictors for far-apart disks of radius ``r`` against the disk of radius ``R``.

    Separated disks behave like a single disk of radius ``r`` while the
    average-perimeter constraint ties them to a disk of radius ``R``; for
    ``r < R`` the predicted difference ``-alpha (1/r - 1/R)`` is positive and
    grows with ``|alpha|``, so the comparison with the larger disk reverses.
    ``reversed`` marks rows where both the predictor and the exact single-disk
    values have the reversed sign.
    """
    if not (r > 0 and R > 0):
        raise ExtRobinError("radii must be positive")
    if R < r:
        raise ball.DomainError(f"need R >= r, got r={r}, R={R}")
    table = Table(("alpha", "r", "R", "predictor_disks", "predictor_ball", "predictor_difference",
                   "exact_disk", "exact_ball", "exact_difference", "reversed"))
    for a in sorted(alpha_grid, reverse=True):
        pd = ball.asym_lambda(2, 1.0 / r, a)
        pb = ball.asym_lambda(2, 1.0 / R, a)
        ed = ball.solve(2, r, a).lambda1
        eb = ball.solve(2, R, a).lambda1
        table.rows.append({"alpha": a, "r": r, "R": R, "predictor_disks": pd, "predictor_ball": pb,
                           "predictor_difference": pd - pb, "exact_disk": ed, "exact_ball": eb,
                           "exact_difference": ed - eb, "reversed": bool(pd - pb > 0 and ed - eb > 0)})
    return table


def cmd_asymptotics(args, library):
    if args.r is not None:
        return emit_sharpness_example(args.r, args.R, args.alpha_grid)
    table = Table(("d", "R", "alpha", "lambda1", "predictor", "remainder_ratio"))
    for a in sorted(args.alpha_grid, reverse=True):
        lam = ball.solve(args.d, args.R, a).lambda1
        pred = ball.asym_lambda(args.d, 1.0 / args.R, a)
        table.rows.append({"d": args.d, "R": args.R, "alpha": a, "lambda1": lam, "predictor": pred,
                           "remainder_ratio": abs(lam - pred) / abs(a)})
    return table


COMMANDS = {
    "ball": cmd_ball,
    "effective": cmd_effective,
    "geometry": cmd_geometry,
    "validate2d": cmd_validate2d,
    "scan-thm1": cmd_scan_thm1,
    "scan-thm2": cmd_scan_thm2,
    "asymptotics": cmd_asymptotics,
}


# -- parser -------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="geometry/config file; its [run] section sets option defaults")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--plot", help="also write a plotting script for the output data")
    common.add_argument("--seed", type=int, default=0, help="seed for randomly perturbed shapes")

    p = ArgumentParser(prog="extrobin", description="Exterior Robin eigenvalue experiments.")
    p.add_argument("--version", action="version", version=f"extrobin {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=ArgumentParser)
    sub.required = True

    s = sub.add_parser("ball", parents=[common], help="exact eigenvalue outside a ball")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--R", type=float, default=1.0)
    s.add_argument("--alpha", type=float_list, required=True, help="coupling(s), comma separated")

    s = sub.add_parser("effective", parents=[common], help="reduced half-line problem for a shape")
    s.add_argument("--shapes", type=str_list, required=True)
    s.add_argument("--alphas", type=float_list, required=True)
    s.add_argument("--d", type=int, default=3, help="dimension for bodies")
    s.add_argument("--n", type=int, default=400, help="mesh cells")

    s = sub.add_parser("geometry", parents=[common], help="curvature report for shapes")
    s.add_argument("--shapes", type=str_list, required=True)
    s.add_argument("--d", type=int, default=3)

    s = sub.add_parser("validate2d", parents=[common], help="2D finite-element validator ladder")
    s.add_argument("--shape", required=True)
    s.add_argument("--alphas", type=float_list, required=True)
    s.add_argument("--perimeter", type=float, default=None, help="rescale to this perimeter first")
    s.add_argument("--n-s", dest="n_s", type=int, default=256)
    s.add_argument("--n-t", dest="n_t", type=int, default=400)
    s.add_argument("--outer-bcs", dest="outer_bcs", type=str_list, default=["dirichlet", "neumann"])

    s = sub.add_parser("scan-thm1", parents=[common], help="planar scan at fixed average perimeter")
    s.add_argument("--perimeter", type=float, default=2 * math.pi)
    s.add_argument("--alphas", type=float_list, required=True)
    s.add_argument("--shapes", type=str_list, required=True)
    s.add_argument("--n-s", dest="n_s", type=int, default=128)
    s.add_argument("--n-t", dest="n_t", type=int, default=300)
    s.add_argument("--no-validate", dest="no_validate", action="store_true",
                   help="skip the 2D finite-element validator")

    s = sub.add_parser("scan-thm2", parents=[common], help="body scan at fixed mean-curvature average")
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--M-total", dest="M_total", type=float, default=1.0)
    s.add_argument("--alphas", type=float_list, required=True)
    s.add_argument("--shapes", type=str_list, required=True)
    s.add_argument("--n", type=int, default=400)

    s = sub.add_parser("asymptotics", parents=[common], help="strong-coupling remainder table")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--R", type=float, default=1.0)
    s.add_argument("--alpha-grid", dest="alpha_grid", type=float_list, required=True)
    s.add_argument("--r", type=float, default=None, help="disk radius for the sharpness table")
    return p


def _apply_config(parser, argv):
    """Load --config (if any) and install its [run] values as subcommand defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("--seed", type=int, default=0)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return None
    library = shapes.read_geometry_file(known.config, seed=known.seed)
    command = next((a for a in argv if a in COMMANDS), None)
    if command and library.run:
        subparser = parser._subparsers._group_actions[0].choices[command]
        dests = {a.dest for a in subparser._actions}
        values = {}
        for key, value in library.run.items():
            dest = key.replace("-", "_")
            if dest not in dests:
                raise GeometryParseError(f"[run] key {key!r} is not an option of {command!r}")
            values[dest] = value
        for action in subparser._actions:
            if action.dest in values:
                action.required = False
        subparser.set_defaults(**values)
    return library


def run(config: RunConfig, argv=None, library=None, seed=0, plot=None) -> int:
    """Execute one command described by ``config``; returns the exit status."""
    if config.command not in COMMANDS:
        raise UsageError(f"unknown command {config.command!r}")
    args = argparse.Namespace(**config.params, seed=seed)
    table = COMMANDS[config.command](args, library)
    text = render(table, config.format, provenance(argv or [config.command], seed))
    if config.output:
        with open(config.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if plot:
            with open(plot, "w", encoding="utf-8") as fh:
                fh.write(plot_script(config.command, config.output, table))
    else:
        sys.stdout.write(text)
    for msg in table.failed:
        print(f"violation: {msg}", file=sys.stderr)
    return 2 if table.failed else 0


NEGATIVE = re.compile(r"^-\.?\d")


def _join_negative_values(argv):
    """``--alphas -1,-2`` -> ``--alphas=-1,-2`` so argparse does not read a flag."""
    out = []
    for tok in argv:
        if NEGATIVE.match(tok) and out and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = _join_negative_values(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        library = _apply_config(parser, argv)
    except (GeometryParseError, OSError) as exc:
        print(f"extrobin: error: {exc}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    params = {k: v for k, v in vars(args).items()
              if k not in ("command", "format", "output", "plot", "seed", "config")}
    if args.plot and not args.output:
        print("extrobin: error: --plot needs --output", file=sys.stderr)
        return 1
    if args.plot and args.format != "csv":
        print("extrobin: error: --plot needs --format csv", file=sys.stderr)
        return 1
    cfg = RunConfig(args.command, params, args.output, args.format)
    try:
        return run(cfg, argv, library, args.seed, args.plot)
    except (UsageError, GeometryParseError, ExtRobinError, ValueError) as exc:
        print(f"extrobin: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
