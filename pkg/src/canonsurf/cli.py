"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
precondition error, 3 I/O or expression parse error.  Errors are also
written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

from canonsurf import __version__
from canonsurf.errors import (
    EmptyDomain,
    ExpressionError,
    InsufficientStencil,
    InvalidBasePoint,
    NoValidCell,
    NonPositiveNu,
    SingularDivisor,
    SurfaceFileError,
)
from canonsurf.expr import cauchy_riemann_residual, format_tree, parse, to_source
from canonsurf.export import csv_text, obj_text
from canonsurf.surface import (
    DEFAULT_GUARD,
    GridSpec,
    evaluate_fields,
    integrate_representation,
    read_surface,
    surface_to_json,
)
from canonsurf.verify import (
    TOLERANCE_CONSTANT,
    VerificationReport,
    natural_pde_residual,
    resolve_tolerances,
    verify_surface,
)
from canonsurf.weierstrass import SurfaceCase

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    case: SurfaceCase | None = None
    expr: str | None = None
    grid: GridSpec | None = None
    domain: tuple | None = None
    h: float = 1e-5
    probe: tuple[float, float] | None = None
    tolerance_overrides: dict = field(default_factory=dict)
    tolerance_constant: float = TOLERANCE_CONSTANT
    input_path: str | None = None
    output_path: str | None = None
    report_path: str | None = None
    format: str = "obj"


# --- argument parsing ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message, EXIT_USAGE)
        self.exit(EXIT_USAGE)


def parse_domain(text: str):
    """``"x0:x1:nx,y0:y1:ny"`` -> ``(x0, x1, nx, y0, y1, ny)``."""
    try:
        xpart, ypart = text.split(",")
        x0, x1, nx = xpart.split(":")
        y0, y1, ny = ypart.split(":")
        return float(x0), float(x1), int(nx), float(y0), float(y1), int(ny)
    except ValueError:
        raise UsageError(f"domain must look like 'x0:x1:nx,y0:y1:ny', got {text!r}") from None


def _floats(text: str, count: int, what: str):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != count:
        raise UsageError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return vals


def _tolerances(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects CHECK_ID=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"tolerance for {key!r} is not a number: {value!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="canonsurf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"canonsurf {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_case(sp):
        sp.add_argument("--case", required=True, choices=["timelike", "spacelike"])

    g = sub.add_parser("generate", help="integrate a surface and write a surface file")
    add_case(g)
    g.add_argument("--expr", required=True, help="generating function w(z)")
    g.add_argument("--domain", required=True, help="x0:x1:nx,y0:y1:ny")
    g.add_argument("--base", required=True, help="base node x,y")
    g.add_argument("--base-value", default="0,0,0", help="surface point at the base node")
    g.add_argument("--guard", type=float, default=DEFAULT_GUARD,
                   help="minimum |denominator| for a node to be valid")
    g.add_argument("--out", help="surface file (default: stdout)")

    v = sub.add_parser("verify", help="check the canonical identities on a surface file")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--report", help="report file (default: stdout)")
    v.add_argument("--tol", action="append", metavar="CHECK_ID=VALUE")
    v.add_argument("--tol-constant", type=float, default=TOLERANCE_CONSTANT,
                   help="C in the default tolerance C*h^2")

    d = sub.add_parser("pde-check", help="check the natural PDE for nu generated by w")
    add_case(d)
    d.add_argument("--expr", required=True)
    d.add_argument("--domain", required=True)
    d.add_argument("--guard", type=float, default=DEFAULT_GUARD)
    d.add_argument("--report")
    d.add_argument("--tol", type=float, help="tolerance (default C*h^2)")
    d.add_argument("--tol-constant", type=float, default=TOLERANCE_CONSTANT)

    e = sub.add_parser("export", help="convert a surface file to OBJ, CSV or JSON")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--format", choices=["obj", "csv", "json"], default="obj")
    e.add_argument("--out", help="output file (default: stdout)")

    q = sub.add_parser("parse", help="validate an expression and print its tree")
    q.add_argument("--expr", required=True)
    q.add_argument("--case", choices=["timelike", "spacelike"], default="timelike",
                   help="algebra used for --probe")
    q.add_argument("--probe", help="x,y point for a Cauchy-Riemann residual")
    q.add_argument("--h", type=float, default=1e-5, help="finite-difference step for --probe")
    return p


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if getattr(args, "case", None):
        cfg.case = SurfaceCase.parse(args.case)
    cfg.expr = getattr(args, "expr", None)
    cfg.input_path = getattr(args, "input", None)
    cfg.output_path = getattr(args, "out", None)
    cfg.report_path = getattr(args, "report", None)
    cfg.tolerance_constant = getattr(args, "tol_constant", TOLERANCE_CONSTANT)
    if args.command == "generate":
        x0, x1, nx, y0, y1, ny = parse_domain(args.domain)
        try:
            cfg.grid = GridSpec(x0, x1, y0, y1, nx, ny,
                                base_point=_floats(args.base, 2, "--base"),
                                base_value=_floats(args.base_value, 3, "--base-value"),
                                guard=args.guard)
        except InvalidBasePoint:
            raise
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif args.command == "pde-check":
        cfg.domain = parse_domain(args.domain)
        x0, x1, nx, y0, y1, ny = cfg.domain
        try:
            cfg.grid = GridSpec(x0, x1, y0, y1, nx, ny, base_point=(x0, y0), guard=args.guard)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.tol is not None:
            cfg.tolerance_overrides = {"natural_pde": args.tol}
    elif args.command == "verify":
        cfg.tolerance_overrides = _tolerances(args.tol)
    elif args.command == "export":
        cfg.format = args.format
    elif args.command == "parse":
        cfg.h = args.h
        if args.probe:
            cfg.probe = _floats(args.probe, 2, "--probe")
    return cfg


# --- commands ------------------------------------------------------------------------


def _write(path, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _summary(report: VerificationReport) -> str:
    lines = []
    for e in report.entries:
        status = "PASS" if e.passed else ("FAIL" if e.gating else "info")
        lines.append(f"{status:4}  {e.check_id:30} max={e.max_residual:.3e} "
                     f"tol={e.tolerance:.3e} nodes={e.nodes_checked}")
    lines.append("all checks passed" if report.passed else "some checks FAILED")
    return "\n".join(lines) + "\n"


def _cmd_generate(cfg: RunConfig) -> int:
    ast = parse(cfg.expr)
    grid = integrate_representation(ast, cfg.case, cfg.grid, expr_text=cfg.expr)
    _write(cfg.output_path, surface_to_json(grid))
    if cfg.output_path is not None:
        print(f"wrote {cfg.output_path}: {grid.valid_count}/{grid.valid.size} valid nodes")
    return EXIT_OK


def _cmd_verify(cfg: RunConfig) -> int:
    grid = read_surface(cfg.input_path)
    try:
        report = verify_surface(grid, cfg.tolerance_overrides, cfg.tolerance_constant)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    _write(cfg.report_path, report.to_json())
    if cfg.report_path is not None:
        sys.stdout.write(_summary(report))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_pde_check(cfg: RunConfig) -> int:
    ast = parse(cfg.expr)
    spec = cfg.grid
    fields = evaluate_fields(ast, cfg.case, spec)
    if not fields.valid.any():
        raise EmptyDomain("no grid node satisfies the representation's preconditions")
    h = max(spec.hx, spec.hy)
    tols = resolve_tolerances(h, cfg.tolerance_overrides, cfg.tolerance_constant)
    entry = natural_pde_residual(cfg.case, fields.nu, (spec.hx, spec.hy), tols["natural_pde"])
    report = VerificationReport([entry], {
        "tool_version": __version__, "expr": cfg.expr, "case": cfg.case.value,
        "domain": dict(zip(("x0", "x1", "nx", "y0", "y1", "ny"), cfg.domain)),
        "h": h, "tolerances": {"natural_pde": tols["natural_pde"]},
        "valid_nodes": int(fields.valid.sum()),
    })
    _write(cfg.report_path, report.to_json())
    if cfg.report_path is not None:
        sys.stdout.write(_summary(report))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_export(cfg: RunConfig) -> int:
    grid = read_surface(cfg.input_path)
    if cfg.format == "obj":
        text = obj_text(grid)
    elif cfg.format == "csv":
        text = csv_text(grid)
    else:
        text = surface_to_json(grid)
    _write(cfg.output_path, text)
    return EXIT_OK


def _cmd_parse(cfg: RunConfig) -> int:
    ast = parse(cfg.expr)
    print(format_tree(ast))
    print(f"canonical: {to_source(ast)}")
    if cfg.probe is not None:
        kind = (cfg.case or SurfaceCase.TIMELIKE_MINIMAL).algebra
        try:
            r = cauchy_riemann_residual(ast, kind, cfg.probe, cfg.h)
        except SingularDivisor as exc:
            raise UsageError(f"cannot probe at {cfg.probe}: {exc}") from None
        print(f"cauchy-riemann residual ({kind.value}) at {cfg.probe}, h={cfg.h:g}: {r:.3e}")
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "verify": _cmd_verify,
    "pde-check": _cmd_pde_check,
    "export": _cmd_export,
    "parse": _cmd_parse,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration; returns the process exit status."""
    try:
        return _COMMANDS[cfg.command](cfg)
    except ExpressionError as exc:
        return _emit_error("parse", exc.reason, EXIT_IO, offset=exc.offset, kind=exc.kind)
    except (SurfaceFileError, OSError) as exc:
        return _emit_error("io", str(exc), EXIT_IO)
    except (UsageError, InvalidBasePoint, EmptyDomain, NoValidCell, InsufficientStencil,
            NonPositiveNu) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_USAGE)


def _emit_error(error: str, message: str, code: int, **extra) -> int:
    payload = {"error": error, "message": message, "exit_code": code, **extra}
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


_NUMERIC_OPTIONS = ("--domain", "--base", "--base-value", "--probe")


def _glue_negative_values(argv):
    """Turn ``--domain -1:1:9,...`` into ``--domain=-1:1:9,...``.

    argparse would otherwise read a leading minus as the start of an option.
    """
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if tok in _NUMERIC_OPTIONS and len(nxt) > 1 and nxt[0] == "-" and nxt[1] in "0123456789.":
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_negative_values(argv))
    try:
        cfg = config_from_args(args)
    except (UsageError, InvalidBasePoint, ValueError) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_USAGE)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
