"""Command-line front end.

Subcommands:

    rmatrix       braid-matrix bundle for one dimension plus its checks
    presentation  one presentation serialized to JSON
    nf            normal-order an expression
    phi           image of an expression under a decoupling homomorphism
    zeta          one matrix entry of a decoupling map
    verify        run identity suites and report

Every subcommand accepts --out FILE (write instead of printing),
--format json|text, and --degree-cap (bound on intermediate word
degree where normal forms are computed).  Exit codes: 0 success, 1 a
check failed or a requested configuration does not exist over the
scalar field, 2 usage or parse error.  QEUCLID_WORKERS caps the
verification worker pool.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .decoupling import GammaConfig, GluingError, PhiMap, ZetaMap, gamma_default, solve_gluing
from .grammar import ParseError
from .ncengine import DEFAULT_DEGREE_CAP, DegreeCapExceeded
from .presentations import get_presentation, presentation_to_json
from .verification import SUITES, Report, UsageError, verify

_ALGEBRAS = ("euclidean", "frt", "cross", "extended")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qeuclid",
        description="exact constructions and identity checks for the "
        "q-deformed Euclidean algebra and its decoupling maps",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="FILE", help="write the output to FILE")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument(
        "--degree-cap",
        type=int,
        default=DEFAULT_DEGREE_CAP,
        metavar="D",
        help="bound on intermediate word degree (default %(default)s)",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("rmatrix", parents=[common], help="build and check one braid-matrix bundle")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--check", choices=("ybe", "projectors", "metric", "all"), default="all")
    p.add_argument("--mode", choices=("exact", "eval"), default="exact")
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("presentation", parents=[common], help="serialize one presentation")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--algebra", choices=_ALGEBRAS, required=True)

    p = sub.add_parser("nf", parents=[common], help="normal-order an expression")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--algebra", choices=_ALGEBRAS, required=True)
    p.add_argument("--expr", required=True)

    p = sub.add_parser("phi", parents=[common], help="decoupling homomorphism image")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--which", choices=("plus", "minus", "glued"), required=True)
    p.add_argument("--gen", required=True, metavar="EXPR")
    p.add_argument("--gamma", metavar="FILE", help="scaling constants as a JSON map")

    p = sub.add_parser("zeta", parents=[common], help="decoupling map entry")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--which", choices=("plus", "minus"), required=True)
    p.add_argument("--gen", required=True, metavar="LETTER")
    p.add_argument("--gamma", metavar="FILE", help="scaling constants as a JSON map")

    p = sub.add_parser("verify", parents=[common], help="run identity suites")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--suite", choices=SUITES + ("all",), required=True)
    p.add_argument("--mode", choices=("exact", "eval"), default="exact")
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", metavar="FILE", help="scaling constants as a JSON map")
    return parser


def _emit(args, text: str, obj) -> None:
    if args.format == "json":
        payload = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    else:
        payload = text if text.endswith("\n") else text + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _gamma_json(path: Optional[str]) -> Optional[dict]:
    if path is None:
        return None
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise UsageError("gamma file must hold a JSON object")
    return data


def _gamma_config(path: Optional[str], N: int, field) -> GammaConfig:
    data = _gamma_json(path)
    if data is None:
        return gamma_default(N, field)
    return GammaConfig.from_json(data, field)


_CHECK_GROUPS = {
    "ybe": ("ybe",),
    "projectors": (
        "char-min-poly",
        "proj-anti-idem",
        "proj-anti-trace",
        "proj-complete",
        "proj-inverse-spectral",
        "proj-spectral",
        "proj-sym-anti",
        "proj-sym-idem",
        "proj-sym-trace",
        "proj-trace-idem",
        "trace-anti",
        "trace-sym",
        "trace-trace",
    ),
    "metric": ("metric-covariance-col", "metric-covariance-row", "metric-inverse"),
}


def _cmd_rmatrix(args) -> int:
    report = verify("rmatrix", args.dim, args.mode, samples=args.samples, seed=args.seed)
    if args.check != "all":
        keep = set(_CHECK_GROUPS[args.check])
        checks = [c for c in report.checks if c.id in keep]
        summary = {
            "pass": sum(c.status == "pass" for c in checks),
            "fail": sum(c.status == "fail" for c in checks),
            "total": len(checks),
        }
        report = Report(report.suite, report.N, report.mode, checks, summary)
    rd = get_presentation("euclidean", args.dim).rdata
    bundle = {
        "N": rd.N,
        "labels": list(rd.labels),
        "rho": {str(i): str(rd.rho[i]) for i in rd.labels},
        "trace_norm": rd.field.to_str(rd.trace_norm),
        "g": rd.g.to_json(),
        "rhat": rd.rhat.to_json(),
        "rhat_inv": rd.rhat_inv.to_json(),
        "projectors": {
            "sym": rd.proj_sym.to_json(),
            "anti": rd.proj_anti.to_json(),
            "trace": rd.proj_trace.to_json(),
        },
    }
    _emit(args, "\n".join(report.lines()), {"bundle": bundle, "report": report.to_json()})
    return 0 if report.ok else 1


def _cmd_presentation(args) -> int:
    pres = get_presentation(args.algebra, args.dim)
    obj = presentation_to_json(pres)
    lines = [
        f"presentation {pres.name} N={pres.N}",
        f"  generators: {len(obj['generators'])}",
        f"  pair rules: {len(obj['pair_rules'])}",
        f"  power rules: {len(obj['power_rules'])}",
    ]
    _emit(args, "\n".join(lines), obj)
    return 0


def _cmd_nf(args) -> int:
    pres = get_presentation(args.algebra, args.dim)
    poly = pres.parse(args.expr)
    out = pres.nf(poly, degree_cap=args.degree_cap)
    shown = pres.show(out)
    _emit(
        args,
        shown,
        {"dim": args.dim, "algebra": args.algebra, "expr": args.expr, "normal_form": shown},
    )
    return 0


def _cmd_phi(args) -> int:
    pres = get_presentation("extended", args.dim)
    if args.which == "glued":
        if args.gamma is not None:
            raise UsageError("--gamma cannot override the glued configuration")
        cfg = solve_gluing(args.dim)
        family = None
    else:
        cfg = _gamma_config(args.gamma, args.dim, pres.field)
        family = "-" if args.which == "minus" else "+"
    phi = PhiMap(pres, cfg, family)
    poly = pres.parse(args.gen)
    shown = pres.show(pres.nf(phi.apply(poly), degree_cap=args.degree_cap))
    _emit(args, shown, {"dim": args.dim, "which": args.which, "gen": args.gen, "image": shown})
    return 0


def _cmd_zeta(args) -> int:
    pres = get_presentation("extended", args.dim)
    family = "-" if args.which == "minus" else "+"
    try:
        gen = pres.registry.gen(args.gen)
    except KeyError:
        raise UsageError(f"unknown generator {args.gen!r}")
    if gen.kind == "diag":
        k = gen.index[0]
        i, j = (k, k) if family == "+" else (-k, -k)
    elif gen.kind == f"L{family}":
        i, j = gen.index
    else:
        raise UsageError(f"generator {args.gen!r} does not belong to the {args.which} family")
    cfg = _gamma_config(args.gamma, args.dim, pres.field)
    zeta = ZetaMap(pres, cfg, family)
    shown = pres.show(pres.nf(zeta.entry(i, j), degree_cap=args.degree_cap))
    _emit(args, shown, {"dim": args.dim, "which": args.which, "gen": args.gen, "image": shown})
    return 0


def _cmd_verify(args) -> int:
    report = verify(
        args.suite,
        args.dim,
        args.mode,
        samples=args.samples,
        seed=args.seed,
        gamma=_gamma_json(args.gamma),
    )
    _emit(args, "\n".join(report.lines()), report.to_json())
    return 0 if report.ok else 1


_COMMANDS = {
    "rmatrix": _cmd_rmatrix,
    "presentation": _cmd_presentation,
    "nf": _cmd_nf,
    "phi": _cmd_phi,
    "zeta": _cmd_zeta,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return 2
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except GluingError as err:
        print(f"no glued configuration over the scalar field: {err}", file=sys.stderr)
        for res in err.residuals:
            print(f"  residual: {res}", file=sys.stderr)
        return 1
    except DegreeCapExceeded as err:
        print(f"degree cap exceeded: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(str(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
