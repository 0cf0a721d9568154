"""Command-line front end: runs certificate pipelines and writes reports.

Exit codes: 0 when the report passes, 2 on an invariant failure, 3 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__, core
from .algebra import BaseAlgebra
from .basic import BasicMapSpec, demo_unitary, diagram_certificate, eta_iota_certificate
from .config import RunConfig
from .elementary import ElementaryMap, standard_path_sequence
from .errors import ConfigError, DimDropError, DimensionMismatch, NotCoprime, StageError
from .projections import (
    PartialIsometryElement,
    corollary36_complement,
    corollary36_fixture,
    lemma34_fixture,
    lemma34_negative_control,
    lemma34_pipeline,
    theorem39_fixture,
    theorem39_intertwiner,
)

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_CONFIG = 3

_CONFIG_ERRORS = (ConfigError, NotCoprime, DimensionMismatch)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------- reports

def _clean(x):
    """JSON-ready copy with floats rounded to 6 significant digits."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.6g}") + 0.0
    if x is None or isinstance(x, str):
        return x
    return str(x)


def _stage_rows(report, prefix=""):
    rows = []
    for key, value in report.items():
        if key == "stages" and isinstance(value, list):
            for st in value:
                rows.append({"certificate": prefix or report.get("name", ""), **st})
        elif isinstance(value, dict):
            rows.extend(_stage_rows(value, f"{prefix}.{key}" if prefix else key))
    return rows


def _flat_items(report, prefix=""):
    for key, value in report.items():
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            yield from _flat_items(value, name)
        elif isinstance(value, list):
            yield name, json.dumps(value)
        else:
            yield name, value


def render(report, fmt):
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    rows = _stage_rows(report)
    if rows:
        fields = list(rows[0])
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    else:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerows(_flat_items(report))
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def _base(text, cfg):
    return BaseAlgebra.parse(text, G=cfg.grid_g)


def cmd_verify_elementary(args, cfg):
    n = args.n
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    if args.samples < 1:
        raise ConfigError("samples must be positive")
    base = _base(args.base, cfg)
    seq = standard_path_sequence(n, cfg.grid_t)
    E = ElementaryMap(seq)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(args.samples):
        winding = int(rng.integers(-3, 4)) if base.has_k1 else 0
        u = demo_unitary(base, 1, winding=winding, seed=int(rng.integers(2**31)))
        ends = E.fibers(u.fibers, indices=[0, cfg.grid_t])
        d0 = core.max_opnorm(ends[0] - u.tensor_identity(n).fibers)
        target = core.pad_identity(np.linalg.matrix_power(u.fibers, n), (n - 1) * u.dim)
        d1 = core.max_opnorm(ends[1] - target)
        rows.append({"index": i, "winding": winding, "start_defect": d0, "end_defect": d1})
    seq_defects = seq.defects()
    worst = max(max(r["start_defect"], r["end_defect"]) for r in rows)
    passed = worst <= cfg.tol and max(seq_defects.values()) <= cfg.tol
    return {
        "name": "verify_elementary",
        "params": {"n": n, "base": base.label(), "T": cfg.grid_t, "G": base.G,
                   "seed": cfg.seed, "samples": args.samples},
        "sequence_defects": seq_defects,
        "samples": rows,
        "max_endpoint_defect": worst,
        "pass": passed,
    }


def cmd_verify_basic(args, cfg):
    base = _base(args.base, cfg)
    if math.gcd(args.m, args.n) != 1:
        raise NotCoprime(args.m, args.n)
    spec = BasicMapSpec.standard(1, args.m, args.n, cfg.grid_t)
    winding = args.winding if base.has_k1 else 0
    u = demo_unitary(base, 1, winding=winding, seed=cfg.seed)
    cert = eta_iota_certificate(spec, u, steps=cfg.grid_s, tol=cfg.tol, boundary_tol=cfg.boundary_tol)
    out = cert.to_dict()
    out["params"].update({"G": base.G, "seed": cfg.seed, "winding": winding})
    return out


def cmd_certify_diagram(args, cfg):
    base = _base(args.base, cfg)
    if math.gcd(args.m, args.n) != 1:
        raise NotCoprime(args.m, args.n)
    if args.k < 1 or args.m < args.k or args.n < args.k:
        raise ConfigError("need 1 <= k <= min(m, n)")
    report = diagram_certificate(base, args.k, args.m, args.n, T=cfg.grid_t, steps=cfg.grid_s,
                                 tol=cfg.tol, boundary_tol=cfg.boundary_tol, seed=cfg.seed)
    out = {"name": "diagram",
           "params": {"k": args.k, "m": args.m, "n": args.n, "base": base.label(),
                      "T": cfg.grid_t, "G": base.G, "seed": cfg.seed}}
    out.update(report.to_dict())
    return out


def cmd_demo_lemma34(args, cfg):
    base = _base(args.base, cfg)
    if math.gcd(args.m, args.n) != 1:
        raise NotCoprime(args.m, args.n)
    fx = lemma34_fixture(base, args.d, args.rank, args.winding, args.m, args.n, seed=cfg.seed)
    res = lemma34_pipeline(fx["p"], fx["q"], fx["u0"], fx["u1"], args.m, args.n,
                           T=cfg.grid_t, tol=cfg.tol)
    pipeline = res.to_dict()
    pipeline["params"].update({"G": base.G, "seed": cfg.seed, "winding": args.winding,
                               "rank": args.rank})
    control = lemma34_negative_control(fx["p"], fx["q"], fx["u0"], fx["u1"], args.m, args.n,
                                       T=cfg.grid_t, tol=cfg.tol)
    control_ok = control["corner_class"] == args.winding and (
        args.winding == 0 or not control["valid_U"]
    )
    control["pass"] = control_ok
    return {"name": "demo_lemma34", "pipeline": pipeline, "negative_control": control,
            "pass": bool(res.passed and control_ok)}


def cmd_demo_theorem39(args, cfg):
    base = _base(args.base, cfg)
    if math.gcd(args.m, args.n) != 1:
        raise NotCoprime(args.m, args.n)
    fx = theorem39_fixture(base, args.d, args.rank_p, args.rank_q, args.m, args.n, seed=cfg.seed)
    res = theorem39_intertwiner(fx["p"], fx["q"], fx["v0"], fx["v1"], args.m, args.n,
                                T=cfg.grid_t, tol=cfg.tol)
    out = res.to_dict()
    out["params"].update({"G": base.G, "seed": cfg.seed, "rank_p": args.rank_p,
                          "rank_q": args.rank_q})
    return out


def cmd_demo_corollary36(args, cfg):
    base = _base(args.base, cfg)
    fx = corollary36_fixture(base, args.d, args.rank, args.winding, seed=cfg.seed)
    res = corollary36_complement(PartialIsometryElement(fx["v"]), fx["w"], T=cfg.grid_t, tol=cfg.tol)
    out = res.to_dict()
    out["params"].update({"G": base.G, "seed": cfg.seed, "rank": args.rank,
                          "winding": args.winding})
    return out


COMMANDS = {
    "verify-elementary": cmd_verify_elementary,
    "verify-basic": cmd_verify_basic,
    "certify-diagram": cmd_certify_diagram,
    "demo-lemma34": cmd_demo_lemma34,
    "demo-theorem39": cmd_demo_theorem39,
    "demo-corollary36": cmd_demo_corollary36,
}


# ---------------------------------------------------------------- parser

def _common(p):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--tol", type=float)
    p.add_argument("--boundary-tol", type=float)
    p.add_argument("--grid-t", type=int, help="interval resolution T (even)")
    p.add_argument("--grid-g", type=int, help="circle resolution G")
    p.add_argument("--grid-s", type=int, help="s-steps per homotopy stage")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="report path (default: stdout or $DIMDROP_OUTPUT_DIR)")
    p.add_argument("--format", choices=["json", "csv"])


def build_parser():
    parser = _Parser(prog="dimdrop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dimdrop {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("verify-elementary", help="endpoint laws of the standard elementary map")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--base", default="scalars")
    p.add_argument("--samples", type=int, default=10)
    _common(p)

    p = sub.add_parser("verify-basic", help="certify the deformation of eta(u) into u ⊗ 1")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--base", default="circle:1")
    p.add_argument("--winding", type=int, default=1)
    _common(p)

    p = sub.add_parser("certify-diagram", help="certify both triangles of the mu_k / eta diagram")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--base", default="scalars")
    _common(p)

    p = sub.add_parser("demo-lemma34", help="corrected unitary path between projections")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--winding", type=int, default=1)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--base", default="circle:1")
    _common(p)

    p = sub.add_parser("demo-theorem39", help="partial isometry from subequivalence witnesses")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--rank-p", type=int, default=1)
    p.add_argument("--rank-q", type=int, default=3)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--base", default="matrices:1")
    _common(p)

    p = sub.add_parser("demo-corollary36", help="unitary completion of a partial isometry")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--winding", type=int, default=1)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--base", default="circle:1")
    _common(p)
    return parser


def _config(args):
    overrides = {
        "tol": args.tol,
        "boundary_tol": args.boundary_tol,
        "grid_t": args.grid_t,
        "grid_g": args.grid_g,
        "grid_s": args.grid_s,
        "seed": args.seed,
        "out": args.out,
        "format": args.format,
    }
    if args.config:
        try:
            return RunConfig.from_file(args.config, **overrides)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _is_config_error(exc):
    if isinstance(exc, StageError):
        return _is_config_error(exc.cause)
    return isinstance(exc, _CONFIG_ERRORS)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise ConfigError("a command is required; see --help")
        cfg = _config(args)
    except ConfigError as exc:
        print(f"dimdrop: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    body = None
    try:
        body = COMMANDS[args.command](args, cfg)
    except DimDropError as exc:
        if _is_config_error(exc):
            print(f"dimdrop: configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        body = {"name": args.command.replace("-", "_"), "error": str(exc), "pass": False}
    report = _clean({"tool_version": __version__, "command": args.command,
                     "config": cfg.to_dict(), **body})
    text = render(report, cfg.format)
    path = cfg.output_path(f"{args.command}.{cfg.format}")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not report["pass"]:
        print(f"dimdrop: {args.command} failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
