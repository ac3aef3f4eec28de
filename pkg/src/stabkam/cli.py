"""Command-line driver.

Exit codes: 0 success, 2 invariant or assertion failure, 3 budget exceeded,
64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_ASSERT, EXIT_BUDGET, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config and reports


def parse_config_file(path) -> dict:
    """key=value lines; '#' starts a comment."""
    out = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def _coerce(value: str, default):
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if value.lower() in ("none", ""):
        return None
    if isinstance(default, int) and not isinstance(default, bool):
        return int(value)
    if isinstance(default, float):
        return float(value)
    try:
        return int(value)
    except ValueError:
        try:
            return float(value)
        except ValueError:
            return value


def flow_config_from(pairs: dict):
    from .kam import FlowConfig
    base = FlowConfig()
    known = {f.name for f in fields(FlowConfig)}
    kw = {}
    for k, v in pairs.items():
        if k not in known:
            raise UsageError(f"unknown config key {k!r}")
        kw[k] = _coerce(str(v), getattr(base, k))
    return FlowConfig(**kw)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def config_hash(config: dict) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def emit_report(results: dict, fmt: str = "json", path=None, config: dict | None = None,
                seeds=None, rows: list[dict] | None = None) -> str:
    """Serialize deterministically.  JSON gets a header block; CSV writes `rows`."""
    config = config or {}
    if fmt == "json":
        doc = {"tool": "stabkam", "version": __version__, "config": config,
               "config_hash": config_hash(config), "seeds": list(seeds or []), "results": results}
        text = json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
    elif fmt == "csv":
        rows = rows or []
        buf = io.StringIO()
        cols = sorted({k for r in rows for k in r}) if rows else ["index"]
        buf.write(f"# stabkam {__version__} config_hash={config_hash(config)}\n")
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(_jsonable(v)) if isinstance(v, (dict, list)) else _jsonable(v))
                        for k, v in r.items()})
        text = buf.getvalue()
    else:
        raise UsageError(f"unknown format {fmt!r}")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# subcommands


def _load_code(args):
    from .codes import code_from_spec, make_repetition, make_toric, load_code
    if getattr(args, "file", None):
        return load_code(args.file)
    b = getattr(args, "builder", None)
    if b:
        if b == "toric":
            return make_toric(args.lx, args.ly or args.lx)
        if b in ("ising", "repetition"):
            return make_repetition(args.n, periodic=not args.open)
        raise UsageError(f"unknown builder {b!r}")
    return code_from_spec(args.code)


def cmd_code(args) -> int:
    from .graphs import code_distance
    from .codes import save_code
    code = _load_code(args)
    if args.action == "save":
        if not args.out:
            raise UsageError("save needs --out")
        save_code(code, args.out)
        return EXIT_OK
    mode = "symmetric" if code.kind == "classical-Z" else "quantum"
    dist = code_distance(code, mode, cap=args.distance_cap)
    info = {"name": code.name, "kind": code.kind, "N": code.n_qubits, "n_checks": code.n_checks,
            "K": code.k_logical, "d": str(dist), "distance_mode": mode}
    if args.format == "text":
        print(f"N={code.n_qubits} K={code.k_logical} d={dist} checks={code.n_checks} kind={code.kind}")
    else:
        emit_report(info, args.format, args.out, {"code": code.name})
    return EXIT_OK


def cmd_metrics(args) -> int:
    from .graphs import build_graphs, ball_and_kappa, code_distance, d_star
    from .tqo import check_tqo2
    code = _load_code(args)
    g = build_graphs(code)
    prof = ball_and_kappa(g, args.r_max)
    mode = "symmetric" if code.kind == "classical-Z" else "quantum"
    dist = code_distance(code, mode, cap=args.distance_cap)
    tq = check_tqo2(code, args.tqo_cap, g)
    ds = d_star(code, g, tq.d_tilde, mode, distance=dist)
    res = {"w_q": g.w_q, "w_c": g.w_c, "kappa": prof.kappa, "kappa_ldpc_bound": prof.ldpc_bound,
           "balls": prof.table(), "d": str(dist), "ell": tq.ell, "d_tilde": tq.d_tilde,
           "d_star": ds.value, "d_star_lower_bound": ds.lower_bound}
    emit_report(res, args.format, args.out, {"code": code.name, "tqo_cap": args.tqo_cap, "r_max": args.r_max})
    return EXIT_OK


def cmd_tqo(args) -> int:
    from .tqo import check_tqo2
    code = _load_code(args)
    tq = check_tqo2(code, args.cap)
    emit_report(tq.as_dict(), args.format, args.out, {"code": code.name, "cap": args.cap})
    if not tq.complete:
        return EXIT_BUDGET
    return EXIT_ASSERT if tq.violations and args.strict else EXIT_OK


def _flow_config(args):
    pairs = parse_config_file(args.config) if args.config else {}
    for kv in args.set or []:
        if "=" not in kv:
            raise UsageError(f"--set expects key=value, got {kv!r}")
        k, v = kv.split("=", 1)
        pairs[k.strip()] = v.strip()
    if args.mu0 is not None:
        pairs["mu0"] = args.mu0
    return flow_config_from(pairs)


def _perturbation(code, args):
    from .kam import perturbation_field
    from .experiments import generic_field
    if args.field == "generic":
        return generic_field(code.n_qubits, args.h, args.seed)
    return perturbation_field(code.n_qubits, args.h, args.field)


def cmd_flow(args) -> int:
    from .experiments import flow_on
    code = _load_code(args)
    cfg = _flow_config(args)
    if cfg.mode == "quantum" and code.kind == "classical-Z" and args.field in ("X",):
        cfg.mode = "classical-symmetric"
    run = flow_on(code, _perturbation(code, args), cfg, quiet=not args.verbose)
    res = run.result
    rep = res.report()
    rep["seconds"] = None  # wall time excluded from reports for determinism
    conf = {"code": code.name, "h": args.h, "field": args.field, "seed": args.seed, **cfg.as_dict()}
    if args.format == "csv":
        emit_report(rep, "csv", args.out, conf, rows=res.table())
    else:
        emit_report(rep, "json", args.out, conf, seeds=[args.seed])
    bad = [s for s in res.states if s.rhs_eps is not None and s.eps > s.rhs_eps]
    if res.status == "diverged" or (args.strict and bad):
        return EXIT_ASSERT
    if res.status == "max_scales" and args.strict:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .experiments import hamiltonian_matrix
    from .spectral import band_report, exact_spectrum
    from .pauli import DENSE_CAP, SPARSE_CAP, CapExceeded
    code = _load_code(args)
    if code.n_qubits > SPARSE_CAP:
        return EXIT_BUDGET
    h = _perturbation(code, args)
    dense = code.n_qubits <= 11 and args.k is None
    m = hamiltonian_matrix(code, h, dense=dense)
    k = args.k if args.k is not None else (None if dense else (1 << code.k_logical) + 8)
    spec = exact_spectrum(m, code.n_qubits, k=k, vectors=not dense)
    eps0 = args.eps0
    rep = band_report(spec.eigenvalues, code.k_logical, eps0=eps0)
    conf = {"code": code.name, "h": args.h, "field": args.field, "seed": args.seed, "k": k}
    res = {"b": rep.b, "delta": rep.delta, "gap": rep.gap, "c_prime": rep.c_prime,
           "violations": rep.violations, "residual": spec.residual}
    if args.format == "csv":
        emit_report(res, "csv", args.out, conf, rows=rep.table())
    else:
        res["bands"] = rep.table()
        emit_report(res, "json", args.out, conf, seeds=[args.seed])
    if spec.residual == spec.residual and spec.residual > 1e-8:
        return EXIT_ASSERT
    return EXIT_OK


def cmd_sweep(args) -> int:
    """Empirical divergence threshold in eps0 by bisection (the analytic one is not computed)."""
    from .experiments import flow_on
    from .kam import ising_field_for_eps
    code = _load_code(args)
    cfg = _flow_config(args)
    if code.kind == "classical-Z":
        cfg.mode = "classical-symmetric"
    cfg.matrix_checks = False
    rows = []

    def converges(eps0: float) -> bool:
        from .kam import perturbation_field
        h = ising_field_for_eps(cfg.mu0, eps0) if code.kind == "classical-Z" else eps0
        run = flow_on(code, perturbation_field(code.n_qubits, h, args.field), cfg)
        ok = run.result.status == "converged"
        rows.append({"eps0": run.result.eps0, "h": h, "status": run.result.status,
                     "n_star": run.result.n_star})
        return ok

    lo, hi = args.lo, args.hi
    if not converges(lo):
        hi, lo = lo, 0.0
    elif converges(hi):
        lo = hi
    else:
        for _ in range(args.steps):
            mid = math.sqrt(lo * hi) if lo > 0 else hi / 2
            if converges(mid):
                lo = mid
            else:
                hi = mid
    conf = {"code": code.name, "lo": args.lo, "hi": args.hi, "steps": args.steps, **cfg.as_dict()}
    if args.format == "csv":
        emit_report({}, "csv", args.out, conf, rows=rows)
    else:
        emit_report({"threshold_low": lo, "threshold_high": hi, "runs": rows}, "json", args.out, conf)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest
    failures = run_selftest(verbose=not args.quiet)
    return EXIT_ASSERT if failures else EXIT_OK


# ---------------------------------------------------------------------------


def _add_code_args(p, builder: bool = False):
    p.add_argument("--code", default="ising:8", help="ising:N, ising-open:N, toric:LxL, hgp-rep:N, file:PATH")
    p.add_argument("--file", help="code file (overrides --code)")
    if builder:
        p.add_argument("--builder", choices=["toric", "ising", "repetition"])
        p.add_argument("--lx", type=int, default=2)
        p.add_argument("--ly", type=int)
        p.add_argument("--n", type=int, default=8)
        p.add_argument("--open", action="store_true")


def _add_out(p, formats=("json", "csv")):
    p.add_argument("--format", choices=list(formats), default=formats[0])
    p.add_argument("--out", help="output path (default stdout)")


def _add_field(p):
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--field", choices=["X", "Y", "Z", "generic"], default="X")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="stabkam", description="Word-algebra KAM flow and spectral checks for stabilizer codes")
    ap.add_argument("--version", action="version", version=f"stabkam {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("code", help="build or inspect a code")
    _add_code_args(p, builder=True)
    p.add_argument("action", nargs="?", choices=["info", "save"], default="info")
    p.add_argument("--distance-cap", type=int, default=8)
    _add_out(p, ("text", "json"))
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("metrics", help="weights, growth, distances, d_*")
    _add_code_args(p, builder=True)
    p.add_argument("--r-max", type=int, default=6)
    p.add_argument("--tqo-cap", type=int, default=4)
    p.add_argument("--distance-cap", type=int, default=8)
    _add_out(p, ("json",))
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("tqo", help="TQO-II certification")
    _add_code_args(p, builder=True)
    p.add_argument("--cap", type=int, default=4)
    p.add_argument("--strict", action="store_true", help="exit 2 on violations")
    _add_out(p, ("json",))
    p.set_defaults(func=cmd_tqo)

    for name, func, hlp in (("flow", cmd_flow, "run the KAM flow"),
                            ("sweep", cmd_sweep, "bisect the empirical divergence threshold")):
        p = sub.add_parser(name, help=hlp)
        _add_code_args(p, builder=True)
        _add_field(p)
        p.add_argument("--mu0", type=float)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE")
        p.add_argument("--strict", action="store_true")
        p.add_argument("--verbose", action="store_true")
        if name == "sweep":
            p.add_argument("--lo", type=float, default=1e-3)
            p.add_argument("--hi", type=float, default=1.0)
            p.add_argument("--steps", type=int, default=6)
        _add_out(p)
        p.set_defaults(func=func)

    p = sub.add_parser("spectrum", help="exact diagonalization and band table")
    _add_code_args(p, builder=True)
    _add_field(p)
    p.add_argument("--k", type=int, help="number of lowest eigenvalues (sparse)")
    p.add_argument("--eps0", type=float, help="reference coupling for the band widths")
    _add_out(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("selftest", help="run the built-in invariant suite")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_selftest)
    return ap


def dispatch(argv=None) -> int:
    from .pauli import CapExceeded
    from .tqo import BudgetExceeded
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if not getattr(args, "command", None):
            ap.print_usage(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as e:
        print(f"stabkam: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CapExceeded, BudgetExceeded) as e:
        print(f"stabkam: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except AssertionError as e:
        print(f"stabkam: assertion failed: {e}", file=sys.stderr)
        return EXIT_ASSERT
    except OSError as e:
        print(f"stabkam: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())
