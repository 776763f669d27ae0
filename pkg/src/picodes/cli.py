"""Command line front end.

Exit codes: 0 success, 1 usage or IO error, 2 search exhausted without a
converged result, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import families, io, optimizer, simplicial
from .kl import CodeParams, qudit_residuals
from .oracle import MAX_AMPLITUDES, brute_kl_residuals

log = logging.getLogger("picodes")

EXIT_OK, EXIT_USAGE, EXIT_EXHAUSTED, EXIT_VERIFY = 0, 1, 2, 3
WORKERS_ENV = "PICODES_WORKERS"

PARAM_KINDS = {
    "complex": "complex-free",
    "real": "real-free",
    "pr": "pr-restricted",
    "symmetry": "symmetry-enforced",
    "fixed": "coefficient-fixed",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}")


def parse_n_range(text: str) -> list:
    """``7``, ``5-9`` or ``5,7,9``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError("empty n range")
    return out


def parse_fixed(text: str | None) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        k, v = item.split("=")
        out[int(k)] = float(v)
    return out


def parse_ratio(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad ratio {text!r}")


def _out_dir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


# -- commands --------------------------------------------------------------------

def cmd_search(args) -> int:
    kind = PARAM_KINDS[args.param]
    ns = parse_n_range(args.n)
    fixed = parse_fixed(args.fix)
    for n in ns:
        if n < optimizer.singleton_bound(args.t):
            print(f"n={n} violates the Singleton bound n >= {optimizer.singleton_bound(args.t)}; refusing",
                  file=sys.stderr)
            return EXIT_EXHAUSTED
    config = optimizer.SearchConfig(restarts=args.restarts, max_iters=args.max_iters, rng_seed=args.seed,
                                    method=args.method)
    out = _out_dir(args)
    manifest = io.start_manifest(args.seed)
    any_found = False
    for n in ns:
        par = optimizer.Parametrization(kind, CodeParams(n, args.qp, args.ql, args.t), fixed)
        outcome = optimizer.minimize(par, config, workers=_workers())
        csv_path = out / f"restarts_n{n}_t{args.t}.csv"
        io.write_csv(csv_path, optimizer.restart_rows(outcome), optimizer.RESTART_FIELDS)
        best = outcome.best
        code_path = out / f"best_n{n}_t{args.t}.json"
        io.save_code(code_path, best.table, {"seed": best.seed, "cost": best.cost, "converged": best.converged,
                                            "generator": f"search/{kind}"})
        manifest.outputs += [str(csv_path), str(code_path)]
        found = outcome.n_converged > 0
        any_found |= found
        print(json.dumps({"n": n, "t": args.t, "found": found, "n_converged": outcome.n_converged,
                          "best_cost": best.cost}))
        if found and not args.full:
            break
    manifest.finish(out / "manifest.json")
    return EXIT_OK if any_found else EXIT_EXHAUSTED


def cmd_verify(args) -> int:
    try:
        table, meta = io.load_code(args.file)
    except (OSError, io.FormatError) as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.t is not None:
        table = table.with_t(args.t)
    report = qudit_residuals(table)
    summary = {"n": table.params.n, "q_p": table.params.q_p, "q_l": table.params.q_l, "t": table.params.t}
    summary.update(report.summary())
    if args.oracle:
        p = table.params
        if p.q_p ** p.n > MAX_AMPLITUDES:
            summary["oracle"] = "skipped: state too large"
        else:
            brute = brute_kl_residuals(table)
            keys = list(report.c2) + list(report.c3)
            diffs = [abs(report.c2.get(k, report.c3.get(k)) - brute.c2.get(k, brute.c3.get(k))) for k in keys]
            diffs.append(float(np.max(np.abs(report.c1 - brute.c1))))
            summary["oracle_discrepancy"] = max(diffs)
    ok = report.max_abs <= args.tol
    summary["passed"] = ok
    print(json.dumps(summary, indent=1))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_simplicial(args) -> int:
    mode = args.mode
    if mode == "lmax-table":
        qs = [args.q] if args.q else [3, 4, 5]
        for q in qs:
            x = simplicial.optimal_lmax(q - 1)
            guess = Fraction(x).limit_denominator(1000)
            exact = str(guess) if abs(float(guess) - x) < 1e-12 else ""
            print(f"q={q} D={q - 1} l_max/b={x:.12f} {exact}".rstrip())
        return EXIT_OK
    if mode == "volume":
        if not args.q:
            raise UsageError("--q is required")
        D = args.q - 1
        xs = np.linspace(1.0 / args.q, 0.5, args.samples)
        rows = [{"ratio": float(x), "volume": simplicial.volume(D, 1.0, float(x))} for x in xs]
        text = io.csv_text(rows, ("ratio", "volume"))
        if args.out:
            out = _out_dir(args)
            io.atomic_write(out / f"volume_q{args.q}.csv", text)
        sys.stdout.write(text)
        return EXIT_OK
    if mode == "fit":
        return _simplicial_fit(args)
    for name in ("t", "q", "ql"):
        if getattr(args, name) is None:
            raise UsageError(f"--{name} is required for mode {mode}")
    ratio = parse_ratio(args.ratio)
    if not Fraction(1, args.q) <= ratio <= Fraction(1, 2):
        raise UsageError(f"ratio {ratio} outside [1/{args.q}, 1/2]")
    if mode == "min-b":
        res = simplicial.min_b_search(args.t, args.q, args.ql, ratio, mode=args.lmax_mode)
        sol = res.solution
        for b, lm, ok in res.tried:
            log.info("b=%d l_max=%s feasible=%s", b, lm, ok)
    else:  # solve-at-b
        if args.b is None:
            raise UsageError("--b is required for solve-at-b")
        lm = simplicial.lmax_for(ratio, args.b, args.q, args.lmax_mode)
        if lm is None:
            raise UsageError(f"no integer l_max fits b={args.b}")
        sol, _ = simplicial.solve_region(args.t, args.ql, simplicial.RegionSpec(args.q, args.b, lm))
        if sol is None:
            print(json.dumps({"t": args.t, "b": args.b, "feasible": False}))
            return EXIT_EXHAUSTED
    print(json.dumps({"t": sol.t, "b": sol.spec.b, "n": sol.n, "l_max": str(sol.spec.l_max), "feasible": True}))
    if args.out:
        out = _out_dir(args)
        manifest = io.start_manifest()
        sol_path = out / f"simplicial_t{sol.t}_b{sol.spec.b}.json"
        code_path = out / f"simplicial_t{sol.t}_b{sol.spec.b}_code.json"
        io.save_solution(sol_path, sol)
        io.save_code(code_path, simplicial.emit_codewords(sol, args.ql), {"generator": "simplicial"})
        manifest.outputs += [str(sol_path), str(code_path)]
        manifest.finish(out / "manifest.json")
    return EXIT_OK


def _poly_text(coef) -> str:
    terms = [str(c) if k == 0 else f"{c}*t" if k == 1 else f"{c}*t^{k}" for k, c in enumerate(coef) if c]
    return " + ".join(reversed(terms)).replace("+ -", "- ") or "0"


def _simplicial_fit(args) -> int:
    if args.q is None or args.ql is None or args.t_max is None:
        raise UsageError("--q, --ql and --t-max are required for fit")
    if args.t_max < 1:
        raise UsageError("--t-max must be positive")
    ratio = parse_ratio(args.ratio)
    if not Fraction(1, args.q) <= ratio <= Fraction(1, 2):
        raise UsageError(f"ratio {ratio} outside [1/{args.q}, 1/2]")
    data = []
    for t in range(1, args.t_max + 1):
        sol = simplicial.min_b_search(t, args.q, args.ql, ratio, mode=args.lmax_mode).solution
        data.append((t, sol.spec.b, sol.n))
        print(json.dumps({"t": t, "b": sol.spec.b, "n": sol.n}), flush=True)
    b_fit = simplicial.interpolate([(t, b) for t, b, _ in data])
    n_fit = simplicial.interpolate([(t, n) for t, _, n in data])
    print(json.dumps({"b(t)": _poly_text(b_fit), "n(t)": _poly_text(n_fit), "points": len(data)}))
    return EXIT_OK


def cmd_scan(args) -> int:
    try:
        i, j = (int(v) for v in args.pair.split(","))
    except ValueError:
        raise UsageError(f"bad pair {args.pair!r}")
    config = optimizer.SearchConfig(restarts=args.restarts, rng_seed=args.seed, stop_at_first=True)
    pts = optimizer.grid_scan(args.n, args.t, (i, j), args.step, config)
    rows = [{"a_i": p.a_i, "a_j": p.a_j, "cost": p.cost, "converged": int(p.converged), "derived": int(p.derived)}
            for p in pts]
    out = _out_dir(args)
    manifest = io.start_manifest(args.seed)
    path = out / f"scan_n{args.n}_t{args.t}_{i}_{j}.csv"
    io.write_csv(path, rows, ("a_i", "a_j", "cost", "converged", "derived"))
    manifest.outputs.append(str(path))
    manifest.finish(out / "manifest.json")
    print(f"{sum(p.converged for p in pts)} feasible of {len(pts)} grid points -> {path}")
    return EXIT_OK


def cmd_families(args) -> int:
    out = _out_dir(args)
    if args.name == "aab":
        if args.t is None:
            raise UsageError("--t is required for aab")
        table = families.aab_code(families.AABParams.default(args.t))
        name = f"aab_t{args.t}.json"
    elif args.name == "analytic":
        table = families.analytic_7qubit()
        name = "analytic_n7_t1.json"
    else:  # pad
        if not args.source or not args.qp:
            raise UsageError("--from and --qp are required for pad")
        try:
            src, _ = io.load_code(args.source)
        except (OSError, io.FormatError) as exc:
            print(f"cannot read {args.source}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        table = families.pad(src, args.qp)
        name = f"{Path(args.source).stem}_qp{args.qp}.json"
    manifest = io.start_manifest()
    path = out / name
    io.save_code(path, table, {"generator": f"families/{args.name}"})
    manifest.outputs.append(str(path))
    manifest.finish(out / "manifest.json")
    print(path)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="picodes", description="Search, build and verify permutation-invariant codes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("search", help="multi-restart minimal block length search")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--qp", type=int, default=2)
    s.add_argument("--ql", type=int, default=2)
    s.add_argument("--param", choices=sorted(PARAM_KINDS), default="complex")
    s.add_argument("--n", required=True, help="block length(s): 7, 5-9 or 5,7,9")
    s.add_argument("--restarts", type=int, default=1000)
    s.add_argument("--max-iters", type=int, default=1_200_000)
    s.add_argument("--method", choices=("lm", "bfgs"), default="lm")
    s.add_argument("--fix", help="pinned row-0 entries, e.g. 0=0,1=0")
    s.add_argument("--full", action="store_true", help="keep going after the first n that converges")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="picodes_out")
    s.set_defaults(func=cmd_search)

    v = sub.add_parser("verify", help="check KL conditions of a code file")
    v.add_argument("file")
    v.add_argument("--t", type=int)
    v.add_argument("--tol", type=float, default=1e-10)
    v.add_argument("--oracle", action="store_true", help="cross-check with explicit Kraus operators")
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("simplicial", help="simplicial qudit codes and region volumes")
    m.add_argument("--mode", choices=("min-b", "solve-at-b", "lmax-table", "volume", "fit"), required=True)
    m.add_argument("--t", type=int)
    m.add_argument("--q", type=int)
    m.add_argument("--ql", type=int)
    m.add_argument("--ratio", default="3/7")
    m.add_argument("--b", type=int)
    m.add_argument("--t-max", type=int, help="fit mode: fit b(t), n(t) over t = 1..t-max")
    m.add_argument("--lmax-mode", choices=simplicial.LMAX_MODES, default="exact")
    m.add_argument("--samples", type=int, default=50)
    m.add_argument("--out")
    m.set_defaults(func=cmd_simplicial)

    g = sub.add_parser("scan", help="grid scan over two pinned coefficients")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--t", type=int, required=True)
    g.add_argument("--pair", required=True, help="two row-0 indices, e.g. 0,1")
    g.add_argument("--step", type=float, default=0.02)
    g.add_argument("--restarts", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="picodes_out")
    g.set_defaults(func=cmd_scan)

    f = sub.add_parser("families", help="write analytic family codes")
    f.add_argument("--name", choices=("aab", "analytic", "pad"), required=True)
    f.add_argument("--t", type=int)
    f.add_argument("--from", dest="source")
    f.add_argument("--qp", type=int)
    f.add_argument("--out", default="picodes_out")
    f.set_defaults(func=cmd_families)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
