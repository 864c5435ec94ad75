"""Command-line interface.

Exit status: 0 success, 1 usage/config/input error, 2 no derivation,
3 benchmark energy mismatch.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import math
import sys
import time
from typing import Sequence

from . import __version__
from .abstraction import AbstractionMap
from .core import (
    BudgetExceededError,
    LightestDerivationError,
    Problem,
    ground,
    parse_statement,
)
from .engine import (
    TraceWriter,
    astar_ld,
    dp_acyclic,
    kld,
)
from .hald import Hierarchy, hald_trace_fields, run_hald

EXIT_OK, EXIT_USAGE, EXIT_NO_DERIVATION, EXIT_MISMATCH = 0, 1, 2, 3
BENCH_HEADER = ["algo", "seed", "sigma", "R", "N", "energy", "expansions", "pushes", "ms"]


class UsageError(Exception):
    pass


class NoDerivation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def format_weight(w: float) -> str:
    if math.isfinite(w) and w == int(w) and abs(w) < 2 ** 53:
        return str(int(w))
    return repr(w)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def parse_int_list(text: str) -> list[int]:
    """``"0,3,5"`` or ``"0-9"`` or a mix."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


@contextlib.contextmanager
def _trace_sink(path: str | None, extra=None):
    if path is None:
        yield None
        return
    with open(path, "w") as fh:
        yield TraceWriter(fh, extra)


def _algo(name: str, allowed: Sequence[str]) -> tuple[str, int | None]:
    base, _, level = name.partition(":")
    if base not in allowed:
        raise UsageError(f"--algo {name!r} is not available here (choose from {', '.join(allowed)})")
    if base == "astar-pdb" and level:
        try:
            return base, int(level)
        except ValueError:
            raise UsageError(f"bad pattern-database level in {name!r}") from None
    return base, None


def _report(sol, stats) -> float:
    if sol.goal_weight is None:
        raise NoDerivation()
    if stats is not None:
        _log(f"expansions={stats.expansions} pushes={stats.pushes} discarded={stats.discarded}")
    return sol.goal_weight


# -- solve -------------------------------------------------------------------

def _solve_generic(p: Problem, algo: str, args) -> float:
    base, _ = _algo(algo, ("dp", "kld", "hald"))
    if base == "dp":
        sol = dp_acyclic(p if p.grounded else ground(p))
        return _report(sol, None)
    if base == "kld":
        with _trace_sink(args.trace) as tr:
            sol, stats = kld(p, assert_monotone=args.assert_monotone, trace=tr)
        return _report(sol, stats)
    hier = Hierarchy([p], [], name=p.name)
    with _trace_sink(args.trace, hald_trace_fields) as tr:
        res = run_hald(hier, assert_monotone=args.assert_monotone, trace=tr)
    return _report(res.solution, res.stats)


def cmd_solve_graph(args) -> int:
    from .problems.graph import graph_problem, load_graph
    with open(args.input) as fh:
        g = load_graph(fh.read())
    print(format_weight(_solve_generic(graph_problem(g), args.algo, args)))
    return EXIT_OK


def cmd_solve_parse(args) -> int:
    from .problems.parsing import InputError, load_grammar, parse_problem
    with open(args.grammar) as fh:
        g = load_grammar(fh.read())
    if args.tokens is not None:
        tokens = args.tokens.split()
    else:
        with open(args.input) as fh:
            tokens = fh.read().split()
    try:
        p = parse_problem(g, tokens)
    except InputError as e:
        raise UsageError(str(e)) from None
    print(format_weight(_solve_generic(p, args.algo, args)))
    return EXIT_OK


def _convex_spec(args, seed: int | None = None, sigma: float | None = None, R: int | None = None):
    from .problems.convex import spec_from_image
    from .problems.imaging import CircleSpec, gen_circle_image, read_pgm
    N = args.N
    if getattr(args, "image", None):
        img = read_pgm(args.image)
        R = R or args.R
        center = (args.cx, args.cy) if args.cx is not None else None
        return img, spec_from_image(img, N, R, center)
    R = R or args.R
    img = gen_circle_image(CircleSpec(R, args.sigma if sigma is None else sigma,
                                      args.seed if seed is None else seed))
    return img, spec_from_image(img, N, R)


def solve_convex(spec, algo: str, levels: int | None, assert_monotone: bool = False,
                 trace=None) -> dict:
    """Optimal energy and hypothesis with one algorithm; returns a record."""
    from .problems import convex as cv
    base, k = _algo(algo, ("dp", "kld", "astar-pdb", "hald", "bruteforce"))
    N, R = spec.N, spec.R
    if base == "dp":
        e, r = cv.convex_dp(spec)
        return {"energy": e, "hypothesis": r, "expansions": N * R ** 4, "pushes": 0}
    if base == "bruteforce":
        out = cv.convex_bruteforce(spec)
        if out is None:
            raise NoDerivation()
        return {"energy": out[0], "hypothesis": out[1], "expansions": 0, "pushes": 0}
    if base == "kld":
        sol, st = kld(cv.convex_problem(spec), assert_monotone=assert_monotone, trace=trace)
    elif base == "astar-pdb":
        if k is None:
            raise UsageError("astar-pdb needs a level, e.g. --algo astar-pdb:2")
        try:
            pdb = cv.convex_pdb(spec, k)
        except cv.SpecError as e:
            raise UsageError(str(e)) from None
        sol, st = astar_ld(cv.convex_problem(spec), pdb.heuristic(),
                           assert_monotone=assert_monotone, trace=trace)
    else:
        try:
            hier = cv.convex_hierarchy(spec, levels)
        except cv.SpecError as e:
            raise UsageError(str(e)) from None
        res = run_hald(hier, assert_monotone=assert_monotone, trace=trace)
        if res.goal_weight is None:
            raise NoDerivation()
        return {"energy": res.goal_weight, "hypothesis": _hald_hypothesis(res),
                "expansions": res.expansions, "pushes": res.stats.pushes}
    if sol.goal_weight is None:
        raise NoDerivation()
    return {"energy": sol.goal_weight, "hypothesis": cv.hypothesis_from_solution(sol),
            "expansions": st.expansions, "pushes": st.pushes}


def _hald_hypothesis(res) -> list[int]:
    from .problems.convex import hypothesis_from_solution
    d = res.derivation
    rules = {}
    stack = [d]
    while stack:
        node = stack.pop()
        rules[node.rule.conclusion] = node.rule
        stack.extend(node.children)
    return hypothesis_from_solution(None, d.rule.conclusion, rule_of=rules.__getitem__)


def cmd_solve_convex(args) -> int:
    from .problems.convex import boundary_points
    from .problems.imaging import overlay, write_ppm
    img, spec = _convex_spec(args)
    extra = hald_trace_fields if args.algo == "hald" else None
    with _trace_sink(args.trace, extra) as tr:
        rec = solve_convex(spec, args.algo, args.levels, args.assert_monotone, tr)
    _log(f"hypothesis={','.join(map(str, rec['hypothesis']))} "
         f"expansions={rec['expansions']} pushes={rec['pushes']}")
    print(format_weight(rec["energy"]))
    if args.out:
        write_ppm(args.out, overlay(img, boundary_points(spec, rec["hypothesis"])))
    return EXIT_OK


def cmd_solve_curve(args) -> int:
    from .problems import curves as cu
    from .problems.imaging import overlay, read_pgm, write_ppm
    img = read_pgm(args.image) if args.image else cu.gen_line_image(args.size, args.seed, args.sigma)
    spec = cu.CurveSpec(img, k1=args.k1, L=args.levels, lam=args.lam, mu=args.mu)
    base, _ = _algo(args.algo, ("kld", "astar-pdb", "dp"))
    if base == "dp":
        print(format_weight(cu.curve_objective(spec, cu.curve_dp(spec))))
        return EXIT_OK
    with _trace_sink(args.trace) as tr:
        if base == "kld":
            p = cu.curve_problem(spec, cu.OFFSET)
            sol, st = kld(p, assert_monotone=args.assert_monotone, trace=tr)
        else:
            p = cu.curve_problem(spec, cu.SIGNED)
            pdb = cu.curve_pdb(spec)
            sol, st = astar_ld(p, pdb.heuristic(cu.SIGNED),
                               assert_monotone=args.assert_monotone, trace=tr)
    w = _report(sol, st) - p.goal_offset
    pts = cu.curve_from_solution(sol)
    _log("curve=" + " ".join(f"{x},{y}" for x, y in pts))
    print(format_weight(w))
    if args.out:
        write_ppm(args.out, overlay(img, cu.curve_pixels(pts)))
    return EXIT_OK


# -- bench ---------------------------------------------------------------------

def cmd_bench_convex(args) -> int:
    seeds = parse_int_list(args.seeds)
    sigmas = parse_float_list(args.sigma)
    radii = parse_int_list(args.R)
    algos = [a for a in args.algos.split(",") if a]
    if not seeds:
        raise UsageError("--seeds is empty")
    if not sigmas or not radii or not algos:
        raise UsageError("--sigma, --R and --algos must be non-empty")
    for a in algos:
        _algo(a, ("dp", "kld", "astar-pdb", "hald", "bruteforce"))
    rows = []
    mismatch = None
    for R in radii:
        for sigma in sigmas:
            for seed in seeds:
                _, spec = _convex_spec(args, seed=seed, sigma=sigma, R=R)
                energies = []
                for a in algos:
                    t0 = time.perf_counter()
                    rec = solve_convex(spec, a, args.levels, args.assert_monotone)
                    ms = (time.perf_counter() - t0) * 1000
                    energies.append(rec["energy"])
                    rows.append({"algo": a, "seed": seed, "sigma": sigma, "R": R, "N": args.N,
                                 "energy": repr(rec["energy"]),
                                 "expansions": rec["expansions"], "pushes": rec["pushes"],
                                 "ms": "" if args.no_timing else f"{ms:.1f}"})
                ref = energies[0]
                for a, e in zip(algos, energies):
                    if abs(e - ref) > 1e-9 * max(1.0, abs(ref)) and mismatch is None:
                        mismatch = (f"energy mismatch on seed={seed} sigma={sigma} R={R} "
                                    f"N={args.N}: {algos[0]}={ref!r} {a}={e!r}")
    order = {a: i for i, a in enumerate(algos)}
    rows.sort(key=lambda r: (r["R"], r["sigma"], r["seed"], order[r["algo"]]))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_HEADER, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if mismatch:
        _log(mismatch)
        return EXIT_MISMATCH
    return EXIT_OK


# -- hald traces ------------------------------------------------------------------

def load_hierarchy(text: str) -> Hierarchy:
    """Text hierarchy: ``level`` starts a level (then ``goal``/``rule`` lines as
    in problem files); ``map <k> <stmt> <abstract stmt>`` defines level k's map."""
    from .core import load_problem
    chunks: list[list[str]] = []
    maps: dict[int, dict] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "level":
            chunks.append([])
        elif line.startswith("map "):
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 'map <k> <stmt> <stmt>'")
            maps.setdefault(int(parts[1]), {})[parse_statement(parts[2])] = parse_statement(parts[3])
        else:
            if not chunks:
                raise ValueError(f"line {lineno}: content before the first 'level'")
            chunks[-1].append(line)
    if not chunks:
        raise ValueError("hierarchy has no levels")
    levels = [load_problem("\n".join(c), name=f"level{k}") for k, c in enumerate(chunks)]
    fns = []
    for k in range(len(levels) - 1):
        table = maps.get(k, {})
        missing = [s for s in levels[k].statements() if s not in table]
        if missing:
            raise ValueError(f"level {k} map has no image for {missing[0]}")
        fns.append(AbstractionMap(table, f"map{k}"))
    return Hierarchy(levels, fns, name="file")


def cmd_trace_hald(args) -> int:
    from .problems.fixtures import h1_hierarchy
    if args.hierarchy:
        with open(args.hierarchy) as fh:
            hier = load_hierarchy(fh.read())
    else:
        hier = h1_hierarchy(args.n)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        tw = TraceWriter(out, hald_trace_fields)
        res = run_hald(hier, assert_monotone=True, trace=tw,
                       on_push=tw.push if args.pushes else None)
    finally:
        if args.out:
            out.close()
    if res.goal_weight is None:
        raise NoDerivation()
    _log(f"goal={format_weight(res.goal_weight)} expansions={res.expansions} "
         f"pushes={res.stats.pushes}")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------

def _common(p: argparse.ArgumentParser, default_algo: str) -> None:
    p.add_argument("--algo", default=default_algo)
    p.add_argument("--trace", metavar="PATH", help="write a JSON-lines expansion trace")
    p.add_argument("--assert-monotone", action="store_true",
                   help="fail if a popped priority drops below the previous one")


def _convex_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--image", help="PGM input (default: synthetic circle image)")
    p.add_argument("--cx", type=int, help="reference point x (default: image center)")
    p.add_argument("--cy", type=int)
    p.add_argument("--N", type=int, default=20)
    p.add_argument("--levels", type=int, help="hierarchy levels (default log2 R)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lightderiv", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="solve a built-in problem")
    kinds = solve.add_subparsers(dest="kind", required=True, parser_class=_Parser)

    g = kinds.add_parser("graph", help="shortest path in an edge-list file")
    g.add_argument("input")
    _common(g, "kld")
    g.set_defaults(fn=cmd_solve_graph)

    pa = kinds.add_parser("parse", help="lightest parse under a weighted CNF grammar")
    pa.add_argument("grammar")
    src = pa.add_mutually_exclusive_group(required=True)
    src.add_argument("--tokens", help="whitespace-separated input tokens")
    src.add_argument("--input", help="file of whitespace-separated tokens")
    _common(pa, "kld")
    pa.set_defaults(fn=cmd_solve_parse)

    cx = kinds.add_parser("convex", help="optimal convex object around a point")
    _convex_args(cx)
    cx.add_argument("--R", type=int, default=32)
    cx.add_argument("--sigma", type=float, default=50.0)
    cx.add_argument("--seed", type=int, default=0)
    cx.add_argument("--out", help="PPM overlay with the boundary in red")
    _common(cx, "hald")
    cx.set_defaults(fn=cmd_solve_convex)

    cu = kinds.add_parser("curve", help="most salient curve")
    cu.add_argument("--image", help="PGM input (default: synthetic step-edge image)")
    cu.add_argument("--size", type=int, default=16)
    cu.add_argument("--seed", type=int, default=0)
    cu.add_argument("--sigma", type=float, default=0.0)
    cu.add_argument("--k1", type=int, default=4)
    cu.add_argument("--levels", type=int, help="maximum composition depth L")
    cu.add_argument("--lambda", dest="lam", type=float, default=1.0)
    cu.add_argument("--mu", type=float, default=16.0)
    cu.add_argument("--out", help="PPM overlay with the curve in red")
    _common(cu, "astar-pdb")
    cu.set_defaults(fn=cmd_solve_curve)

    b = sub.add_parser("bench-convex", help="cross-check convex solvers on circle images")
    b.add_argument("--N", type=int, default=20)
    b.add_argument("--levels", type=int, help="hierarchy levels (default log2 R)")
    b.add_argument("--seeds", default="0-9", help="e.g. 0-9 or 1,4,7")
    b.add_argument("--sigma", default="50", help="comma-separated noise levels")
    b.add_argument("--R", default="32", help="comma-separated radii (powers of two)")
    b.add_argument("--algos", default="dp,hald")
    b.add_argument("--out", help="CSV path (default stdout)")
    b.add_argument("--no-timing", action="store_true", help="leave the ms column empty")
    b.add_argument("--assert-monotone", action="store_true")
    b.set_defaults(fn=cmd_bench_convex)

    t = sub.add_parser("trace-hald", help="JSON-lines HA*LD expansion trace")
    t.add_argument("--hierarchy", help="hierarchy file (default: the X/Y/Z example)")
    t.add_argument("--n", type=int, default=2, help="index range of the X/Y/Z example")
    t.add_argument("--out", help="trace path (default stdout)")
    t.add_argument("--no-pushes", dest="pushes", action="store_false",
                   help="omit push records")
    t.set_defaults(fn=cmd_trace_hald)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NoDerivation:
        _log("no derivation of the goal")
        return EXIT_NO_DERIVATION
    except (UsageError, ValueError, OSError, BudgetExceededError) as e:
        _log(f"error: {e}")
        return EXIT_USAGE
    except LightestDerivationError as e:
        _log(f"error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
