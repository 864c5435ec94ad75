"""Optimal convex objects around a reference point.

A hypothesis ``(r_0..r_{N-1})`` gives the boundary radius at angles
``theta_i = 2*pi*i/N``; its energy is ``sum_i D(i, r_i, r_{i+1})`` with
``r_N = r_0``.  Partial objects are the statements
``convex(i, r_0, r_1, r_{i-1}, r_i)``.

Coarser levels replace radii by ranges ``[j*2^k, (j+1)*2^k - 1]``, data
costs by their minimum over the ranges, and the convexity test by "some
integer triple in the ranges is convex".
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from ..abstraction import PatternDatabase
from ..core import INF, Chart, LightestDerivationError, Problem, Rule, Statement
from ..engine import SolutionSet
from ..hald import Hierarchy
from .imaging import GeometryError, G_MAX, Image, gradient_magnitude, polar_segments

GOAL = Statement("goal")
# Slack on the turn test so exactly collinear triples count as convex.
TURN_TOL = 1e-9
MEMORY_ENV = "LIGHTDERIV_DP_MEMORY"
DEFAULT_MEMORY = 2 << 30


class SpecError(ValueError):
    pass


class MemoryBudgetError(LightestDerivationError):
    pass


def convex(i: int, a: int, b: int, c: int, d: int) -> Statement:
    return Statement("convex", (i, a, b, c, d))


def _sines(N: int) -> tuple[float, float]:
    step = 2 * math.pi / N
    return math.sin(step), math.sin(2 * step)


def _turn(c, d, e, s1, s2):
    """Cross product ``(p_i - p_{i-1}) x (p_{i+1} - p_i)`` for radii c, d, e at
    consecutive angles; works elementwise on arrays."""
    return d * e * s1 - c * e * s2 + c * d * s1


def convexity_C(r_prev: int, r: int, r_next: int, i: int, N: int) -> bool:
    """Does the boundary turn left (or go straight) at sample ``i``?

    The angles are evenly spaced so the answer does not depend on ``i``.
    """
    s1, s2 = _sines(N)
    return bool(_turn(r_prev, r, r_next, s1, s2) >= -TURN_TOL)


def convex_mask(N: int, R: int) -> np.ndarray:
    """``mask[c, d, e] = C(c, d, e)`` over radii ``0..R-1``."""
    s1, s2 = _sines(N)
    r = np.arange(R, dtype=np.float64)
    return _turn(r[:, None, None], r[None, :, None], r[None, None, :], s1, s2) >= -TURN_TOL


def range_bounds(k: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.arange(count, dtype=np.float64) * (1 << k)
    return lo, lo + ((1 << k) - 1)


def abstract_mask(N: int, R: int, k: int) -> np.ndarray:
    """``C^k`` over ranges of width ``2^k``.

    The turn value is linear in each radius separately, so its maximum
    over a box of ranges sits at one of the 8 corners.
    """
    s1, s2 = _sines(N)
    lo, hi = range_bounds(k, R >> k)
    out = np.zeros((R >> k,) * 3, dtype=bool)
    for c, d, e in itertools.product((lo, hi), repeat=3):
        out |= _turn(c[:, None, None], d[None, :, None], e[None, None, :], s1, s2) >= -TURN_TOL
    return out


def abstract_C_exhaustive(sp: int, s: int, sn: int, k: int, N: int) -> bool:
    """``C^k`` by trying every integer triple (test oracle)."""
    w = 1 << k
    return any(convexity_C(a, b, c, 0, N)
               for a in range(sp * w, sp * w + w)
               for b in range(s * w, s * w + w)
               for c in range(sn * w, sn * w + w))


def merge_costs(D: np.ndarray) -> np.ndarray:
    """``D^k`` from ``D^{k-1}``: minimum over each 2x2 block of radius pairs."""
    N, R, _ = D.shape
    return D.reshape(N, R // 2, 2, R // 2, 2).min(axis=(2, 4))


@dataclass
class ConvexSpec:
    """Data costs ``D[i, r_i, r_{i+1}]`` for N angles and radii below R."""

    D: np.ndarray
    center: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        self.D = np.asarray(self.D, dtype=np.float64)
        if self.D.ndim != 3 or self.D.shape[1] != self.D.shape[2]:
            raise SpecError(f"D must have shape (N, R, R), got {self.D.shape}")
        if self.N < 3:
            raise SpecError("need at least 3 angles")
        if not np.all(np.isfinite(self.D)) or np.any(self.D < 0):
            raise SpecError("data costs must be finite and non-negative")

    @property
    def N(self) -> int:
        return self.D.shape[0]

    @property
    def R(self) -> int:
        return self.D.shape[1]

    @property
    def thetas(self) -> list[float]:
        return [2 * math.pi * i / self.N for i in range(self.N)]


def convex_data_cost(img: Image, x: tuple[int, int], N: int, R: int) -> np.ndarray:
    """``D[i, r, r']``: sum of ``max(0, 255 - |grad I|)`` over the pixels of
    the segment from ``(theta_i, r)`` to ``(theta_{i+1}, r')``."""
    cx, cy = x
    if cx - R < 0 or cy - R < 0 or cx + R >= img.width or cy + R >= img.height:
        raise GeometryError(f"ball of radius {R} around {x} leaves the "
                            f"{img.width}x{img.height} image")
    cost = np.maximum(0.0, G_MAX - gradient_magnitude(img))
    dx, dy, seg = polar_segments(N, R)
    vals = cost[cy + dy, cx + dx]
    return np.bincount(seg, weights=vals, minlength=N * R * R).reshape(N, R, R)


def spec_from_image(img: Image, N: int, R: int, x: tuple[int, int] | None = None) -> ConvexSpec:
    if x is None:
        x = (img.width // 2, img.height // 2)
    return ConvexSpec(convex_data_cost(img, x, N, R), center=x)


def energy(spec: ConvexSpec, r: Sequence[int]) -> float:
    N = spec.N
    total = 0.0
    for i in range(N):
        total += spec.D[i, r[i], r[(i + 1) % N]]
    return float(total)


def is_convex(r: Sequence[int], N: int | None = None) -> bool:
    N = len(r) if N is None else N
    return all(convexity_C(r[i - 1], r[i], r[(i + 1) % N], i, N) for i in range(N))


def boundary_points(spec: ConvexSpec, r: Sequence[int]) -> list[tuple[int, int]]:
    from .imaging import bresenham, polar_point
    cx, cy = spec.center or (spec.R, spec.R)
    pts = [polar_point(cx, cy, t, ri) for t, ri in zip(spec.thetas, r)]
    out = []
    for i in range(len(pts)):
        out.extend(bresenham(pts[i], pts[(i + 1) % len(pts)]))
    return out


# -- the lightest derivation problems ----------------------------------------

@dataclass
class ConvexLevel:
    """One level of the range hierarchy: ``count`` ranges of width ``2^k``."""

    k: int
    D: np.ndarray
    mask: np.ndarray
    _next: list = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.D.shape[0]

    @property
    def count(self) -> int:
        return self.D.shape[1]

    def successors(self) -> list[list[list[int]]]:
        """``successors()[c][d]``: the e with ``C(c, d, e)``."""
        if self._next is None:
            m = self.mask
            self._next = [[np.flatnonzero(m[c, d]).tolist() for d in range(self.count)]
                          for c in range(self.count)]
        return self._next


def convex_levels(spec: ConvexSpec, L: int) -> list[ConvexLevel]:
    R = spec.R
    if R & (R - 1):
        raise SpecError(f"R must be a power of two, got {R}")
    if not 1 <= L <= max(1, int(math.log2(R))):
        raise SpecError(f"need 1 <= L <= log2(R) = {int(math.log2(R))}, got {L}")
    levels = [ConvexLevel(0, spec.D, convex_mask(spec.N, R))]
    D = spec.D
    for k in range(1, L):
        D = merge_costs(D)
        levels.append(ConvexLevel(k, D, abstract_mask(spec.N, R, k)))
    return levels


def level_problem(lv: ConvexLevel) -> Problem:
    """Partial-object rules at one level as an implicit problem."""
    N, n = lv.N, lv.count
    Dl = lv.D.tolist()
    mask = lv.mask
    axioms = [Rule((), convex(1, a, b, a, b), Dl[0][a][b])
              for a in range(n) for b in range(n)]

    def factory(chart: Chart):
        nxt = lv.successors()

        def expand(s):
            if s is GOAL or s.label != "convex":
                return ()
            i, a, b, c, d = s.args
            if i < N:
                row = Dl[i][d]
                ante = (s,)
                i1 = i + 1
                return [Rule(ante, Statement("convex", (i1, a, b, d, e)), row[e])
                        for e in nxt[c][d]]
            if d == a and mask[c, a, b]:
                return [Rule((s,), GOAL, 0.0)]
            return ()

        return expand

    return Problem(goal=GOAL, axioms=axioms, expander=factory, name=f"convex@{lv.k}")


def convex_problem(spec: ConvexSpec) -> Problem:
    return level_problem(ConvexLevel(0, spec.D, convex_mask(spec.N, spec.R)))


def coarsen(s: Hashable) -> Hashable:
    """Statement one level up: every radius range merges with its sibling."""
    if s == GOAL:
        return GOAL
    i, a, b, c, d = s.args
    return Statement("convex", (i, a >> 1, b >> 1, c >> 1, d >> 1))


def coarsen_to(k: int):
    if k == 0:
        return lambda s: s

    def m(s):
        if s == GOAL:
            return GOAL
        i, a, b, c, d = s.args
        return Statement("convex", (i, a >> k, b >> k, c >> k, d >> k))

    return m


def default_levels(R: int) -> int:
    return max(1, int(math.log2(R)))


def convex_hierarchy(spec: ConvexSpec, L: int | None = None) -> Hierarchy:
    L = default_levels(spec.R) if L is None else L
    levels = convex_levels(spec, L)
    return Hierarchy([level_problem(lv) for lv in levels], [coarsen] * (L - 1),
                     name=f"convex(N={spec.N},R={spec.R},L={L})")


def hypothesis_from_solution(sol: SolutionSet, goal: Hashable = GOAL,
                             rule_of=None) -> list[int]:
    """Radii along the stored lightest derivation of the goal.

    ``rule_of`` maps a stored statement to its level rule (defaults to the
    plain backpointer).
    """
    rule_of = rule_of or (lambda s: sol.backpointers[s])
    s = rule_of(goal).antecedents[0]
    N = s.args[0]
    r = [0] * N
    while True:
        i, _, _, c, d = s.args
        r[i - 1] = c
        r[i % N] = d
        ants = rule_of(s).antecedents
        if not ants:
            return r
        s = ants[0]


# -- exact oracles ------------------------------------------------------------

def _memory_budget() -> int:
    return int(os.environ.get(MEMORY_ENV, DEFAULT_MEMORY))


def _check_budget(nbytes: int, what: str) -> None:
    budget = _memory_budget()
    if nbytes > budget:
        raise MemoryBudgetError(f"{what} needs ~{nbytes} bytes, budget is {budget} "
                                f"(set {MEMORY_ENV} to raise it)")


class _Extender:
    """``new[p, d, e] = min_{c : C(c,d,e)} B[p, c, d] + D_i[d, e]``.

    For each (d, e) the admissible c form a prefix or a suffix of the
    radius range (the turn value is linear in c), so running minima along
    c answer every column with one gather.  Columns that are not intervals
    fall back to a direct masked minimum.
    """

    def __init__(self, mask: np.ndarray):
        R = mask.shape[0]
        pre, suf, other = [], [], []
        for d in range(R):
            for e in range(R):
                col = np.flatnonzero(mask[:, d, e])
                if col.size == 0:
                    continue
                if col[-1] - col[0] + 1 != col.size:
                    other.append((d, e, col))
                elif col[0] == 0:
                    pre.append((d, e, col[-1]))
                elif col[-1] == R - 1:
                    suf.append((d, e, col[0]))
                else:
                    other.append((d, e, col))
        self.R = R
        self.pre = tuple(np.array(x, dtype=np.int64).reshape(-1) for x in zip(*pre)) if pre else None
        self.suf = tuple(np.array(x, dtype=np.int64).reshape(-1) for x in zip(*suf)) if suf else None
        self.other = other

    def __call__(self, B: np.ndarray, Di: np.ndarray) -> np.ndarray:
        P, R = B.shape[0], self.R
        out = np.full((P, R, R), INF)
        if self.pre is not None:
            dd, ee, tt = self.pre
            run = np.minimum.accumulate(B, axis=1)
            out[:, dd, ee] = run[:, tt, dd]
        if self.suf is not None:
            dd, ee, tt = self.suf
            run = np.minimum.accumulate(B[:, ::-1, :], axis=1)[:, ::-1, :]
            out[:, dd, ee] = run[:, tt, dd]
        for d, e, col in self.other:
            out[:, d, e] = B[:, col, d].min(axis=1)
        out += Di[None, :, :]
        return out


def _forward(spec: ConvexSpec, starts: list[tuple[int, int]], keep: bool):
    N, R = spec.N, spec.R
    mask = convex_mask(N, R)
    ext = _Extender(mask)
    P = len(starts)
    B = np.full((P, R, R), INF)
    a_idx = np.array([a for a, _ in starts])
    b_idx = np.array([b for _, b in starts])
    B[np.arange(P), a_idx, b_idx] = spec.D[0, a_idx, b_idx]
    layers = [B] if keep else None
    for i in range(1, N):
        B = ext(B, spec.D[i])
        if keep:
            layers.append(B)
    # close the loop: r_N = r_0 and C(r_{N-1}, r_0, r_1)
    closing = mask[:, a_idx, b_idx].T  # (P, c)
    last = B[np.arange(P), :, a_idx]  # (P, c)
    final = np.where(closing, last, INF)
    return final, layers, mask


def convex_dp(spec: ConvexSpec) -> tuple[float, list[int]]:
    """Exact optimum by dynamic programming over ``B(i, r_0, r_1, r_{i-1}, r_i)``.

    All ``R^2`` starting pairs advance together; the argmin is recovered by
    re-running the winning start alone and tracing back.
    """
    N, R = spec.N, spec.R
    _check_budget(5 * R ** 4 * 8, "convex_dp")
    starts = [(a, b) for a in range(R) for b in range(R)]
    final, _, _ = _forward(spec, starts, keep=False)
    p, c = np.unravel_index(int(np.argmin(final)), final.shape)
    best = float(final[p, c])
    if best == INF:
        raise LightestDerivationError("no convex hypothesis")
    a, b = starts[p]
    _, layers, mask = _forward(spec, [(a, b)], keep=True)
    r = [0] * N
    r[N - 1] = int(c)
    # layers[i-1][0, x, y] is B(i, a, b, x, y); walk back from (r_{N-1}, r_N = r_0)
    x, y = int(c), a
    for i in range(N, 1, -1):
        v = layers[i - 1][0, x, y]
        prev = layers[i - 2][0][:, x]
        hit = np.flatnonzero(mask[:, x, y] & (prev + spec.D[i - 1, x, y] == v))
        x, y = int(hit[0]), x
        r[i - 2] = x
    assert r[0] == a and r[1] == b
    return best, r


def convex_bruteforce(spec: ConvexSpec, limit: int = 10 ** 6) -> tuple[float, list[int]] | None:
    """Minimum energy over every convex hypothesis; ``None`` if there is none."""
    N, R = spec.N, spec.R
    if R ** N > limit:
        raise SpecError(f"R^N = {R ** N} exceeds the brute-force limit {limit}")
    D = spec.D.tolist()
    best, best_r = INF, None
    for r in itertools.product(range(R), repeat=N):
        if not is_convex(r, N):
            continue
        e = D[0][r[0]][r[1]]
        for i in range(1, N):
            e += D[i][r[i]][r[(i + 1) % N]]
        if e < best:
            best, best_r = e, list(r)
    return None if best_r is None else (best, best_r)


# -- pattern databases ---------------------------------------------------------

@dataclass
class ConvexPDB:
    """Lightest abstract context weights at level ``k``.

    ``tables[i]`` is a flat list indexed by ``((a*n + b)*n + c)*n + d`` over
    range ids; unreachable-to-goal entries are ``inf``.
    """

    k: int
    n: int
    tables: list

    def heuristic(self):
        k, n, tables = self.k, self.n, self.tables

        def h(s) -> float:
            if s == GOAL:
                return 0.0
            i, a, b, c, d = s.args
            return tables[i][(((a >> k) * n + (b >> k)) * n + (c >> k)) * n + (d >> k)]

        return h

    def as_pdb(self) -> PatternDatabase:
        table = {GOAL: 0.0}
        n = self.n
        for i in range(1, len(self.tables)):
            t = self.tables[i]
            for idx, w in enumerate(t):
                if w != INF:
                    idx, d = divmod(idx, n)
                    idx, c = divmod(idx, n)
                    a, b = divmod(idx, n)
                    table[convex(i, a, b, c, d)] = w
        return PatternDatabase(table)


def convex_pdb(spec: ConvexSpec, k: int) -> ConvexPDB:
    """Context weights of the level-``k`` problem by backward DP.

    ``ctx(N, a, b, c, a) = 0`` when ``C^k(c, a, b)``; otherwise
    ``ctx(i, a, b, c, d) = min_{e : C^k(c,d,e)} D^k(i, d, e) + ctx(i+1, a, b, d, e)``.
    """
    lv = convex_levels(spec, k + 1)[k]
    N, n = lv.N, lv.count
    _check_budget(4 * n ** 4 * 8 * 2, f"convex_pdb level {k}")
    mask = lv.mask
    ctx = np.full((n * n, n, n), INF)
    for a in range(n):
        for b in range(n):
            ctx[a * n + b, mask[:, a, b], a] = 0.0
    tables: list = [None] * (N + 1)
    tables[N] = ctx.reshape(-1).tolist()
    for i in range(N - 1, 0, -1):
        prev = np.empty_like(ctx)
        Di = lv.D[i]
        step = Di[None, :, :] + ctx  # D(i,d,e) + ctx(i+1, ., d, e)
        for c in range(n):
            prev[:, c, :] = np.where(mask[c][None, :, :], step, INF).min(axis=2)
        ctx = prev
        tables[i] = ctx.reshape(-1).tolist()
    return ConvexPDB(k, n, tables)
