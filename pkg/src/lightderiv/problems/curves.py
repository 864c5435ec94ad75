"""Salient curves: compositions of short straight segments into long,
nearly straight curves.

``curve(ax, ay, bx, by, i)`` is a curve from pixel a to pixel b built as a
full binary tree of depth i over base segments.  Composing two depth-i
curves that meet at b costs ``mu * sin^2`` of the angle at b.  A curve of
depth i yields the goal with weight ``w - lam * 2^i``.

Because that goal rule subtracts, the problem also comes in an *offset*
form where the goal rule weighs ``lam * (2^L - 2^i) >= 0`` and reported
objectives subtract ``lam * 2^L``.  Both forms have the same lightest
derivations.

The pyramid abstraction maps ``curve(a, b, i)`` to the pair of level-i
boxes containing a and b.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..abstraction import AbstractionMap, PatternDatabase
from ..core import INF, Chart, Problem, Rule, Statement, ground
from .imaging import G_MAX, Image, SplitMix64, bresenham, gradient

GOAL = Statement("goal")
SIGNED, OFFSET = "signed", "offset"
# Relative slack taken off abstract shape bounds to absorb rounding.
BOUND_SLACK = 1e-9


class CurveSpecError(ValueError):
    pass


def curve(ax: int, ay: int, bx: int, by: int, i: int) -> Statement:
    return Statement("curve", (ax, ay, bx, by, i))


def seg_cost(img: Image, a: tuple[int, int], b: tuple[int, int],
             k1: float | None = None, k2: float | None = None,
             grad: tuple[np.ndarray, np.ndarray] | None = None) -> float:
    """Sum over the pixels of ab of ``1 - m * |sin(phi)|``.

    ``m`` is the gradient magnitude over 255, capped at 1; ``phi`` is the
    angle between the gradient and the segment.  Zero only when every pixel
    has a saturated gradient perpendicular to ab.
    """
    dx, dy = b[0] - a[0], b[1] - a[1]
    d2 = dx * dx + dy * dy
    if d2 == 0:
        raise CurveSpecError("segment endpoints coincide")
    if k1 is not None and d2 < k1 * k1:
        raise CurveSpecError(f"segment {a}-{b} shorter than k1={k1}")
    if k2 is not None and d2 > k2 * k2:
        raise CurveSpecError(f"segment {a}-{b} longer than k2={k2}")
    gx, gy = grad if grad is not None else gradient(img)
    length = math.sqrt(d2)
    ux, uy = dx / length, dy / length
    total = 0.0
    for x, y in bresenham(a, b):
        g1, g2 = float(gx[y, x]), float(gy[y, x])
        mag = math.hypot(g1, g2)
        if mag == 0.0:
            total += 1.0
            continue
        # m * |sin phi| = min(1, |g|/255) * |g x u| / |g|
        total += 1.0 - min(1.0, mag / G_MAX) * abs(g1 * uy - g2 * ux) / mag
    return total


def shape_cost(a, b, c, mu: float) -> float:
    """``mu * sin^2(t)`` for the angle t at b between ba and bc; t >= pi/2."""
    ux, uy = a[0] - b[0], a[1] - b[1]
    vx, vy = c[0] - b[0], c[1] - b[1]
    if ux * vx + uy * vy > 0:
        raise CurveSpecError(f"angle at {b} is below pi/2")
    cross = ux * vy - uy * vx
    return mu * (cross * cross) / ((ux * ux + uy * uy) * (vx * vx + vy * vy))


@dataclass
class CurveSpec:
    """Curve model over an image; ``k2`` is always ``2 * k1``."""

    image: Image
    k1: int = 4
    L: int | None = None
    lam: float = 1.0
    mu: float = 16.0

    def __post_init__(self) -> None:
        if self.k1 < 1:
            raise CurveSpecError("k1 must be positive")
        if max(self.image.width, self.image.height) <= self.k1:
            raise CurveSpecError(f"image too small for k1={self.k1}")
        if self.L is None:
            diag = math.hypot(self.image.width, self.image.height)
            self.L = max(0, math.ceil(math.log2(max(1.0, diag / self.k2))))
        if self.L < 0:
            raise CurveSpecError("L must be non-negative")

    @property
    def k2(self) -> int:
        return 2 * self.k1

    @property
    def width(self) -> int:
        return self.image.width

    @property
    def height(self) -> int:
        return self.image.height

    def goal_weight(self, i: int, form: str = SIGNED) -> float:
        if form == SIGNED:
            return -self.lam * 2 ** i
        if form == OFFSET:
            return self.lam * (2 ** self.L - 2 ** i)
        raise ValueError(f"unknown form {form!r}")

    def offset(self, form: str) -> float:
        return self.lam * 2 ** self.L if form == OFFSET else 0.0

    @cached_property
    def base_offsets(self) -> list[tuple[int, int]]:
        k1s, k2s = self.k1 ** 2, self.k2 ** 2
        r = self.k2
        return [(dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1)
                if k1s <= dx * dx + dy * dy <= k2s]

    @cached_property
    def segs(self) -> dict:
        """``{(a, b): seg(a, b)}`` for every base pair, computed once."""
        grad = gradient(self.image)
        w, h = self.width, self.height
        out = {}
        for y in range(h):
            for x in range(w):
                for dx, dy in self.base_offsets:
                    bx, by = x + dx, y + dy
                    if 0 <= bx < w and 0 <= by < h:
                        if ((bx, by), (x, y)) in out:
                            out[((x, y), (bx, by))] = out[((bx, by), (x, y))]
                        else:
                            out[((x, y), (bx, by))] = seg_cost(self.image, (x, y), (bx, by),
                                                               grad=grad)
        return out


class _EndpointIndex:
    """Expanded curves by (start, depth) and by (end, depth)."""

    def __init__(self) -> None:
        self.starting: dict = {}
        self.ending: dict = {}

    def add(self, s: Statement) -> None:
        ax, ay, bx, by, i = s.args
        self.starting.setdefault((ax, ay, i), []).append(s)
        self.ending.setdefault((bx, by, i), []).append(s)


def curve_problem(spec: CurveSpec, form: str = SIGNED) -> Problem:
    """Base segments, equal-depth composition with a turn of at least pi/2,
    and a goal rule from every curve."""
    L, mu = spec.L, spec.mu
    goal_w = [spec.goal_weight(i, form) for i in range(L + 1)]
    signed = form == SIGNED
    axioms = [Rule((), curve(a[0], a[1], b[0], b[1], 0), w, "seg")
              for (a, b), w in spec.segs.items()]

    def factory(chart: Chart):
        idx = _EndpointIndex()

        def expand(s):
            if s == GOAL:
                return ()
            ax, ay, bx, by, i = s.args
            out = [Rule((s,), GOAL, goal_w[i], "goal", signed)]
            if i < L:
                i1 = i + 1
                ux, uy = ax - bx, ay - by
                nu = ux * ux + uy * uy
                for t in idx.starting.get((bx, by, i), ()):
                    cx, cy = t.args[2], t.args[3]
                    vx, vy = cx - bx, cy - by
                    if ux * vx + uy * vy <= 0:
                        cr = ux * vy - uy * vx
                        out.append(Rule((s, t), Statement("curve", (ax, ay, cx, cy, i1)),
                                        mu * (cr * cr) / (nu * (vx * vx + vy * vy))))
                vx, vy = bx - ax, by - ay
                nv = vx * vx + vy * vy
                for t in idx.ending.get((ax, ay, i), ()):
                    px, py = t.args[0], t.args[1]
                    ux, uy = px - ax, py - ay
                    if ux * vx + uy * vy <= 0:
                        cr = ux * vy - uy * vx
                        out.append(Rule((t, s), Statement("curve", (px, py, bx, by, i1)),
                                        mu * (cr * cr) / ((ux * ux + uy * uy) * nv)))
            idx.add(s)
            return out

        return expand

    return Problem(goal=GOAL, axioms=axioms, expander=factory,
                   name=f"curves[{form}]", goal_offset=spec.offset(form))


# -- pyramid abstraction --------------------------------------------------------

def pyramid_map(s):
    """``curve(a, b, i) -> curve(f_i(a), f_i(b), i)`` with ``f_i`` the
    ``2^i``-pixel box containing a pixel."""
    if s == GOAL:
        return GOAL
    ax, ay, bx, by, i = s.args
    return Statement("curve", (ax >> i, ay >> i, bx >> i, by >> i, i))


def _arc(lo_x, hi_x, lo_y, hi_y):
    """Directions of the nonzero vectors in a box, as (start, width) arcs.

    Boxes touching the origin get the full circle (width 2*pi), which only
    loosens the bound.
    """
    touch = (lo_x <= 0) & (hi_x >= 0) & (lo_y <= 0) & (hi_y >= 0)
    corners = [np.arctan2(y, x) for x in (lo_x, hi_x) for y in (lo_y, hi_y)]
    ref = corners[0]
    rel = [np.mod(c - ref + np.pi, 2 * np.pi) - np.pi for c in corners]
    lo = np.minimum.reduce(rel)
    hi = np.maximum.reduce(rel)
    start = ref + lo
    width = np.where(touch, 2 * np.pi, hi - lo)
    return start, width


def _arc_gap(s1, w1, s2, w2):
    """Smallest angular distance between two arcs (0 if they overlap)."""
    def inside(theta, s, w):
        return np.mod(theta - s, 2 * np.pi) <= w

    def cdist(x, y):
        d = np.mod(x - y, 2 * np.pi)
        return np.minimum(d, 2 * np.pi - d)

    e1 = s1 + w1
    e2 = s2 + w2
    overlap = (inside(s1, s2, w2) | inside(e1, s2, w2) | inside(s2, s1, w1)
               | inside(e2, s1, w1) | (w1 >= 2 * np.pi) | (w2 >= 2 * np.pi))
    gap = np.minimum.reduce([cdist(s1, e2), cdist(e1, s2), cdist(s1, s2), cdist(e1, e2)])
    return np.where(overlap, 0.0, gap)


class ShapeBounds:
    """Lower bounds on the composition cost between level-i boxes.

    ``table(i)[dA, dC]`` bounds ``shape(a, b, c)`` over pixels a in A, b in B,
    c in C where ``dA = A - B`` and ``dC = C - B`` in box units, flattened
    as ``(dy + g - 1) * (2g - 1) + (dx + g - 1)`` for a ``g``-box-wide grid.
    Entries are ``inf`` when no pixel triple turns by at least pi/2.
    """

    def __init__(self, width: int, height: int, mu: float):
        self.mu = mu
        self._tables: dict = {}
        self.extent = max(width, height)

    def grid(self, i: int) -> int:
        return -(-self.extent // (1 << i))

    def table(self, i: int) -> np.ndarray:
        t = self._tables.get(i)
        if t is None:
            t = self._tables[i] = self._build(i)
        return t

    def _build(self, i: int) -> np.ndarray:
        g = self.grid(i)
        s = 1 << i
        d = np.arange(-(g - 1), g)
        dy, dx = np.meshgrid(d, d, indexing="ij")
        dx, dy = dx.reshape(-1), dy.reshape(-1)
        # difference boxes A - B in pixels
        lx, hx = dx * s - (s - 1), dx * s + (s - 1)
        ly, hy = dy * s - (s - 1), dy * s + (s - 1)
        st, wd = _arc(lx.astype(float), hx.astype(float), ly.astype(float), hy.astype(float))
        # t is the angle between u in U and v in V; it is closest to pi when
        # u is closest to -v, i.e. the gap between U and V + pi.
        gap = _arc_gap(st[:, None], wd[:, None], st[None, :] + np.pi, wd[None, :])
        if i == 0:
            # pixel boxes: exact cost so level-0 bounds equal the concrete rule
            ux, uy = dx[:, None], dy[:, None]
            vx, vy = dx[None, :], dy[None, :]
            nn = (ux * ux + uy * uy) * (vx * vx + vy * vy)
            cr = ux * vy - uy * vx
            with np.errstate(divide="ignore", invalid="ignore"):
                exact = self.mu * (cr * cr) / nn
            feasible = (ux * vx + uy * vy <= 0) & (nn > 0)
            return np.where(feasible, exact, INF)
        bound = self.mu * np.sin(np.minimum(gap, np.pi / 2)) ** 2
        bound = np.maximum(0.0, bound * (1 - BOUND_SLACK) - BOUND_SLACK)
        return np.where(gap <= np.pi / 2 + 1e-9, bound, INF)

    def index(self, i: int, dx: int, dy: int) -> int:
        g = self.grid(i)
        return (dy + g - 1) * (2 * g - 1) + (dx + g - 1)


def pyramid_problem(spec: CurveSpec, form: str = OFFSET,
                    bounds: ShapeBounds | None = None) -> Problem:
    """The abstract curve problem over pyramid boxes (implicit).

    Level-0 boxes are pixels, so the abstract base segments are the
    concrete ones.
    """
    L = spec.L
    bounds = bounds or ShapeBounds(spec.width, spec.height, spec.mu)
    tables = [bounds.table(i).tolist() for i in range(L)]
    grids = [bounds.grid(i) for i in range(L)]
    goal_w = [spec.goal_weight(i, form) for i in range(L + 1)]
    signed = form == SIGNED
    axioms = [Rule((), curve(a[0], a[1], b[0], b[1], 0), w, "seg")
              for (a, b), w in spec.segs.items()]

    def factory(chart: Chart):
        idx = _EndpointIndex()

        def expand(s):
            if s == GOAL:
                return ()
            ax, ay, bx, by, i = s.args
            out = [Rule((s,), GOAL, goal_w[i], "goal", signed)]
            if i < L:
                tab, g = tables[i], grids[i]
                w2 = 2 * g - 1
                i1 = i + 1
                da = (ay - by + g - 1) * w2 + (ax - bx + g - 1)
                row = tab[da]
                for t in idx.starting.get((bx, by, i), ()):
                    cx, cy = t.args[2], t.args[3]
                    v = row[(cy - by + g - 1) * w2 + (cx - bx + g - 1)]
                    if v != INF:
                        out.append(Rule((s, t), Statement(
                            "curve", (ax >> 1, ay >> 1, cx >> 1, cy >> 1, i1)), v))
                dc = (by - ay + g - 1) * w2 + (bx - ax + g - 1)
                for t in idx.ending.get((ax, ay, i), ()):
                    px, py = t.args[0], t.args[1]
                    v = tab[(py - ay + g - 1) * w2 + (px - ax + g - 1)][dc]
                    if v != INF:
                        out.append(Rule((t, s), Statement(
                            "curve", (px >> 1, py >> 1, bx >> 1, by >> 1, i1)), v))
            idx.add(s)
            return out

        return expand

    return Problem(goal=GOAL, axioms=axioms, expander=factory,
                   name=f"pyramid[{form}]", goal_offset=spec.offset(form))


def curve_pyramid(spec: CurveSpec, form: str = OFFSET,
                  statement_budget: int = 2_000_000) -> tuple[AbstractionMap, Problem]:
    """The pyramid map and the grounded abstract problem."""
    return (AbstractionMap(pyramid_map, "pyramid"),
            ground(pyramid_problem(spec, form), statement_budget))


# -- dense oracles ----------------------------------------------------------------

@dataclass
class _Grid:
    """Dense (box, box) tables at one depth; boxes indexed ``y * g + x``."""

    g: int
    xs: np.ndarray = field(init=False)
    ys: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.ys, self.xs = np.divmod(np.arange(self.g * self.g), self.g)


def _base_table(spec: CurveSpec, g: int) -> np.ndarray:
    W = np.full((g * g, g * g), INF)
    for ((ax, ay), (bx, by)), w in spec.segs.items():
        W[ay * g + ax, by * g + bx] = w
    return W


def _compose_step(W: np.ndarray, grid: _Grid, tab: np.ndarray):
    """``T[A, C] = min_B (v(A, B, C) + W[A, B]) + W[B, C]`` over one depth."""
    g = grid.g
    n = g * g
    w2 = 2 * g - 1
    T = np.full((n, n), INF)
    for b in range(n):
        left = W[:, b]
        right = W[b, :]
        la = np.flatnonzero(left < INF)
        rc = np.flatnonzero(right < INF)
        if la.size == 0 or rc.size == 0:
            continue
        bx, by = grid.xs[b], grid.ys[b]
        da = (grid.ys[la] - by + g - 1) * w2 + (grid.xs[la] - bx + g - 1)
        dc = (grid.ys[rc] - by + g - 1) * w2 + (grid.xs[rc] - bx + g - 1)
        v = tab[da[:, None], dc[None, :]]
        cand = (v + left[la][:, None]) + right[rc][None, :]
        sub = T[np.ix_(la, rc)]
        T[np.ix_(la, rc)] = np.minimum(sub, cand)
    return T


def _coarsen_pairs(T: np.ndarray, g: int) -> np.ndarray:
    """Min over the 2x2 children of both boxes of a pair."""
    h = -(-g // 2)
    pad = 2 * h
    if pad != g:
        full = np.full((pad, pad, pad, pad), INF)
        full[:g, :g, :g, :g] = T.reshape(g, g, g, g)
    else:
        full = T.reshape(g, g, g, g)
    return full.reshape(h, 2, h, 2, h, 2, h, 2).min(axis=(1, 3, 5, 7)).reshape(h * h, h * h)


def _square(spec: CurveSpec) -> int:
    return max(spec.width, spec.height)


def curve_dp(spec: CurveSpec) -> list[np.ndarray]:
    """Exact ``l(curve(a, b, i))`` for all pixel pairs and depths 0..L.

    ``out[i][a, b]`` with pixels indexed ``y * side + x`` where ``side`` is
    the larger image dimension; ``inf`` marks underivable pairs.
    """
    side = _square(spec)
    grid = _Grid(side)
    tab = ShapeBounds(side, side, spec.mu).table(0)
    W = _base_table(spec, side)
    out = [W]
    for _ in range(spec.L):
        W = _compose_step(W, grid, tab)
        out.append(W)
    return out


def curve_objective(spec: CurveSpec, tables: list[np.ndarray]) -> float:
    """Lightest goal weight in the signed form."""
    return min(float(W.min()) + spec.goal_weight(i) for i, W in enumerate(tables))


@dataclass
class CurvePDB:
    """Abstract context weights ``ctx[i][A, B]`` per depth, boxes at level i."""

    spec: CurveSpec
    form: str
    ctx: list[np.ndarray]
    grids: list[int]

    def heuristic(self, form: str | None = None):
        """``h(curve(a,b,i)) = ctx[i][f_i(a), f_i(b)]``, shifted to ``form``."""
        shift = self.spec.offset(self.form) - self.spec.offset(form or self.form)
        rows = [c.tolist() for c in self.ctx]
        grids = self.grids

        def h(s) -> float:
            if s == GOAL:
                return 0.0
            ax, ay, bx, by, i = s.args
            g = grids[i]
            v = rows[i][(ay >> i) * g + (ax >> i)][(by >> i) * g + (bx >> i)]
            return v - shift if shift else v

        return h

    def as_pdb(self) -> PatternDatabase:
        table = {GOAL: 0.0}
        for i, c in enumerate(self.ctx):
            g = self.grids[i]
            for A, B in zip(*np.nonzero(c < INF)):
                ay, ax = divmod(int(A), g)
                by, bx = divmod(int(B), g)
                table[curve(ax, ay, bx, by, i)] = float(c[A, B])
        return PatternDatabase(table)


def curve_pdb(spec: CurveSpec, form: str = OFFSET) -> CurvePDB:
    """Pattern database of the pyramid problem by dense forward/backward DP.

    Forward: lightest abstract curves per depth.  Backward: a curve's
    context is the cheaper of its own goal rule and every composition it
    takes part in, plus the partner's weight and the conclusion's context.
    """
    side = _square(spec)
    L = spec.L
    bounds = ShapeBounds(side, side, spec.mu)
    grids = [bounds.grid(i) for i in range(L + 1)]
    W = [_base_table(spec, side)]
    for i in range(L):
        T = _compose_step(W[i], _Grid(grids[i]), bounds.table(i))
        W.append(_coarsen_pairs(T, grids[i]))
    ctx: list = [None] * (L + 1)
    ctx[L] = np.where(W[L] < INF, spec.goal_weight(L, form), INF)
    for i in range(L - 1, -1, -1):
        g = grids[i]
        grid = _Grid(g)
        n = g * g
        w2 = 2 * g - 1
        tab = bounds.table(i)
        up = ctx[i + 1]
        parent = (grid.ys >> 1) * grids[i + 1] + (grid.xs >> 1)
        Wi = W[i]
        C = np.where(Wi < INF, spec.goal_weight(i, form), INF)
        for b in range(n):
            left, right = Wi[:, b], Wi[b, :]
            la = np.flatnonzero(left < INF)
            rc = np.flatnonzero(right < INF)
            if la.size == 0 or rc.size == 0:
                continue
            bx, by = grid.xs[b], grid.ys[b]
            da = (grid.ys[la] - by + g - 1) * w2 + (grid.xs[la] - bx + g - 1)
            dc = (grid.ys[rc] - by + g - 1) * w2 + (grid.xs[rc] - bx + g - 1)
            v = tab[da[:, None], dc[None, :]]
            base = v + up[parent[la][:, None], parent[rc][None, :]]
            # context of the left curve (A, b): partner is (b, C)
            as_left = (base + right[rc][None, :]).min(axis=1)
            C[la, b] = np.minimum(C[la, b], as_left)
            # context of the right curve (b, C): partner is (A, b)
            as_right = (base + left[la][:, None]).min(axis=0)
            C[b, rc] = np.minimum(C[b, rc], as_right)
        ctx[i] = C
    return CurvePDB(spec, form, ctx, grids)


@dataclass
class CurveMonotoneReport:
    checked: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def check_curve_monotone(spec: CurveSpec, pdb: CurvePDB, tables: list[np.ndarray] | None = None,
                         form: str = OFFSET, tol: float = 1e-9, limit: int = 20) -> CurveMonotoneReport:
    """Exhaustive ``w_j + h(A_j) <= g(w) + h(C)`` over every derivable rule
    instance of the concrete problem, using exact lightest weights."""
    tables = tables if tables is not None else curve_dp(spec)
    side = _square(spec)
    grid = _Grid(side)
    tab = ShapeBounds(side, side, spec.mu).table(0)
    shift = spec.offset(pdb.form) - spec.offset(form)
    hs = []
    for i in range(spec.L + 1):
        g = pdb.grids[i]
        box = (grid.ys >> i) * g + (grid.xs >> i)
        hs.append(pdb.ctx[i][box[:, None], box[None, :]] - shift)
    viol: list = []
    checked = 0

    def note(kind, i, lhs, rhs, where):
        bad = lhs - rhs > tol * np.maximum(1.0, np.abs(rhs))
        if np.any(bad):
            for k in np.flatnonzero(bad)[: max(0, limit - len(viol))]:
                viol.append((kind, i, where(k), float(lhs.flat[k]), float(rhs.flat[k])))
        return int(bad.sum())

    for i, W in enumerate(tables):
        live = W < INF
        lhs = W[live] + hs[i][live]
        rhs = (spec.goal_weight(i, form) + W[live]) + 0.0
        checked += int(live.sum())
        note("goal", i, lhs, rhs, lambda k: None)
    w2 = 2 * side - 1
    for i in range(spec.L):
        W, Wn, h, hn = tables[i], tables[i + 1], hs[i], hs[i + 1]
        for b in range(side * side):
            left, right = W[:, b], W[b, :]
            la = np.flatnonzero(left < INF)
            rc = np.flatnonzero(right < INF)
            if la.size == 0 or rc.size == 0:
                continue
            bx, by = grid.xs[b], grid.ys[b]
            da = (grid.ys[la] - by + side - 1) * w2 + (grid.xs[la] - bx + side - 1)
            dc = (grid.ys[rc] - by + side - 1) * w2 + (grid.xs[rc] - bx + side - 1)
            v = tab[da[:, None], dc[None, :]]
            ok = v < INF
            rhs = (v + left[la][:, None]) + right[rc][None, :] + hn[np.ix_(la, rc)]
            l1 = np.broadcast_to((left[la] + h[la, b])[:, None], rhs.shape)
            l2 = np.broadcast_to((right[rc] + h[b, rc])[None, :], rhs.shape)
            checked += 2 * int(ok.sum())
            where = (lambda k, la=la, rc=rc, b=b:
                     (int(la[k // rc.size]), b, int(rc[k % rc.size])))
            note("compose-left", i, np.where(ok, l1, -INF), np.where(ok, rhs, INF), where)
            note("compose-right", i, np.where(ok, l2, -INF), np.where(ok, rhs, INF), where)
    return CurveMonotoneReport(checked, viol)


# -- synthetic data ----------------------------------------------------------------

def gen_line_image(size: int = 16, seed: int = 0, sigma: float = 0.0,
                   low: int = 0, high: int = 255) -> Image:
    """A straight step edge through the image at a seeded angle and offset."""
    rng = SplitMix64(seed)
    theta = rng.uniform() * math.pi
    off = (rng.uniform() - 0.5) * size / 4
    c = (size - 1) / 2
    ys, xs = np.mgrid[0:size, 0:size]
    side = (xs - c) * math.cos(theta) + (ys - c) * math.sin(theta) > off
    base = np.where(side, float(high), float(low))
    if sigma > 0:
        base = base + sigma * SplitMix64(seed ^ 0x2545F491).gaussians(size * size).reshape(size, size)
    return Image(np.clip(np.rint(base), 0, 255).astype(np.uint8))


def curve_from_solution(sol, goal=GOAL) -> list[tuple[int, int]]:
    """Polyline of the stored lightest goal derivation (pixel vertices)."""
    top = sol.backpointers[goal].antecedents[0]
    pts: list[tuple[int, int]] = []
    stack = [top]
    while stack:
        s = stack.pop()
        ants = sol.backpointers[s].antecedents
        if not ants:
            ax, ay, bx, by, _ = s.args
            if not pts:
                pts.append((ax, ay))
            pts.append((bx, by))
        else:
            stack.extend(reversed(ants))
    return pts


def curve_pixels(pts: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    for a, b in zip(pts, pts[1:]):
        out.extend(bresenham(a, b))
    return out
