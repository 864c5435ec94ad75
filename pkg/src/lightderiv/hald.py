"""Hierarchical A* lightest derivation over an abstraction hierarchy.

The START1/START2/BASE/UP/DOWN rules are generated by an expander over
generalized statements and run on the ordinary agenda loop, so the same
pop-order assertion and tracing apply.  A rule instance of a level problem
is registered once all its antecedents are expanded; its UP rule fires when
the context of its abstract conclusion is known, and its DOWN rules fire
when the context of its own conclusion is known.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, NamedTuple, Sequence

from .abstraction import base_of, context_problem, is_context
from .core import (
    Chart,
    Derivation,
    General,
    Problem,
    Rule,
    Statement,
    ground,
)
from .engine import RunStats, SolutionSet, kld, run_prioritized

BOTTOM = Statement("bottom")
DERIVATION = "derivation"
CONTEXT = "context"


class GenStatement(NamedTuple):
    level: int
    kind: str
    base: Hashable

    def __str__(self) -> str:
        inner = str(self.base)
        if self.kind == CONTEXT:
            inner = f"context({inner})"
        return f"{inner}@{self.level}"


class _SkipSum(General):
    """``v`` plus every antecedent weight except position ``skip``."""

    __slots__ = ("v", "skip")

    def __init__(self, v: float, skip: int):
        self.v = v
        self.skip = skip

    def __call__(self, ws: Sequence[float]) -> float:
        w = self.v
        skip = self.skip
        for j, x in enumerate(ws):
            if j != skip:
                w += x
        return w

    def __repr__(self) -> str:
        return f"SkipSum({self.v!r}, skip={self.skip})"


class HaldRule(NamedTuple):
    """A rule of the hierarchical system.

    ``h_from`` is the antecedent whose weight is the conclusion's heuristic
    value (-1 for the START rules); ``source`` is the level rule it lifts.
    """

    antecedents: tuple
    conclusion: GenStatement
    weight: float | General
    tag: str | None = None
    signed: bool = False
    h_from: int = -1
    source: Rule | None = None


def _hald_priority(rule: HaldRule, ws: Sequence[float], w: float) -> float:
    i = rule.h_from
    return w if i < 0 else w + ws[i]


@dataclass
class Hierarchy:
    """Levels ``0..m-1`` of additive problems linked by ``maps[k]: level k -> k+1``.

    The top level maps onto the single statement :data:`BOTTOM`.
    """

    levels: list[Problem]
    maps: list[Callable[[Hashable], Hashable]]
    name: str = ""

    def __post_init__(self) -> None:
        if len(self.maps) != len(self.levels) - 1:
            raise ValueError("need exactly one map between consecutive levels")

    @property
    def m(self) -> int:
        return len(self.levels)

    def abs(self, k: int, s: Hashable) -> Hashable:
        return self.maps[k](s) if k < self.m - 1 else BOTTOM

    def goal(self, k: int) -> Hashable:
        return self.levels[k].goal if k < self.m else BOTTOM


@dataclass
class HaldResult:
    solution: SolutionSet
    stats: RunStats
    hierarchy: Hierarchy
    goal_weight: float | None
    derivation: Derivation | None
    level_stats: list[dict] = field(default_factory=list)

    @property
    def no_derivation(self) -> bool:
        return self.goal_weight is None

    @property
    def expansions(self) -> int:
        return self.stats.expansions

    def derivations(self, k: int) -> dict:
        return {g.base: w for g, w in self.solution.weights.items()
                if g.level == k and g.kind == DERIVATION}

    def contexts(self, k: int) -> dict:
        return {g.base: w for g, w in self.solution.weights.items()
                if g.level == k and g.kind == CONTEXT}


class _HaldExpander:
    def __init__(self, hier: Hierarchy, chart: Chart):
        self.hier = hier
        self.chart = chart
        m = hier.m
        self.m = m
        self.goals = [hier.goal(k) for k in range(m)]
        self.level_charts = [Chart() for _ in range(m)]
        self.level_expand = [lv.make_expander(c)
                             for lv, c in zip(hier.levels, self.level_charts)]
        self.ctx: list[dict] = [dict() for _ in range(m + 1)]
        self.stalled: list[dict] = [dict() for _ in range(m)]
        self.complete: list[dict] = [dict() for _ in range(m)]
        for k, lv in enumerate(hier.levels):
            for r in lv.initial_rules():
                self._register(k, r)

    def _up(self, k: int, r: Rule, a: Hashable) -> HaldRule:
        ants = (GenStatement(k + 1, CONTEXT, a),) + tuple(
            GenStatement(k, DERIVATION, x) for x in r.antecedents)
        return HaldRule(ants, GenStatement(k, DERIVATION, r.conclusion),
                        _SkipSum(r.weight, 0), "UP", h_from=0, source=r)

    def _downs(self, k: int, r: Rule) -> list[HaldRule]:
        ants = (GenStatement(k, CONTEXT, r.conclusion),) + tuple(
            GenStatement(k, DERIVATION, x) for x in r.antecedents)
        return [HaldRule(ants, GenStatement(k, CONTEXT, a), _SkipSum(r.weight, 1 + i),
                         "DOWN", h_from=1 + i, source=r)
                for i, a in enumerate(r.antecedents)]

    def _register(self, k: int, r: Rule) -> list[HaldRule]:
        out = []
        c = r.conclusion
        self.complete[k].setdefault(c, []).append(r)
        a = self.hier.abs(k, c)
        if a in self.ctx[k + 1]:
            out.append(self._up(k, r, a))
        else:
            self.stalled[k].setdefault(a, []).append(r)
        if r.antecedents and c in self.ctx[k]:
            out.extend(self._downs(k, r))
        return out

    def __call__(self, g: GenStatement) -> list[HaldRule]:
        k, kind, b = g
        w = self.chart.weights[g]
        out: list[HaldRule] = []
        if kind == DERIVATION:
            if k == self.m:
                return out
            self.level_charts[k].add(b, w)
            if b == self.goals[k]:
                out.append(HaldRule((g,), GenStatement(k, CONTEXT, b),
                                    _SkipSum(0.0, 0), "BASE", h_from=0))
            for r in self.level_expand[k](b):
                out.extend(self._register(k, r))
        else:
            self.ctx[k][b] = w
            if k >= 1:
                for r in self.stalled[k - 1].pop(b, ()):
                    out.append(self._up(k - 1, r, b))
            if k < self.m:
                for r in self.complete[k].get(b, ()):
                    if r.antecedents:
                        out.extend(self._downs(k, r))
        return out


def hald_problem(hier: Hierarchy) -> Problem:
    """The prioritized rule system of HA*LD as an implicit problem."""
    m = hier.m
    starts = [
        HaldRule((), GenStatement(m, DERIVATION, BOTTOM), 0.0, "START1"),
        HaldRule((), GenStatement(m, CONTEXT, BOTTOM), 0.0, "START2"),
    ]
    return Problem(goal=GenStatement(0, DERIVATION, hier.levels[0].goal),
                   axioms=starts, expander=lambda chart: _HaldExpander(hier, chart),
                   name=f"hald({hier.name})")


def hald_trace_fields(g: GenStatement) -> dict:
    return {"level": g.level, "kind": g.kind}


def run_hald(hier: Hierarchy, stop: str = "goal", assert_monotone: bool = True,
             trace=None, on_push=None) -> HaldResult:
    """Run HA*LD; stops as soon as the level-0 goal is expanded."""
    p = hald_problem(hier)
    sol, stats = run_prioritized(p, _hald_priority, stop=stop,
                                 assert_monotone=assert_monotone, trace=trace,
                                 on_push=on_push)
    goal = p.goal
    deriv = _level0_derivation(sol, goal) if goal in sol.weights else None
    per_level = [{"level": k, DERIVATION: 0, CONTEXT: 0} for k in range(hier.m + 1)]
    for g in stats.order:
        per_level[g.level][g.kind] += 1
    return HaldResult(sol, stats, hier, sol.weights.get(goal), deriv, per_level)


def _level0_derivation(sol: SolutionSet, goal: GenStatement) -> Derivation:
    memo: dict = {}
    stack = [(goal, False)]
    while stack:
        g, ready = stack.pop()
        if g in memo:
            continue
        r = sol.backpointers[g].source
        kids = [GenStatement(g.level, DERIVATION, a) for a in r.antecedents]
        if not ready:
            stack.append((g, True))
            stack.extend((c, False) for c in kids if c not in memo)
            continue
        memo[g] = Derivation(r, [memo[c] for c in kids], sol.weights[g])
    return memo[goal]


# -- validation and the 2K oracle -------------------------------------------

def _grounded(p: Problem, budget: int) -> Problem:
    return p if p.grounded else ground(p, budget)


def validate_hierarchy(hier: Hierarchy, budget: int = 200_000) -> list[str]:
    """Report missing or heavier abstract counterparts, non-onto maps,
    non-additive rules and goal mismatches (never raises)."""
    report: list[str] = []
    levels = [_grounded(lv, budget) for lv in hier.levels]
    for k, lv in enumerate(levels):
        for r in lv.rules:
            if isinstance(r.weight, General):
                report.append(f"level {k}: non-additive rule {r}")
    for k in range(hier.m - 1):
        lo, hi = levels[k], levels[k + 1]
        f = hier.maps[k]
        if f(lo.goal) != hi.goal:
            report.append(f"level {k}: abs(goal) = {f(lo.goal)} != {hi.goal}")
        cheapest: dict = {}
        for r in hi.rules:
            key = (r.antecedents, r.conclusion)
            if key not in cheapest or r.weight < cheapest[key]:
                cheapest[key] = r.weight
        for r in lo.rules:
            key = (tuple(f(a) for a in r.antecedents), f(r.conclusion))
            v = cheapest.get(key)
            if v is None:
                report.append(f"level {k}: rule {r} has no abstract counterpart")
            elif v > r.weight:
                report.append(f"level {k}: rule {r} has heavier counterpart "
                              f"(v'={v!r} > v={r.weight!r})")
        if hier.levels[k].grounded and hier.levels[k + 1].grounded:
            image = {f(s) for s in lo.statements()}
            missing = [s for s in hi.statements() if s not in image]
            if missing:
                report.append(f"level {k}: map is not onto; e.g. {missing[0]} has "
                              f"no preimage ({len(missing)} total)")
    return report


@dataclass
class LevelOracle:
    """Closure weights of one level: derivations, contexts, heuristic values."""

    derivations: dict
    contexts: dict
    h: dict


def level_oracles(hier: Hierarchy, budget: int = 200_000) -> list[LevelOracle]:
    """Exact ℓ(C), ℓ(context(C)) and h(C) = ℓ(context(abs C)) at every level."""
    m = hier.m
    derivs, ctxs = [], []
    for lv in hier.levels:
        g = _grounded(lv, budget)
        s, _ = kld(context_problem(g), stop="empty")
        d, c = {}, {}
        for st, w in s.weights.items():
            if isinstance(st, Statement) and is_context(st):
                c[base_of(st)] = w
            else:
                d[st] = w
        derivs.append(d)
        ctxs.append(c)
    out = []
    for k in range(m):
        above = ctxs[k + 1] if k + 1 < m else {BOTTOM: 0.0}
        h = {s: above.get(hier.abs(k, s), math.inf) for s in derivs[k]}
        out.append(LevelOracle(derivs[k], ctxs[k], h))
    return out


def count_K(hier: Hierarchy, budget: int = 200_000, tol: float = 1e-9) -> int:
    """Statements (⊥ included) whose intrinsic priority ℓ + h is at most ℓ(goal_0)."""
    oracles = level_oracles(hier, budget)
    w_star = oracles[0].derivations.get(hier.levels[0].goal)
    if w_star is None:
        raise ValueError("level-0 goal is not derivable")
    bound = w_star + tol * max(1.0, abs(w_star))
    k_count = 1
    for o in oracles:
        k_count += sum(1 for s, w in o.derivations.items() if w + o.h[s] <= bound)
    return k_count


def intrinsic_priority(oracles: list[LevelOracle], g: GenStatement) -> float:
    """p(Φ) = ℓ(Φ) + h(Φ) from closure oracles (test instrumentation)."""
    if g.level == len(oracles):
        return 0.0
    o = oracles[g.level]
    if g.kind == DERIVATION:
        return o.derivations[g.base] + o.h[g.base]
    return o.contexts[g.base] + o.derivations[g.base]


__all__ = [
    "BOTTOM", "CONTEXT", "DERIVATION", "GenStatement", "HaldResult", "HaldRule",
    "Hierarchy", "LevelOracle", "count_K", "hald_problem", "hald_trace_fields",
    "intrinsic_priority", "level_oracles", "run_hald", "validate_hierarchy",
]
