"""Prioritized rule execution and the exact solvers built on it.

``run_prioritized`` is the agenda loop: pop the lowest priority assignment,
drop it if its statement already has a weight, otherwise record it and push
every one-step consequence.  KLD and A*LD differ only in the priority they
give a conclusion.
"""
from __future__ import annotations

import graphlib
import json
import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import IO, Callable, Hashable, Sequence

from .core import (
    INF,
    Chart,
    Derivation,
    General,
    LightestDerivationError,
    Problem,
    Rule,
    apply_weight,
)

Prioritizer = Callable[[Rule, Sequence[float], float], float]
Heuristic = Callable[[Hashable], float]

# Relative slack for the pop-order assertion; priorities are float sums.
MONOTONE_TOL = 1e-9


class MonotonicityViolation(LightestDerivationError):
    def __init__(self, statement, priority: float, previous: float, seq: int):
        super().__init__(
            f"pop #{seq} of {statement} at priority {priority!r} is below "
            f"the previous pop priority {previous!r}"
        )
        self.statement = statement
        self.priority = priority
        self.previous = previous


class CyclicProblemError(LightestDerivationError):
    def __init__(self, cycle):
        super().__init__("rules are cyclic: " + " -> ".join(map(str, cycle)))
        self.cycle = cycle


class NotDerivedError(LightestDerivationError, KeyError):
    pass


@dataclass
class RunStats:
    expansions: int = 0
    discarded: int = 0
    pushes: int = 0
    peak_agenda: int = 0
    order: list = field(default_factory=list)
    priorities: list = field(default_factory=list)

    def index_of(self, s) -> int:
        return self.order.index(s)


@dataclass
class SolutionSet:
    """Weights and backpointers of the expanded statements.

    ``backpointers[s]`` is the rule instance whose firing produced the
    stored weight; antecedents are read off the rule.
    """

    weights: dict
    backpointers: dict
    goal: Hashable
    goal_weight: float | None = None

    @property
    def no_derivation(self) -> bool:
        return self.goal_weight is None

    @property
    def entries(self) -> dict:
        return {s: (w, self.backpointers[s]) for s, w in self.weights.items()}

    def __contains__(self, s) -> bool:
        return s in self.weights

    def __getitem__(self, s) -> float:
        return self.weights[s]

    def get(self, s, default=None):
        return self.weights.get(s, default)

    def __len__(self) -> int:
        return len(self.weights)


class TraceWriter:
    """JSON-lines trace: one ``expand`` record per statement entering S,
    optionally ``push`` records for agenda insertions."""

    def __init__(self, fh: IO[str], extra: Callable[[Hashable], dict] | None = None,
                 describe: Callable[[Hashable], str] = str):
        self.fh = fh
        self.extra = extra
        self.describe = describe

    def __call__(self, seq: int, statement, weight: float, priority: float) -> None:
        self._write({"event": "expand", "seq": seq}, statement, weight, priority)

    def push(self, statement, weight: float, priority: float) -> None:
        """Record an agenda insertion; pass as ``on_push``."""
        self._write({"event": "push"}, statement, weight, priority)

    def _write(self, rec: dict, statement, weight: float, priority: float) -> None:
        rec.update(statement=self.describe(statement), weight=weight, priority=priority)
        if self.extra is not None:
            rec.update(self.extra(statement))
        self.fh.write(json.dumps(rec) + "\n")


def kld_priority(rule: Rule, ws: Sequence[float], w: float) -> float:
    return w


def run_prioritized(
    p: Problem,
    prioritizer: Prioritizer,
    stop: str = "goal",
    assert_monotone: bool = True,
    trace: Callable[[int, Hashable, float, float], None] | None = None,
    max_expansions: int | None = None,
    on_push: Callable[[Hashable, float, float], None] | None = None,
) -> tuple[SolutionSet, RunStats]:
    """Execute ``p``'s rules with the given priorities.

    ``stop`` is ``"goal"`` (stop right after the goal is expanded) or
    ``"empty"`` (run until the agenda is exhausted).  Agenda ties are broken
    FIFO by push order.  A prioritizer may return ``inf`` to drop a push.
    ``on_push(conclusion, weight, priority)`` sees every agenda insertion.
    """
    if stop not in ("goal", "empty"):
        raise ValueError(f"unknown stop condition {stop!r}")
    stop_on_goal = stop == "goal"
    goal = p.goal
    chart = Chart()
    weights = chart.weights
    back: dict = {}
    stats = RunStats()
    order, prios = stats.order, stats.priorities
    expand = p.make_expander(chart)

    heap: list = []
    seq = 0
    for r in p.initial_rules():
        w = apply_weight(r.weight, ())
        pr = prioritizer(r, (), w)
        if pr == INF:
            continue
        if on_push is not None:
            on_push(r.conclusion, w, pr)
        heappush(heap, (pr, seq, r.conclusion, w, r))
        seq += 1
    pushes = seq
    peak = len(heap)
    discarded = 0
    last = -INF
    pops = 0

    while heap:
        pr, _, b, w, rule = heappop(heap)
        pops += 1
        if assert_monotone and pr < last and last - pr > MONOTONE_TOL * max(1.0, abs(last)):
            raise MonotonicityViolation(b, pr, last, pops)
        if pr > last:
            last = pr
        if b in weights:
            discarded += 1
            continue
        chart.add(b, w)
        back[b] = rule
        order.append(b)
        prios.append(pr)
        if trace is not None:
            trace(len(order) - 1, b, w, pr)
        if stop_on_goal and b == goal:
            break
        if max_expansions is not None and len(order) >= max_expansions:
            break
        for r in expand(b):
            g = r.weight
            ws = [weights[a] for a in r.antecedents]
            if isinstance(g, General):
                wc = g(ws)
            else:
                wc = g
                for x in ws:
                    wc += x
            prc = prioritizer(r, ws, wc)
            if prc == INF:
                continue
            if on_push is not None:
                on_push(r.conclusion, wc, prc)
            heappush(heap, (prc, seq, r.conclusion, wc, r))
            seq += 1
        if len(heap) > peak:
            peak = len(heap)
    pushes = seq

    stats.expansions = len(order)
    stats.discarded = discarded
    stats.pushes = pushes
    stats.peak_agenda = peak
    return SolutionSet(weights, back, goal, weights.get(goal)), stats


def kld(p: Problem, stop: str = "goal", assert_monotone: bool = True,
        trace=None) -> tuple[SolutionSet, RunStats]:
    """Knuth's lightest derivation: priority = conclusion weight."""
    return run_prioritized(p, kld_priority, stop=stop,
                           assert_monotone=assert_monotone, trace=trace)


def astar_ld(p: Problem, h: Heuristic, stop: str = "goal",
             assert_monotone: bool = True, trace=None) -> tuple[SolutionSet, RunStats]:
    """A* lightest derivation: priority = conclusion weight + h(conclusion).

    Conclusions with ``h = inf`` are never pushed.
    """
    if not math.isfinite(h(p.goal)):
        raise ValueError("heuristic must be finite on the goal")

    def prio(rule: Rule, ws, w: float) -> float:
        return w + h(rule.conclusion)

    return run_prioritized(p, prio, stop=stop, assert_monotone=assert_monotone,
                           trace=trace)


def dp_acyclic(p: Problem) -> SolutionSet:
    """Lightest derivations by dynamic programming over a topological order."""
    if not p.grounded:
        raise ValueError("dp_acyclic needs a grounded problem")
    by_concl: dict = {}
    sorter: graphlib.TopologicalSorter = graphlib.TopologicalSorter()
    for r in p.rules:
        by_concl.setdefault(r.conclusion, []).append(r)
        sorter.add(r.conclusion, *r.antecedents)
    try:
        order = list(sorter.static_order())
    except graphlib.CycleError as e:
        raise CyclicProblemError(e.args[1]) from None

    weights: dict = {}
    back: dict = {}
    for s in order:
        best, best_rule = INF, None
        for r in by_concl.get(s, ()):
            ws = []
            for a in r.antecedents:
                wa = weights.get(a)
                if wa is None:
                    break
                ws.append(wa)
            else:
                w = apply_weight(r.weight, ws)
                if w < best:
                    best, best_rule = w, r
        if best_rule is not None:
            weights[s] = best
            back[s] = best_rule
    return SolutionSet(weights, back, p.goal, weights.get(p.goal))


def get_derivation(s: SolutionSet, b: Hashable) -> Derivation:
    """Rebuild the derivation of ``b`` recorded by the backpointers."""
    if b not in s.weights:
        raise NotDerivedError(f"{b} has no entry in the solution set")
    memo: dict = {}
    # Iterative post-order; derivations of long chains exceed recursion limits.
    stack = [(b, False)]
    while stack:
        node, ready = stack.pop()
        if node in memo:
            continue
        rule = s.backpointers[node]
        if not ready:
            stack.append((node, True))
            stack.extend((a, False) for a in rule.antecedents if a not in memo)
            continue
        children = [memo[a] for a in rule.antecedents]
        memo[node] = Derivation(rule, children, s.weights[node])
    return memo[b]
