"""Contexts, projections through abstraction maps, and pattern databases."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping

from .core import (
    INF,
    Chart,
    General,
    LightestDerivationError,
    Problem,
    Rule,
    Statement,
    apply_weight,
    parse_statement,
)
from .engine import Heuristic, SolutionSet, kld

CONTEXT_PREFIX = "context:"
MONOTONE_TOL = 1e-9


class UnsupportedWeightError(LightestDerivationError):
    pass


def context(s: Statement) -> Statement:
    """The statement ``context(s)``; never collides with a base statement."""
    return Statement(CONTEXT_PREFIX + s.label, s.args)


def is_context(s: Statement) -> bool:
    return s.label.startswith(CONTEXT_PREFIX)


def base_of(c: Statement) -> Statement:
    return Statement(c.label[len(CONTEXT_PREFIX):], c.args)


class AbstractionMap:
    """A total map from base statements to abstract statements."""

    def __init__(self, fn: Callable[[Hashable], Hashable] | Mapping, name: str = ""):
        if isinstance(fn, Mapping):
            table = dict(fn)
            self.fn = lambda s: table[s]
        else:
            self.fn = fn
        self.name = name

    def __call__(self, s):
        return self.fn(s)

    def then(self, outer: "AbstractionMap") -> "AbstractionMap":
        """``outer ∘ self``: apply this map, then ``outer``."""
        inner_fn, outer_fn = self.fn, outer.fn
        return AbstractionMap(lambda s: outer_fn(inner_fn(s)),
                              f"{outer.name}∘{self.name}")

    @staticmethod
    def identity() -> "AbstractionMap":
        return AbstractionMap(lambda s: s, "id")


def _require_additive(p: Problem) -> None:
    if not p.grounded:
        raise ValueError("a grounded problem is required")
    for r in p.rules:
        if isinstance(r.weight, General):
            raise UnsupportedWeightError(f"contexts need additive rules, got {r}")


def context_problem(p: Problem) -> Problem:
    """R ∪ c(R): the rules of ``p`` plus rules deriving contexts.

    ``context(goal)`` is an axiom of weight 0, and each rule
    ``A1..An ->v C`` contributes, for every i,
    ``context(C), A1..A(i-1), A(i+1)..An ->v context(Ai)``.
    """
    _require_additive(p)
    rules = list(p.rules)
    rules.append(Rule((), context(p.goal), 0.0, tag="context-goal"))
    for r in p.rules:
        ants = r.antecedents
        cc = context(r.conclusion)
        for i, a in enumerate(ants):
            others = ants[:i] + ants[i + 1:]
            rules.append(Rule((cc,) + others, context(a), r.weight,
                              tag=f"context/{i}", signed=r.signed))
    return Problem(goal=p.goal, rules=rules, registry=p.registry,
                   name=f"context({p.name})", goal_offset=p.goal_offset)


def project(p: Problem, m: Callable[[Hashable], Hashable]) -> Problem:
    """Image of ``p`` under ``m``; duplicate abstract rules keep the min weight."""
    _require_additive(p)
    best: dict = {}
    for r in p.rules:
        key = (tuple(m(a) for a in r.antecedents), m(r.conclusion))
        old = best.get(key)
        if old is None or r.weight < old.weight:
            best[key] = Rule(key[0], key[1], r.weight, r.tag, r.signed)
    return Problem(goal=m(p.goal), rules=list(best.values()),
                   name=f"abs({p.name})", goal_offset=p.goal_offset)


class PatternDatabase(Mapping):
    """Lightest abstract context weights; absent statements read as +inf."""

    def __init__(self, table: Mapping | None = None):
        self._table: dict = dict(table or {})

    def __getitem__(self, s):
        return self._table[s]

    def __iter__(self):
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    def lookup(self, s, default: float = INF) -> float:
        return self._table.get(s, default)

    def dumps(self) -> str:
        return "".join(f"pdb {s} {w!r}\n" for s, w in self._table.items())

    @classmethod
    def loads(cls, text: str) -> "PatternDatabase":
        table = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, stmt, w = line.split()
            if head != "pdb":
                raise ValueError(f"line {lineno}: expected 'pdb', got {head!r}")
            table[parse_statement(stmt)] = float(w)
        return cls(table)


def build_pdb(p_abs: Problem) -> PatternDatabase:
    """Context weights of every abstract statement, by KLD to closure."""
    s, _ = kld(context_problem(p_abs), stop="empty")
    return PatternDatabase({base_of(c): w for c, w in s.weights.items()
                            if isinstance(c, Statement) and is_context(c)})


def pdb_heuristic(db: Mapping, m: Callable[[Hashable], Hashable],
                  default: float = INF) -> Heuristic:
    """``h(C) = db[m(C)]``; statements without an abstract context get ``default``."""
    get = db.get

    def h(s) -> float:
        v = get(m(s))
        return default if v is None else v

    return h


@dataclass
class MonotoneViolation:
    rule: Rule
    index: int
    lhs: float
    rhs: float

    def __str__(self) -> str:
        return f"{self.rule} antecedent {self.index}: {self.lhs!r} > {self.rhs!r}"


def monotone_violations(rules: Iterable[Rule], weights: Mapping, h: Heuristic,
                        tol: float = MONOTONE_TOL) -> list[MonotoneViolation]:
    """Check ``w_i + h(A_i) <= g(w) + h(C)`` for rules whose antecedents are weighted."""
    out = []
    for r in rules:
        ants = r.antecedents
        if not ants:
            continue
        try:
            ws = [weights[a] for a in ants]
        except KeyError:
            continue
        rhs = apply_weight(r.weight, ws) + h(r.conclusion)
        for i, a in enumerate(ants):
            lhs = ws[i] + h(a)
            if lhs > rhs and lhs - rhs > tol * max(1.0, abs(rhs)):
                out.append(MonotoneViolation(r, i, lhs, rhs))
    return out


def check_monotone(p: Problem, h: Heuristic, sample_budget: int | None = None,
                   solution: SolutionSet | None = None) -> list[MonotoneViolation]:
    """Report every checked (rule, i) pair violating the monotone condition.

    Antecedent weights are the lightest ones, which is the binding case for
    non-decreasing rules.  Implicit problems are checked on the rules their
    expander produces during a closure run; ``sample_budget`` caps the number
    of rules examined.
    """
    if solution is None:
        solution, _ = kld(p, stop="empty", assert_monotone=False)
    weights = solution.weights
    rules = p.rules if p.grounded else _rules_over(p, weights)
    if sample_budget is not None:
        rules = itertools.islice(rules, sample_budget)
    return monotone_violations(rules, weights, h)


def _rules_over(p: Problem, weights: Mapping):
    """Every rule instance whose antecedents all appear in ``weights``."""
    chart = Chart()
    expand = p.make_expander(chart)
    yield from p.initial_rules()
    for s, w in weights.items():
        chart.add(s, w)
        yield from expand(s)
