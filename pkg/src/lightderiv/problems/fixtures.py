"""Small hand-checkable problems used by tests and the CLI."""
from __future__ import annotations

from ..core import Problem, Registry, Rule, Statement
from ..hald import Hierarchy
from .graph import Graph
from .parsing import Grammar

S, A, B = 0, 1, 2


def g1_graph(with_cycle: bool = False) -> Graph:
    """s=0, a=1, b=2 with edges s->a (1), a->b (2), s->b (5); optional a->s (1)."""
    edges = [(S, A, 1.0), (A, B, 2.0), (S, B, 5.0)]
    if with_cycle:
        edges.append((A, S, 1.0))
    return Graph(3, edges, source=S, target=B)


def cfg1_grammar() -> Grammar:
    return Grammar("S", binary=[("S", "A", "B", 0.5)],
                   lexical=[("A", "a", 0.1), ("B", "b", 0.2)])


def _xyz_level(n: int | None, rule_costs: dict | None = None) -> Problem:
    """One level of the X/Y/Z hierarchy; ``n=None`` builds the abstract level."""
    reg = Registry()
    if n is None:
        c = {"x": 1.0, "y": 1.0, "goal_xy": 1.0, "z": 5.0, "goal_z": 1.0}
        c.update(rule_costs or {})
        X, Y, Z = (reg.intern(t) for t in "XYZ")
        goal = reg.intern("goal", (1,))
        rules = [
            Rule((), X, c["x"], "X"),
            Rule((), Y, c["y"], "Y"),
            Rule((X, Y), goal, c["goal_xy"], "XY-goal"),
            Rule((X, Y), Z, c["z"], "XY-Z"),
            Rule((Z,), goal, c["goal_z"], "Z-goal"),
        ]
        return Problem(goal=goal, rules=rules, registry=reg, name="xyz-abstract")
    scale = 0.0 if rule_costs == "zero" else 1.0
    goal = reg.intern("goal", (0,))
    xs = [reg.intern("X", (i,)) for i in range(1, n + 1)]
    ys = [reg.intern("Y", (i,)) for i in range(1, n + 1)]
    zs = [reg.intern("Z", (i,)) for i in range(1, n + 1)]
    rules = []
    for i in range(1, n + 1):
        rules.append(Rule((), xs[i - 1], scale * i, f"X{i}"))
        rules.append(Rule((), ys[i - 1], scale * i, f"Y{i}"))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            rules.append(Rule((xs[i - 1], ys[j - 1]), goal, scale * i * j, f"X{i}Y{j}-goal"))
    for i in range(1, n + 1):
        rules.append(Rule((xs[i - 1], ys[i - 1]), zs[i - 1], scale * 5, f"X{i}Y{i}-Z"))
        rules.append(Rule((zs[i - 1],), goal, scale * i, f"Z{i}-goal"))
    return Problem(goal=goal, rules=rules, registry=reg, name=f"xyz({n})")


def _drop_index(s: Statement) -> Statement:
    if s.label == "goal":
        return Statement("goal", (1,))
    return Statement(s.label, ())


def h1_hierarchy(n: int = 2, abstract_costs: dict | None = None,
                 zero: bool = False) -> Hierarchy:
    """Two-level X/Y/Z hierarchy; the abstraction drops the index.

    ``zero`` sets every rule weight to 0; ``abstract_costs`` overrides
    named abstract rule weights (keys x, y, goal_xy, z, goal_z).
    """
    if zero:
        abstract_costs = dict.fromkeys(("x", "y", "goal_xy", "z", "goal_z"), 0.0)
    lo = _xyz_level(n, "zero" if zero else None)
    hi = _xyz_level(None, abstract_costs)
    return Hierarchy([lo, hi], [_drop_index], name=f"h1(n={n})")


def h1_level1() -> Problem:
    return _xyz_level(None)
