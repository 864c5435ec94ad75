"""Seeded random problems and hierarchies shared by the property tests."""
from __future__ import annotations

import random

from lightderiv import Problem, Rule, Statement, dp_acyclic, project
from lightderiv.hald import Hierarchy


def s(i: int) -> Statement:
    return Statement("s", (i,))


def random_acyclic(seed: int, n_max: int = 12, r_max: int = 30,
                   w_max: int = 10) -> Problem:
    """Acyclic grounded problem: antecedents always precede the conclusion.

    The goal is the highest-numbered derivable statement (or ``s(n-1)`` when
    nothing past the axioms derives).
    """
    rng = random.Random(seed)
    n = rng.randint(2, n_max)
    n_rules = rng.randint(1, r_max)
    rules = []
    for _ in range(n_rules):
        c = rng.randrange(n)
        k = rng.choice((0, 0, 1, 1, 2, 2, 3)) if c > 0 else 0
        ants = tuple(s(rng.randrange(c)) for _ in range(k))
        rules.append(Rule(ants, s(c), float(rng.randint(0, w_max))))
    # at least one axiom so something derives
    if not any(not r.antecedents for r in rules):
        rules[0] = Rule((), rules[0].conclusion, rules[0].weight)
    p = Problem(goal=s(n - 1), rules=rules, name=f"rand{seed}")
    derived = dp_acyclic(p).weights
    goal = max(derived, key=lambda t: t.args[0])
    return Problem(goal=goal, rules=rules, name=f"rand{seed}")


def random_map(seed: int, statements, groups: int, label: str, goal) -> dict:
    """Random coarsening; the goal gets its own abstract goal."""
    rng = random.Random(seed)
    out = {}
    for st in statements:
        if st == goal:
            out[st] = Statement(label + "goal")
        else:
            out[st] = Statement(label, (rng.randrange(groups),))
    return out


def random_abstraction(p: Problem, seed: int, groups: int = 3):
    """(map, abstract problem) with abstract rules the min over preimages."""
    table = random_map(seed, p.statements(), groups, "t", p.goal)
    m = table.__getitem__
    return m, project(p, m)


def random_hierarchy(seed: int, levels: int = 3) -> Hierarchy:
    """Random level 0 plus successive random projections."""
    p = random_acyclic(seed, n_max=10, r_max=24)
    rng = random.Random(seed * 7919 + 1)
    lv, maps = [p], []
    for k in range(1, levels):
        cur = lv[-1]
        groups = max(1, len(cur.statements()) // 2 - k)
        table = random_map(rng.randrange(1 << 30), cur.statements(), groups,
                           f"a{k}_", cur.goal)
        maps.append(table.__getitem__)
        lv.append(project(cur, maps[-1]))
    return Hierarchy(lv, maps, name=f"randh{seed}")
