import io
import json

import pytest

from lightderiv import Statement, kld
from lightderiv.abstraction import project
from lightderiv.engine import TraceWriter
from lightderiv.hald import (
    BOTTOM, CONTEXT, DERIVATION, GenStatement, Hierarchy, count_K, hald_trace_fields,
    intrinsic_priority, level_oracles, run_hald, validate_hierarchy,
)
from lightderiv.problems.fixtures import g1_graph, h1_hierarchy
from lightderiv.problems.graph import graph_problem

from randsuite import random_hierarchy

X, Y, Z = Statement("X"), Statement("Y"), Statement("Z")
GOAL0, GOAL1 = Statement("goal", (0,)), Statement("goal", (1,))

# HA*LD on the two-level X/Y/Z example: (generalized statement, weight, priority)
GOLDEN = [
    (GenStatement(2, DERIVATION, BOTTOM), 0.0, 0.0),
    (GenStatement(2, CONTEXT, BOTTOM), 0.0, 0.0),
    (GenStatement(1, DERIVATION, X), 1.0, 1.0),
    (GenStatement(1, DERIVATION, Y), 1.0, 1.0),
    (GenStatement(1, DERIVATION, GOAL1), 3.0, 3.0),
    (GenStatement(1, CONTEXT, GOAL1), 0.0, 3.0),
    (GenStatement(1, CONTEXT, X), 2.0, 3.0),
    (GenStatement(1, CONTEXT, Y), 2.0, 3.0),
    (GenStatement(0, DERIVATION, Statement("X", (1,))), 1.0, 3.0),
    (GenStatement(0, DERIVATION, Statement("Y", (1,))), 1.0, 3.0),
    (GenStatement(0, DERIVATION, GOAL0), 3.0, 3.0),
]


def test_golden_trace():
    res = run_hald(h1_hierarchy())
    got = [(g, res.solution[g], p) for g, p in zip(res.stats.order, res.stats.priorities)]
    assert got == GOLDEN
    assert res.goal_weight == 3.0


def test_z_pushed_never_expanded():
    pushes = []
    res = run_hald(h1_hierarchy(), on_push=lambda s, w, p: pushes.append((s, w, p)))
    z = GenStatement(1, DERIVATION, Z)
    assert (z, 7.0, 7.0) in pushes and z not in res.solution
    assert not any(s.base == Z and s.kind == CONTEXT for s, _, _ in pushes)


def test_goal_derivation_uses_x1_y1():
    res = run_hald(h1_hierarchy())
    d = res.derivation
    assert d.weight == 3.0
    assert [c.rule.conclusion for c in d.children] == [Statement("X", (1,)), Statement("Y", (1,))]


def test_trace_writer_with_hald_fields():
    buf = io.StringIO()
    tw = TraceWriter(buf, hald_trace_fields)
    run_hald(h1_hierarchy(), trace=tw, on_push=tw.push)
    recs = [json.loads(line) for line in buf.getvalue().splitlines()]
    expands = [r for r in recs if r["event"] == "expand"]
    assert len(expands) == len(GOLDEN)
    assert expands[4]["statement"] == "goal(1)@1" and expands[4]["level"] == 1
    assert any(r["event"] == "push" and r["statement"] == "Z@1" and r["priority"] == 7.0
               for r in recs)


def test_validate_h1_clean():
    assert validate_hierarchy(h1_hierarchy()) == []


def test_validate_heavier_counterpart():
    report = validate_hierarchy(h1_hierarchy(abstract_costs={"goal_xy": 5.0}))
    assert any("heavier" in line and "X(1)" in line and "Y(1)" in line for line in report)


def test_validate_single_level():
    hier = Hierarchy([graph_problem(g1_graph())], [])
    assert validate_hierarchy(hier) == []


def test_single_level_matches_kld():
    p = graph_problem(g1_graph())
    res = run_hald(Hierarchy([p], []))
    sol, stats = kld(p)
    assert res.goal_weight == 3.0 == sol.goal_weight
    level0 = [g.base for g in res.stats.order if g.level == 0]
    assert level0 == stats.order
    assert res.stats.order[:2] == [GenStatement(1, DERIVATION, BOTTOM),
                                   GenStatement(1, CONTEXT, BOTTOM)]


def test_count_K_h1():
    hier = h1_hierarchy()
    K = count_K(hier)
    assert run_hald(hier).expansions <= 2 * K


def test_count_K_single_level():
    p = graph_problem(g1_graph())
    sol, _ = kld(p, stop="empty")
    expected = 1 + sum(1 for w in sol.weights.values() if w <= sol.goal_weight)
    assert count_K(Hierarchy([p], [])) == expected


def test_count_K_zero_costs():
    hier = h1_hierarchy(zero=True)
    oracles = level_oracles(hier)
    derivable = sum(len(o.derivations) for o in oracles)
    assert count_K(hier) == derivable + 1


def test_priorities_match_intrinsic():
    for hier in [h1_hierarchy()] + [random_hierarchy(s) for s in range(10)]:
        oracles = level_oracles(hier)
        res = run_hald(hier)
        for g, p in zip(res.stats.order, res.stats.priorities):
            assert p == pytest.approx(intrinsic_priority(oracles, g), abs=1e-9)


def test_random_hierarchies_bound_and_exact():
    for seed in range(40):
        hier = random_hierarchy(seed)
        res = run_hald(hier)
        o = level_oracles(hier)[0]
        assert res.goal_weight == o.derivations[hier.levels[0].goal]
        assert res.expansions <= 2 * count_K(hier)


def test_map_must_match_levels():
    p = graph_problem(g1_graph())
    with pytest.raises(ValueError):
        Hierarchy([p, project(p, lambda s: s)], [])


def test_no_derivation():
    a, g = Statement("a"), Statement("g")
    from lightderiv import Problem, Rule
    lo = Problem(goal=g, rules=[Rule((), a, 1.0), Rule((a, a, g), g, 1.0)])
    res = run_hald(Hierarchy([lo], []))
    assert res.no_derivation and res.derivation is None
