import itertools

import numpy as np
import pytest

from lightderiv import astar_ld, build_pdb, check_monotone, ground, kld, pdb_heuristic, project
from lightderiv.hald import run_hald, validate_hierarchy
from lightderiv.problems import convex as cv
from lightderiv.problems.imaging import (
    CircleSpec, GeometryError, Image, bresenham, gen_circle_image, polar_point,
)


def _rand_spec(seed, N=4, R=4, hi=10):
    return cv.ConvexSpec(np.random.default_rng(seed).integers(0, hi, (N, R, R)).astype(float))


def _circle(R, sigma, seed, N):
    return cv.spec_from_image(gen_circle_image(CircleSpec(R, sigma, seed)), N, R)


# -- data costs ---------------------------------------------------------------------

def test_data_cost_constant_image():
    N, R = 8, 6
    D = cv.convex_data_cost(Image.constant(15, 15, 77), (7, 7), N, R)
    assert D.shape == (N, R, R) and D.size == N * R * R
    th = [2 * np.pi * i / N for i in range(N)]
    for i, r, r2 in itertools.product(range(N), range(R), range(R)):
        a = polar_point(0, 0, th[i], r)
        b = polar_point(0, 0, th[(i + 1) % N], r2)
        assert D[i, r, r2] == 255.0 * len(bresenham(a, b))


def test_data_cost_prefers_edges():
    # vertical step at x = 12 (between columns 11 and 12): the gradient there is 255
    px = np.zeros((25, 25), dtype=np.uint8)
    px[:, 12:] = 255
    img = Image(px)
    N, R = 4, 12
    # polar points at theta = pi/2 and 3pi/2 lie on the column x = cx
    on_edge = cv.convex_data_cost(img, (12, 12), N, R)
    flat = cv.convex_data_cost(img, (5, 12), N, 5)
    # segment from (theta_1, r) to (theta_2, 0) runs up the column x = cx
    assert on_edge[1, 4, 0] < flat[1, 4, 0]
    assert on_edge[1, 4, 0] == 0.0


def test_data_cost_rejects_ball_outside_image():
    with pytest.raises(GeometryError):
        cv.convex_data_cost(Image.constant(9, 9), (2, 4), 4, 4)


def test_spec_validation():
    with pytest.raises(cv.SpecError):
        cv.ConvexSpec(np.zeros((2, 4, 4)))
    with pytest.raises(cv.SpecError):
        cv.ConvexSpec(-np.ones((4, 4, 4)))
    with pytest.raises(cv.SpecError):
        cv.ConvexSpec(np.zeros((4, 4, 3)))
    with pytest.raises(cv.SpecError):
        cv.convex_hierarchy(cv.ConvexSpec(np.zeros((4, 6, 6))))


# -- convexity predicates --------------------------------------------------------------

def test_convexity_square():
    assert all(cv.convexity_C(2, 2, 2, i, 4) for i in range(4))
    assert cv.is_convex([2, 2, 2, 2])


def test_convexity_reflex():
    # 60 degree spacing: the dent at r = 0 turns right
    assert not cv.convexity_C(2, 0, 2, 1, 6)
    assert not cv.is_convex([2, 0, 2, 2, 2, 2])
    assert not cv.convexity_C(3, 0, 3, 0, 5)


def test_convexity_collinear():
    # at 90 degree spacing (2, 0, 2) runs straight through the center
    assert cv.convexity_C(2, 0, 2, 1, 4)
    # at 60 degree spacing r = 1 sits exactly on the chord between two r = 2 points
    assert cv.convexity_C(2, 1, 2, 0, 6)


def test_convex_mask_matches_predicate():
    N, R = 7, 6
    m = cv.convex_mask(N, R)
    for c, d, e in itertools.product(range(R), repeat=3):
        assert m[c, d, e] == cv.convexity_C(c, d, e, 0, N)


def test_abstract_mask_matches_exhaustive():
    rng = np.random.default_rng(1)
    for _ in range(300):
        N = int(rng.integers(3, 24))
        k = int(rng.integers(1, 4))
        R = 16
        n = R >> k
        sp, s, sn = (int(v) for v in rng.integers(0, n, 3))
        assert cv.abstract_mask(N, R, k)[sp, s, sn] == cv.abstract_C_exhaustive(sp, s, sn, k, N)


def test_merge_costs_is_block_min():
    D = _rand_spec(3, N=5, R=8).D
    M = cv.merge_costs(D)
    for i, s, t in itertools.product(range(5), range(4), range(4)):
        assert M[i, s, t] == D[i, 2 * s:2 * s + 2, 2 * t:2 * t + 2].min()


# -- problems and hierarchy ------------------------------------------------------------

def test_zero_costs():
    spec = cv.ConvexSpec(np.zeros((4, 4, 4)))
    assert kld(cv.convex_problem(spec))[0].goal_weight == 0.0
    assert cv.convex_dp(spec)[0] == 0.0
    assert cv.convex_bruteforce(spec)[0] == 0.0


def _enumerate_rules(spec):
    """Direct count of the partial-object rule instances reachable from the axioms."""
    N, R = spec.N, spec.R
    mask = cv.convex_mask(N, R)
    reach = {(1, a, b, a, b) for a in range(R) for b in range(R)}
    count = len(reach)
    frontier = set(reach)
    for i in range(1, N):
        nxt = set()
        for (_, a, b, c, d) in frontier:
            for e in range(R):
                if mask[c, d, e]:
                    count += 1
                    nxt.add((i + 1, a, b, d, e))
        frontier = nxt
    count += sum(1 for (_, a, b, c, d) in frontier if d == a and mask[c, a, b])
    return count


def test_ground_rule_count_matches_enumeration():
    spec = _rand_spec(0)
    assert len(ground(cv.convex_problem(spec)).rules) == _enumerate_rules(spec)


@pytest.mark.parametrize("seed", range(12))
def test_engine_matches_bruteforce(seed):
    spec = _rand_spec(seed)
    e, r = cv.convex_bruteforce(spec)
    sol, _ = kld(cv.convex_problem(spec))
    assert sol.goal_weight == e
    got = cv.hypothesis_from_solution(sol)
    assert cv.is_convex(got) and cv.energy(spec, got) == e
    de, dr = cv.convex_dp(spec)
    assert de == e and cv.is_convex(dr) and cv.energy(spec, dr) == e


def test_bruteforce_pin():
    D = np.random.default_rng(7).integers(0, 10, (4, 4, 4)).astype(float)
    assert cv.convex_bruteforce(cv.ConvexSpec(D)) == (4.0, [3, 1, 3, 3])


def test_bruteforce_limit():
    with pytest.raises(cv.SpecError):
        cv.convex_bruteforce(cv.ConvexSpec(np.zeros((20, 8, 8))))


def test_dp_matches_kld_n6_r8():
    for seed in range(4):
        spec = _rand_spec(seed, N=6, R=8, hi=50)
        assert cv.convex_dp(spec)[0] == kld(cv.convex_problem(spec))[0].goal_weight


def test_dp_matches_hald_on_circle():
    spec = _circle(8, 25.0, 2, 8)
    e, r = cv.convex_dp(spec)
    res = run_hald(cv.convex_hierarchy(spec))
    assert res.goal_weight == pytest.approx(e, abs=1e-9)


def test_dp_matches_hald_n8_r16():
    spec = _circle(16, 50.0, 4, 8)
    e, _ = cv.convex_dp(spec)
    assert run_hald(cv.convex_hierarchy(spec)).goal_weight == pytest.approx(e, abs=1e-9)


def test_hierarchy_levels():
    spec = _rand_spec(5, N=5, R=8)
    hier = cv.convex_hierarchy(spec)
    assert hier.m == 3
    g0 = ground(hier.levels[0])
    gc = ground(cv.convex_problem(spec))
    key = lambda r: (r.antecedents, r.conclusion, r.weight)
    assert sorted(map(key, g0.rules)) == sorted(map(key, gc.rules))
    assert validate_hierarchy(hier) == []


def test_merged_costs_bound_children():
    spec = _rand_spec(6, N=4, R=16, hi=100)
    lv = cv.convex_levels(spec, 4)
    for k in range(1, 4):
        lo, hi = lv[k - 1].D, lv[k].D
        for i, t, t2 in itertools.product(range(4), range(lo.shape[1]), range(lo.shape[1])):
            assert hi[i, t >> 1, t2 >> 1] <= lo[i, t, t2]


def test_hierarchy_validity_on_image():
    spec = _circle(8, 25.0, 0, 5)
    assert validate_hierarchy(cv.convex_hierarchy(spec)) == []


# -- pattern databases -------------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2])
def test_vectorized_pdb_matches_generic(k):
    spec = _circle(8, 25.0, 1, 5)
    lv = cv.convex_levels(spec, k + 1)[k]
    generic = build_pdb(ground(cv.level_problem(lv)))
    fast = cv.convex_pdb(spec, k).as_pdb()
    for s, w in generic.items():
        assert fast.lookup(s) == w


@pytest.mark.parametrize("k", [1, 2])
def test_pdb_heuristic_monotone_and_exact(k):
    spec = _circle(8, 50.0, 3, 6)
    pdb = cv.convex_pdb(spec, k)
    h = pdb.heuristic()
    p = cv.convex_problem(spec)
    assert check_monotone(p, h) == []
    assert astar_ld(p, h)[0].goal_weight == kld(p)[0].goal_weight
    # the vectorized table agrees with the generic projection route
    m = cv.coarsen_to(k)
    hg = pdb_heuristic(build_pdb(ground(cv.level_problem(cv.convex_levels(spec, k + 1)[k]))), m)
    sol, _ = kld(p, stop="empty")
    for s in sol.weights:
        assert h(s) == hg(s)


def test_projection_of_level0_is_bounded_by_level_k():
    # the level-k rules are at most as heavy as the projected concrete rules
    spec = _rand_spec(8, N=4, R=8, hi=30)
    proj = build_pdb(project(ground(cv.convex_problem(spec)), cv.coarsen_to(1)))
    fast = cv.convex_pdb(spec, 1).as_pdb()
    for s, w in proj.items():
        assert fast.lookup(s) <= w


# -- misc -------------------------------------------------------------------------------

def test_memory_budget(monkeypatch):
    monkeypatch.setenv(cv.MEMORY_ENV, "1000")
    with pytest.raises(cv.MemoryBudgetError):
        cv.convex_dp(_rand_spec(0, N=4, R=8))


def test_boundary_points_closed_loop():
    spec = _circle(8, 0.0, 0, 6)
    pts = cv.boundary_points(spec, [3] * 6)
    assert pts and all(0 <= x < 17 and 0 <= y < 17 for x, y in pts)
