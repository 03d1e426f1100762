"""Instrumented evaluation, influence sets, solution oracles, admissibility."""

import random

import pytest

from conftest import e_loc_system, load_system, random_chain_system, random_interval_system
from warrow.equations import (
    Assignment,
    BudgetExhausted,
    Contrib,
    PurityViolation,
    check_admissible,
    eval_rhs,
    infl_from_deps,
    is_box_solution,
    is_post_solution,
    kleene_oracle,
    static_system,
)
from warrow.eqfile import EqParseError, parse_equations
from warrow.lattice import BOT, INF, interval, interval_ops, natinf_ops
from warrow.solvers import SolverConfig, Status, solve_rr, solve_srr


def asg(values, bottom=0):
    return Assignment(bottom, values)


# --- eval_rhs -----------------------------------------------------------------


def test_eval_rhs_records_deps(e_term):
    rec = eval_rhs(e_term, "x2", asg({"x3": 5}))
    assert rec.result == 6
    assert rec.deps == ["x3"]
    assert rec.sides == []


def test_eval_rhs_constant():
    system = static_system(natinf_ops(), {"c": lambda get, side=None: 7}, {"c": []})
    rec = eval_rhs(system, "c", asg({}))
    assert rec.result == 7 and rec.deps == [] and rec.sides == []


def test_eval_rhs_e_loc_dynamic_deps():
    system = e_loc_system()
    rec = eval_rhs(system, "y4", asg({"y2": 2, "y4": 2}))
    assert rec.result == 2
    assert rec.deps == ["y4", "y2"]


def test_eval_rhs_bottom_completion(e_term):
    rec = eval_rhs(e_term, "x1", asg({}))
    assert rec.result == 0  # x2 read as bottom


def test_eval_rhs_referentially_transparent():
    rng = random.Random(3)
    for _ in range(30):
        system = random_interval_system(rng)
        rho = asg({u: interval(0, 4) for u in system.unknowns}, BOT)
        for u in system.unknowns:
            a = eval_rhs(system, u, rho)
            b = eval_rhs(system, u, rho)
            assert a.result == b.result and a.deps == b.deps and a.sides == b.sides


def test_eval_rhs_rejects_duplicate_side_target():
    def bad(get, side):
        side("g", 1)
        side("g", 2)
        return 0

    system = static_system(natinf_ops(), {"x": bad, "g": lambda get, side=None: 0})
    with pytest.raises(PurityViolation):
        eval_rhs(system, "x", asg({}))


def test_eval_rhs_rejects_self_side():
    def bad(get, side):
        side("x", 1)
        return 0

    system = static_system(natinf_ops(), {"x": bad})
    with pytest.raises(PurityViolation):
        eval_rhs(system, "x", asg({}))


def test_eval_rhs_enforces_declared_deps():
    system = static_system(
        natinf_ops(),
        {"a": lambda get, side=None: get("b"), "b": lambda get, side=None: 0},
        {"a": [], "b": []},  # deliberately wrong declaration
    )
    with pytest.raises(PurityViolation):
        eval_rhs(system, "a", asg({}))


# --- infl_from_deps -------------------------------------------------------------


def test_infl_e_term_formula():
    infl = infl_from_deps({"x1": ["x2"], "x2": ["x3"], "x3": ["x1"]})
    assert set(infl["x1"]) == {"x3", "x1"}
    assert set(infl["x2"]) == {"x1", "x2"}
    assert set(infl["x3"]) == {"x2", "x3"}


def test_infl_empty_deps_gives_self_loops():
    infl = infl_from_deps({"a": [], "b": []})
    assert infl == {"a": ["a"], "b": ["b"]}


def test_infl_matches_quadratic_scan():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(1, 8)
        names = [f"u{i}" for i in range(n)]
        deps = {x: sorted(rng.sample(names, rng.randint(0, n - 1))) for x in names}
        infl = infl_from_deps(deps)
        for y in names:
            expected = {x for x in names if y in deps[x]} | {y}
            assert set(infl[y]) == expected


def test_infl_transpose_involutive_up_to_self_loops():
    rng = random.Random(6)
    for _ in range(30):
        n = rng.randint(1, 7)
        names = [f"u{i}" for i in range(n)]
        deps = {x: sorted(rng.sample(names, rng.randint(0, n - 1))) for x in names}
        back = infl_from_deps(infl_from_deps(deps))
        for x in names:
            assert set(back[x]) == set(deps[x]) | {x}


# --- solution oracles -------------------------------------------------------------


def test_is_box_solution_e_loc_partial():
    system = e_loc_system()
    rho = asg({"y1": 2, "y2": 2, "y4": 2})
    assert is_box_solution(system, rho, max)


def test_is_box_solution_empty_dom():
    system = e_loc_system()
    assert is_box_solution(system, asg({}), max)


def test_is_box_solution_rejects_open_dom():
    system = e_loc_system()
    rho = asg({"y1": 2})  # y1 reads y4, which is outside the domain
    assert not is_box_solution(system, rho, max)


def test_is_box_solution_accepts_solver_output():
    rng = random.Random(9)
    for _ in range(20):
        system = random_chain_system(rng, h=5)
        out = solve_srr(system, None, SolverConfig(box="join", budget=10_000))
        assert out.status is Status.SOLVED
        assert is_box_solution(system, out.assignment, system.ops.join)


def test_is_post_solution(e_term):
    assert is_post_solution(e_term, asg({"x1": INF, "x2": INF, "x3": INF}))
    assert not is_post_solution(e_term, asg({"x1": 0, "x2": 0, "x3": 0}))


def test_is_post_solution_all_top_intervals():
    rng = random.Random(10)
    system = random_interval_system(rng, 4)
    top = interval(float("-inf"), float("inf"))
    assert is_post_solution(system, Assignment(BOT, {u: top for u in system.unknowns}))


# --- admissibility ------------------------------------------------------------------


def _cycles(deps, order):
    """Brute-force simple-cycle enumeration over the dependence graph."""
    succs = {u: [] for u in order}
    for v, ds in deps.items():
        for u in ds:
            succs[u].append(v)
    cycles = []

    def walk(start, node, path):
        for nxt in succs[node]:
            if nxt == start:
                cycles.append(path[:])
            elif nxt not in path and order.index(nxt) > order.index(start):
                path.append(nxt)
                walk(start, nxt, path)
                path.pop()

    for s in order:
        walk(s, s, [s])
    return cycles


def test_check_admissible_singleton_points(e_term):
    assert not check_admissible(e_term, {"x2"})
    assert check_admissible(e_term, {"x3"})
    assert check_admissible(e_term, {"x3", "x1"})


def test_check_admissible_acyclic_empty():
    system = static_system(
        natinf_ops(),
        {"a": lambda get, side=None: 1, "b": lambda get, side=None: get("a")},
        {"a": [], "b": ["a"]},
    )
    assert check_admissible(system, set())


def test_check_admissible_matches_cycle_enumeration():
    rng = random.Random(12)
    for _ in range(60):
        n = rng.randint(1, 6)
        names = [f"u{i}" for i in range(n)]
        deps = {x: sorted(rng.sample(names, rng.randint(0, n))) for x in names}
        system = static_system(
            natinf_ops(),
            {x: (lambda get, side=None: 0) for x in names},
            deps,
        )
        points = set(rng.sample(names, rng.randint(0, n)))
        expected = all(
            max(cycle, key=names.index) in points
            for cycle in _cycles(deps, names)
        )
        assert check_admissible(system, points) == expected


# --- kleene oracle -------------------------------------------------------------------


def test_kleene_join_selfloop():
    from warrow.lattice import iv_join

    system = static_system(
        interval_ops(),
        {"x": lambda get, side=None: iv_join(interval(5, 5), get("x"))},
        {"x": ["x"]},
    )
    rho = kleene_oracle(system)
    assert rho.get("x") == interval(5, 5)


def test_kleene_diverges_on_unbounded_ascent(e_term):
    with pytest.raises(BudgetExhausted):
        kleene_oracle(e_term, max_steps=100)


def test_kleene_agrees_with_round_robin_join():
    rng = random.Random(14)
    for _ in range(30):
        system = random_chain_system(rng, h=4)
        expected = kleene_oracle(system)
        out = solve_rr(system, None, SolverConfig(box="join", budget=10_000))
        assert out.status is Status.SOLVED
        for u in system.unknowns:
            assert out.assignment.get(u) == expected.get(u)


# --- equation file format ---------------------------------------------------------------


def test_eqfile_declared_order(e_term):
    assert e_term.unknowns == ["x1", "x2", "x3"]
    assert e_term.static_deps == {"x1": ["x2"], "x2": ["x3"], "x3": ["x1"]}


def test_eqfile_expression_forms():
    system, domain = parse_equations(
        "domain interval\n"
        "a = 3\n"
        "b = a + 2\n"
        "c = join(a, b)\n"
        "d = meet(c, 4)\n"
        "e = guard(<=, 3, b)\n"
        "f = ite0(a, 1, d)\n"
        "g = widenconst(0, b)\n"
    )
    assert domain == "interval"
    rho = kleene_oracle(system)
    assert rho.get("a") == interval(3, 3)
    assert rho.get("b") == interval(5, 5)
    assert rho.get("c") == interval(3, 5)
    assert rho.get("d") == interval(4, 4)
    assert rho.get("e") is BOT  # no value of b=[5,5] is <= 3
    assert rho.get("f") == interval(4, 4)  # a is not [0,0], takes the d branch
    assert rho.get("g") == interval(0, INF)  # [0,0] widened by [5,5]


def test_eqfile_errors():
    with pytest.raises(EqParseError):
        parse_equations("x1 = 3\n")  # no domain header
    with pytest.raises(EqParseError):
        parse_equations("domain natinf\nx = y + 1\n")  # y undefined
    with pytest.raises(EqParseError):
        parse_equations("domain natinf\nx = 1\nx = 2\n")
    with pytest.raises(EqParseError):
        parse_equations("domain foo\n")
