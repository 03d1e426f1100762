"""Domain operation tables: orderings, widening/narrowing laws, arithmetic."""

import random

import pytest

from warrow.lattice import (
    BOT,
    INF,
    NEG_INF,
    Env,
    Interval,
    env_join,
    env_leq,
    env_meet,
    env_ops,
    env_set,
    env_top,
    format_value,
    guard,
    interval,
    interval_arith,
    interval_ops,
    iv_add,
    iv_join,
    iv_meet,
    iv_narrow,
    iv_widen,
    make_env,
    natinf_ops,
    warrow,
)


def iv(lo, hi):
    return interval(lo, hi)


# --- combined operator ------------------------------------------------------


def test_warrow_widens_on_growth():
    ops = interval_ops()
    assert warrow(ops, iv(0, 0), iv(0, 3)) == iv(0, INF)


def test_warrow_narrows_on_descent():
    ops = interval_ops()
    assert warrow(ops, iv(0, INF), iv(0, 3)) == iv(0, 3)


def test_warrow_fixed_on_equal():
    ops = interval_ops()
    for a in [iv(1, 5), iv(NEG_INF, 2), BOT]:
        assert ops.eq(warrow(ops, a, a), a)


def test_warrow_matches_definition_randomized():
    ops = interval_ops()
    rng = random.Random(7)
    for _ in range(500):
        a = random_interval(rng)
        b = random_interval(rng)
        expected = ops.narrow(a, b) if ops.leq(b, a) else ops.widen(a, b)
        assert ops.eq(warrow(ops, a, b), expected)


# --- intervals ---------------------------------------------------------------


def random_interval(rng):
    if rng.random() < 0.1:
        return BOT
    lo = rng.choice([NEG_INF, -5, -1, 0, 2])
    hi = rng.choice([0, 1, 3, 9, INF])
    return interval(lo, max(lo, hi) if hi != INF else hi)


def test_interval_widen_examples():
    assert iv_widen(iv(0, 0), iv(0, 3)) == iv(0, INF)
    assert iv_widen(iv(1, 5), iv(1, 5)) == iv(1, 5)
    assert iv_widen(iv(0, 5), iv(-1, 5)) == iv(NEG_INF, 5)
    assert iv_widen(BOT, iv(2, 3)) == iv(2, 3)


def test_interval_narrow_examples():
    assert iv_narrow(iv(0, INF), iv(0, 3)) == iv(0, 3)
    assert iv_narrow(iv(0, 9), iv(0, 3)) == iv(0, 9)  # finite bounds kept
    assert iv_narrow(iv(5, 7), BOT) is BOT
    assert iv_narrow(iv(NEG_INF, INF), iv(1, 2)) == iv(1, 2)


def test_interval_construction_collapses_empty():
    assert interval(3, 2) is BOT
    assert interval(INF, INF) is BOT


def test_interval_add():
    assert iv_add(iv(0, 0), iv(1, 1)) == iv(1, 1)
    assert iv_add(iv(0, INF), iv(1, 1)) == iv(1, INF)
    assert iv_add(BOT, iv(1, 1)) is BOT


def test_interval_arith_dispatch():
    assert interval_arith("add", iv(1, 2), iv(3, 4)) == iv(4, 6)
    assert interval_arith("sub", iv(1, 2), iv(3, 4)) == iv(-3, -1)
    assert interval_arith("const", 5) == iv(5, 5)
    with pytest.raises(ValueError):
        interval_arith("mul", iv(1, 1), iv(1, 1))


def test_guard():
    assert guard("<", iv(0, INF), 10) == iv(0, 9)
    assert guard(">", iv(0, 5), 9) is BOT
    assert guard("<=", iv(0, 3), 99) == iv(0, 3)
    assert guard("==", iv(0, 5), 2) == iv(2, 2)
    assert guard("!=", iv(2, 2), 2) is BOT
    assert guard("!=", iv(0, 5), 0) == iv(1, 5)
    assert guard("!=", iv(0, 5), 3) == iv(0, 5)
    assert guard(">=", BOT, 0) is BOT


def test_widen_dominates_randomized():
    ops = interval_ops()
    rng = random.Random(11)
    for _ in range(500):
        a, b = random_interval(rng), random_interval(rng)
        w = ops.widen(a, b)
        assert ops.leq(a, w) and ops.leq(b, w)


def test_narrow_brackets_randomized():
    ops = interval_ops()
    rng = random.Random(13)
    for _ in range(500):
        a, b = random_interval(rng), random_interval(rng)
        if not ops.leq(b, a):
            continue
        n = ops.narrow(a, b)
        assert ops.leq(b, n) and ops.leq(n, a)


def test_narrow_idempotent_on_descending_pairs():
    ops = interval_ops()
    rng = random.Random(17)
    for _ in range(500):
        a, b = random_interval(rng), random_interval(rng)
        if not ops.leq(b, a):
            continue
        once = ops.narrow(a, b)
        assert ops.eq(ops.narrow(once, b), once)


def test_widening_chains_stabilize_quickly():
    # each bound can move to its infinity at most once, so any widening
    # chain makes at most 3 strict steps
    ops = interval_ops()
    rng = random.Random(19)
    for _ in range(300):
        cur = BOT
        strict = 0
        for _ in range(10):
            nxt = ops.widen(cur, random_interval(rng))
            if not ops.eq(nxt, cur):
                strict += 1
            cur = nxt
        assert strict <= 3


def test_eq_consistent_with_leq():
    ops = interval_ops()
    rng = random.Random(23)
    for _ in range(300):
        a, b = random_interval(rng), random_interval(rng)
        assert ops.eq(a, b) == (ops.leq(a, b) and ops.leq(b, a))


# --- naturals with infinity ---------------------------------------------------


def test_natinf_table():
    ops = natinf_ops()
    assert ops.widen(0, 0) == 0
    assert ops.widen(1, 2) == INF
    assert ops.narrow(INF, 1) == 1
    assert ops.narrow(2, 1) == 2
    assert ops.join(3, 5) == 5
    assert ops.bottom == 0


def test_natinf_laws():
    ops = natinf_ops()
    rng = random.Random(29)
    vals = [0, 1, 2, 5, INF]
    for _ in range(300):
        a, b = rng.choice(vals), rng.choice(vals)
        w = ops.widen(a, b)
        assert ops.leq(a, w) and ops.leq(b, w)
        if ops.leq(b, a):
            n = ops.narrow(a, b)
            assert ops.leq(b, n) and ops.leq(n, a)


# --- environments -------------------------------------------------------------


NAMES = ("i", "j")


def test_env_collapses_on_bottom_component():
    assert make_env(NAMES, {"i": BOT, "j": iv(0, 1)}) is BOT
    e = make_env(NAMES, {"i": iv(0, 1)})
    assert e.get("j") == iv(NEG_INF, INF)
    assert env_set(e, "i", BOT) is BOT


def test_env_pointwise_ops():
    a = make_env(NAMES, {"i": iv(0, 1), "j": iv(5, 5)})
    b = make_env(NAMES, {"i": iv(2, 3), "j": iv(5, 5)})
    assert env_join(a, b) == make_env(NAMES, {"i": iv(0, 3), "j": iv(5, 5)})
    assert env_meet(a, b) is BOT
    assert env_leq(a, env_join(a, b))
    assert env_leq(BOT, a) and not env_leq(a, BOT)


def test_env_ops_table_laws():
    ops = env_ops(NAMES)
    rng = random.Random(31)

    def rand_env():
        if rng.random() < 0.1:
            return BOT
        return make_env(NAMES, {"i": random_interval(rng),
                                "j": random_interval(rng)})

    for _ in range(300):
        a, b = rand_env(), rand_env()
        w = ops.widen(a, b)
        assert ops.leq(a, w) and ops.leq(b, w)
        if ops.leq(b, a):
            n = ops.narrow(a, b)
            assert ops.leq(b, n) and ops.leq(n, a)


def test_format_value():
    assert format_value(BOT) == "bot"
    assert format_value(iv(0, INF)) == "[0,inf]"
    assert format_value(iv(NEG_INF, -2)) == "[-inf,-2]"
    assert format_value(INF) == "inf"
    assert format_value(3) == "3"
    e = make_env(NAMES, {"i": iv(0, 99), "j": iv(0, 9)})
    assert format_value(e) == "{i:[0,99],j:[0,9]}"
