"""Shared fixtures: corpus access, hand-built systems, random generators."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from warrow.eqfile import load_equations
from warrow.equations import EquationSystem, static_system
from warrow.lattice import (
    BOT,
    DomainOps,
    INF,
    Interval,
    guard,
    interval,
    iv_add,
    iv_const,
    iv_join,
    iv_meet,
    interval_ops,
    natinf_ops,
)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load_system(name: str) -> EquationSystem:
    return load_equations(CORPUS / name)[0]


@pytest.fixture
def e_term():
    return load_system("e_term.eq")


@pytest.fixture
def e_w():
    return load_system("e_w.eq")


@pytest.fixture
def e_non():
    return load_system("e_non.eq")


def corpus_path(name: str) -> str:
    return str(CORPUS / name)


def e_loc_system(touched=None):
    """The infinite demand system y_2n = max(y_{y_2n}, n), y_2n+1 = y_6n+4."""

    def rhs_of(name):
        if touched is not None:
            touched.add(name)
        k = int(name[1:])
        if k % 2 == 0:
            n = k // 2

            def even(get, side=None):
                idx = get(name)
                return max(get(f"y{int(idx)}"), n)

            return even
        n = (k - 1) // 2
        return lambda get, side=None: get(f"y{6 * n + 4}")

    return EquationSystem(ops=natinf_ops(), rhs_of=rhs_of)


# ---------------------------------------------------------------------------
# Random monotone interval systems (expressions built from monotone parts)


def _gen_expr(rng: random.Random, names: list[str], depth: int):
    """Returns (rhs closure, syntactic refs)."""
    roll = rng.random()
    if depth <= 0 or roll < 0.35:
        if rng.random() < 0.45:
            lo = rng.randint(-4, 4)
            c = interval(lo, lo + rng.randint(0, 5))
            return (lambda get: c), []
        name = rng.choice(names)
        return (lambda get: get(name)), [name]
    if roll < 0.55:
        sub, refs = _gen_expr(rng, names, depth - 1)
        k = iv_const(rng.randint(0, 2))
        return (lambda get: iv_add(sub(get), k)), refs
    if roll < 0.8:
        a, ra = _gen_expr(rng, names, depth - 1)
        b, rb = _gen_expr(rng, names, depth - 1)
        return (lambda get: iv_join(a(get), b(get))), ra + [r for r in rb if r not in ra]
    if roll < 0.9:
        sub, refs = _gen_expr(rng, names, depth - 1)
        lo = rng.randint(-8, 0)
        c = interval(lo, lo + rng.randint(4, 16))
        return (lambda get: iv_meet(sub(get), c)), refs
    sub, refs = _gen_expr(rng, names, depth - 1)
    cmp = rng.choice(["<", "<=", ">", ">=", "!="])
    k = rng.randint(-5, 9)
    return (lambda get: guard(cmp, sub(get), k)), refs


def random_interval_system(rng: random.Random, n: int | None = None) -> EquationSystem:
    n = n or rng.randint(1, 6)
    names = [f"v{i}" for i in range(n)]
    equations = {}
    deps = {}
    for name in names:
        fn, refs = _gen_expr(rng, names, rng.randint(1, 3))
        equations[name] = (lambda get, side=None, fn=fn: fn(get))
        deps[name] = refs
    return static_system(interval_ops(), equations, deps)


# ---------------------------------------------------------------------------
# Random monotone systems over a bounded-height chain {0..h}


def chain_ops(h: int) -> DomainOps:
    return DomainOps(
        leq=lambda a, b: a <= b,
        eq=lambda a, b: a == b,
        join=max,
        widen=max,
        narrow=lambda a, b: b,
        bottom=0,
    )


def random_chain_system(rng: random.Random, h: int, n: int | None = None) -> EquationSystem:
    n = n or rng.randint(1, 8)
    names = [f"c{i}" for i in range(n)]
    equations = {}
    deps = {}
    for name in names:
        k = rng.randint(0, 2)
        refs = sorted(rng.sample(names, rng.randint(0, min(3, n))))
        base = rng.randint(0, h // 2)

        def fn(get, side=None, refs=refs, base=base, k=k):
            val = base
            for r in refs:
                val = max(val, min(get(r) + k, h))
            return val

        equations[name] = fn
        deps[name] = list(refs)
    return static_system(chain_ops(h), equations, deps)


def final_values(outcome, system) -> dict:
    return {u: outcome.assignment.get(u) for u in system.unknowns}
