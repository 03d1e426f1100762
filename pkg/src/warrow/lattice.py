"""Abstract domains packaged as first-order operation tables.

Three concrete domains are provided: integer intervals, the naturals
extended with infinity, and pointwise environments mapping program
variables to intervals.  Solvers only ever touch values through a
``DomainOps`` table, so they stay generic both in the value type and in
the binary operator used to combine old and new values.

The combined operator ``warrow`` narrows while the iteration descends
and widens otherwise; it is the workhorse operator of the solver family.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

Value = Any

INF = float("inf")
NEG_INF = float("-inf")


class _Bot:
    """Shared least element of the interval and environment domains."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "bot"


BOT = _Bot()


@dataclass(frozen=True)
class DomainOps:
    """Operation table for one abstract domain.

    ``join`` must be an upper bound, ``widen`` must dominate both
    arguments and stabilize ascending chains, and ``narrow`` must
    bracket its arguments (``b <= narrow(a, b) <= a`` whenever
    ``b <= a``).
    """

    leq: Callable[[Value, Value], bool]
    eq: Callable[[Value, Value], bool]
    join: Callable[[Value, Value], Value]
    widen: Callable[[Value, Value], Value]
    narrow: Callable[[Value, Value], Value]
    bottom: Value


def warrow(ops: DomainOps, a: Value, b: Value) -> Value:
    """Combined widening/narrowing: narrow when descending, widen otherwise."""
    if ops.leq(b, a):
        return ops.narrow(a, b)
    return ops.widen(a, b)


# ---------------------------------------------------------------------------
# Integer intervals


@dataclass(frozen=True)
class Interval:
    """Non-empty integer interval; bounds may be -inf/+inf. Empty is BOT."""

    lo: int | float
    hi: int | float

    def __repr__(self) -> str:
        return f"[{_bound(self.lo)},{_bound(self.hi)}]"


def _bound(b) -> str:
    if b == INF:
        return "inf"
    if b == NEG_INF:
        return "-inf"
    return str(b)


def interval(lo, hi) -> Interval | _Bot:
    # canonical: any empty range collapses to the shared bottom
    if lo > hi or lo == INF or hi == NEG_INF:
        return BOT
    return Interval(lo, hi)


TOP = Interval(NEG_INF, INF)


def iv_is_bot(a) -> bool:
    return a is BOT


def iv_leq(a, b) -> bool:
    if a is BOT:
        return True
    if b is BOT:
        return False
    return b.lo <= a.lo and a.hi <= b.hi


def iv_eq(a, b) -> bool:
    return a == b or (a is BOT and b is BOT)


def iv_join(a, b):
    if a is BOT:
        return b
    if b is BOT:
        return a
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def iv_meet(a, b):
    if a is BOT or b is BOT:
        return BOT
    return interval(max(a.lo, b.lo), min(a.hi, b.hi))


def iv_widen(a, b):
    """Drop any unstable bound to the corresponding infinity."""
    if a is BOT:
        return b
    if b is BOT:
        return a
    lo = NEG_INF if b.lo < a.lo else a.lo
    hi = INF if b.hi > a.hi else a.hi
    return Interval(lo, hi)


def iv_narrow(a, b):
    """Replace only the infinite bounds of ``a`` by those of ``b``."""
    if a is BOT or b is BOT:
        return BOT
    lo = b.lo if a.lo == NEG_INF else a.lo
    hi = b.hi if a.hi == INF else a.hi
    return interval(lo, hi)


def iv_add(a, b):
    if a is BOT or b is BOT:
        return BOT
    return Interval(a.lo + b.lo, a.hi + b.hi)


def iv_sub(a, b):
    if a is BOT or b is BOT:
        return BOT
    return Interval(a.lo - b.hi, a.hi - b.lo)


def iv_const(k: int) -> Interval:
    return Interval(k, k)


def interval_arith(op: str, a, b=None):
    """Exact interval arithmetic with BOT absorbing."""
    if op == "add":
        return iv_add(a, b)
    if op == "sub":
        return iv_sub(a, b)
    if op == "const":
        return iv_const(a)
    raise ValueError(f"unknown arithmetic op {op!r}")


_GUARD_RANGE = {
    "<": lambda k: Interval(NEG_INF, k - 1),
    "<=": lambda k: Interval(NEG_INF, k),
    ">": lambda k: Interval(k + 1, INF),
    ">=": lambda k: Interval(k, INF),
    "==": lambda k: Interval(k, k),
}


def guard(cmp: str, a, k: int):
    """Tightest interval containing ``{v in a | v cmp k}``."""
    if a is BOT:
        return BOT
    if cmp in _GUARD_RANGE:
        return iv_meet(a, _GUARD_RANGE[cmp](k))
    if cmp == "!=":
        if a.lo == a.hi == k:
            return BOT
        if a.lo == k:
            return interval(k + 1, a.hi)
        if a.hi == k:
            return interval(a.lo, k - 1)
        return a
    raise ValueError(f"unknown comparison {cmp!r}")


def interval_ops() -> DomainOps:
    return DomainOps(
        leq=iv_leq, eq=iv_eq, join=iv_join, widen=iv_widen, narrow=iv_narrow,
        bottom=BOT,
    )


# ---------------------------------------------------------------------------
# Naturals with infinity
#
# Values are plain non-negative ints plus float("inf"); the least element
# is 0.  Widening jumps straight to infinity on any growth, narrowing can
# only improve an infinite value.


def nat_leq(a, b) -> bool:
    return a <= b


def nat_eq(a, b) -> bool:
    return a == b


def nat_join(a, b):
    return max(a, b)


def nat_meet(a, b):
    return min(a, b)


def nat_widen(a, b):
    return a if a == b else INF


def nat_narrow(a, b):
    return b if a == INF else a


def nat_add(a, b):
    return a + b


def natinf_ops() -> DomainOps:
    return DomainOps(
        leq=nat_leq, eq=nat_eq, join=nat_join, widen=nat_widen,
        narrow=nat_narrow, bottom=0,
    )


# ---------------------------------------------------------------------------
# Pointwise environments over a fixed variable set


@dataclass(frozen=True)
class Env:
    """Total map from declared variables to non-bottom intervals.

    The bottom environment is represented by the shared BOT value; a
    variable going empty collapses the whole environment.
    """

    names: tuple[str, ...]
    vals: tuple[Interval, ...]

    def get(self, name: str) -> Interval:
        return self.vals[self.names.index(name)]

    def __repr__(self) -> str:
        inner = ",".join(f"{n}:{v!r}" for n, v in zip(self.names, self.vals))
        return "{" + inner + "}"


def make_env(names, mapping) -> Env | _Bot:
    """Build an environment; unnamed variables default to TOP, any BOT collapses."""
    vals = []
    for n in names:
        v = mapping.get(n, TOP)
        if v is BOT:
            return BOT
        vals.append(v)
    return Env(tuple(names), tuple(vals))


def env_top(names: tuple[str, ...]) -> Env:
    return Env(tuple(names), tuple(TOP for _ in names))


def env_set(e, name: str, v):
    if e is BOT or v is BOT:
        return BOT
    i = e.names.index(name)
    vals = e.vals[:i] + (v,) + e.vals[i + 1:]
    return Env(e.names, vals)


def _env_pointwise(f):
    def op(a, b):
        if a is BOT:
            return b
        if b is BOT:
            return a
        vals = tuple(f(x, y) for x, y in zip(a.vals, b.vals))
        if any(v is BOT for v in vals):
            return BOT
        return Env(a.names, vals)

    return op


env_join = _env_pointwise(iv_join)
env_widen = _env_pointwise(iv_widen)
env_add = _env_pointwise(iv_add)


def env_leq(a, b) -> bool:
    if a is BOT:
        return True
    if b is BOT:
        return False
    return all(iv_leq(x, y) for x, y in zip(a.vals, b.vals))


def env_eq(a, b) -> bool:
    return a == b or (a is BOT and b is BOT)


def env_meet(a, b):
    if a is BOT or b is BOT:
        return BOT
    vals = tuple(iv_meet(x, y) for x, y in zip(a.vals, b.vals))
    if any(v is BOT for v in vals):
        return BOT
    return Env(a.names, vals)


def env_narrow(a, b):
    if a is BOT or b is BOT:
        return BOT
    vals = tuple(iv_narrow(x, y) for x, y in zip(a.vals, b.vals))
    if any(v is BOT for v in vals):
        return BOT
    return Env(a.names, vals)


def env_ops(names) -> DomainOps:
    return DomainOps(
        leq=env_leq, eq=env_eq, join=env_join, widen=env_widen,
        narrow=env_narrow, bottom=BOT,
    )


def format_value(v) -> str:
    """Canonical text form used by the CLI: bot, inf, [lo,hi], {x:[..],..}."""
    if v is BOT:
        return "bot"
    if isinstance(v, Interval):
        return repr(v)
    if isinstance(v, Env):
        return repr(v)
    if v == INF:
        return "inf"
    return str(v)
