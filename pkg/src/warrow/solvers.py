"""Fixpoint solvers generic in the value-combination operator.

Global strategies (round-robin, worklist, their structured variants and
the two-phase baseline) iterate over a declared finite unknown list.
Local strategies (RLD and the SLR family) explore unknowns on demand
from a queried root and also handle side-effecting right-hand sides.

Every solver counts right-hand-side evaluations against a budget, so a
divergent iteration surfaces as a BudgetExhausted outcome that tests can
assert on instead of a hang.
"""

from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable

from .equations import (
    Assignment,
    Contrib,
    EquationSystem,
    infl_from_deps,
)
from .lattice import DomainOps

Unknown = Any
Value = Any


class Status(Enum):
    SOLVED = "Solved"
    BUDGET_EXHAUSTED = "BudgetExhausted"


class RequiresFiniteSystem(Exception):
    pass


class RequiresStaticDeps(Exception):
    pass


class SideEffectsUnsupported(Exception):
    """A side effect was emitted under a solver without side support."""


@dataclass
class SolverConfig:
    box: str = "warrow"  # join | widen | narrow | warrow
    budget: int = 100_000
    worklist_policy: str = "lifo"  # W only: lifo | fifo
    box_points: frozenset | set | None = None  # SRR/SW localized variant
    switch_bound: int | None = None  # per-unknown narrow->widen switch cap
    restart_bound: int | None = 3  # SLR4: cap on non-improving restarts


@dataclass
class SolveOutcome:
    status: Status
    assignment: Assignment
    rhs_evals: int
    updates: int
    trace: list[tuple[Unknown, Value, Value]]

    @property
    def stats(self) -> tuple[int, int]:
        return (self.rhs_evals, self.updates)


def apply_switch_bound(ops: DomainOps, bound: int | None) -> Callable[[Unknown, Value, Value], Value]:
    """Per-unknown combined operator with a cap on narrow->widen switches.

    Tracks the iteration phase of each unknown; once an unknown has
    switched from narrowing back to widening ``bound`` times, its
    narrowing side degrades to "keep the old value", which freezes the
    unknown at a dominating value and forces termination.
    """
    phase: dict[Unknown, str] = {}
    switches: dict[Unknown, int] = {}

    def box(x, a, b):
        if ops.leq(b, a):
            phase[x] = "narrow"
            if bound is not None and switches.get(x, 0) >= bound:
                return a
            return ops.narrow(a, b)
        if phase.get(x) == "narrow":
            switches[x] = switches.get(x, 0) + 1
        phase[x] = "widen"
        return ops.widen(a, b)

    return box


def _rho0_fn(system: EquationSystem, rho0) -> Callable[[Unknown], Value]:
    bottom = system.ops.bottom
    if rho0 is None:
        return lambda y: bottom
    if callable(rho0):
        return rho0
    if isinstance(rho0, Assignment):
        return rho0.get
    return lambda y: rho0.get(y, bottom)


class _OutOfBudget(Exception):
    pass


class _Run:
    """Shared per-run instrumentation: budget, operator state, trace."""

    def __init__(self, system: EquationSystem, config: SolverConfig):
        self.system = system
        self.ops = system.ops
        self.config = config
        self.evals = 0
        self.trace: list[tuple[Unknown, Value, Value]] = []
        mode = config.box
        if mode == "warrow":
            self.box = apply_switch_bound(self.ops, config.switch_bound)
        elif mode in ("join", "widen", "narrow"):
            op = getattr(self.ops, mode)
            self.box = lambda x, a, b: op(a, b)
        else:
            raise ValueError(f"unknown box operator {mode!r}")

    def call(self, x: Unknown, get, side=None):
        if self.evals >= self.config.budget:
            raise _OutOfBudget()
        self.evals += 1
        if side is None:
            def side(z, d):
                raise SideEffectsUnsupported(
                    f"rhs of {x} emitted a side effect; use an slr*plus solver")
        return self.system.rhs_of(x)(get, side)

    def record(self, x, old, new):
        self.trace.append((x, old, new))

    def outcome(self, status: Status, rho: dict) -> SolveOutcome:
        return SolveOutcome(
            status=status,
            assignment=Assignment(self.ops.bottom, rho),
            rhs_evals=self.evals,
            updates=len(self.trace),
            trace=self.trace,
        )


def _require_finite(system: EquationSystem) -> list[Unknown]:
    if system.unknowns is None:
        raise RequiresFiniteSystem("this solver needs the declared unknown list")
    return list(system.unknowns)


def _require_deps(system: EquationSystem) -> dict[Unknown, list[Unknown]]:
    if system.static_deps is None:
        raise RequiresStaticDeps("this solver needs static dependency sets")
    return system.static_deps


def solve_rr(system: EquationSystem, rho0=None, config: SolverConfig | None = None) -> SolveOutcome:
    """Round-robin: full passes in declared order until a clean pass."""
    config = config or SolverConfig()
    xs = _require_finite(system)
    run = _Run(system, config)
    ops = run.ops
    rho = {x: _rho0_fn(system, rho0)(x) for x in xs}
    get = lambda y: rho.get(y, ops.bottom)
    try:
        while True:
            dirty = False
            for x in xs:
                new = run.box(x, rho[x], run.call(x, get))
                if not ops.eq(new, rho[x]):
                    run.record(x, rho[x], new)
                    rho[x] = new
                    dirty = True
            if not dirty:
                return run.outcome(Status.SOLVED, rho)
    except _OutOfBudget:
        return run.outcome(Status.BUDGET_EXHAUSTED, rho)


def solve_w(system: EquationSystem, rho0=None, config: SolverConfig | None = None) -> SolveOutcome:
    """Worklist iteration; on a change the influenced set is re-queued.

    The lifo policy prepends the influence block (the updated unknown
    first) at the front, deduplicating; fifo appends missing unknowns at
    the back.
    """
    config = config or SolverConfig()
    xs = _require_finite(system)
    deps = _require_deps(system)
    infl = infl_from_deps(deps)
    run = _Run(system, config)
    ops = run.ops
    rho = {x: _rho0_fn(system, rho0)(x) for x in xs}
    get = lambda y: rho.get(y, ops.bottom)
    work = list(xs)
    try:
        while work:
            x = work.pop(0)
            new = run.box(x, rho[x], run.call(x, get))
            if not ops.eq(new, rho[x]):
                run.record(x, rho[x], new)
                rho[x] = new
                block = [x] + [r for r in infl.get(x, []) if r != x]
                if config.worklist_policy == "lifo":
                    members = set(block)
                    work = block + [w for w in work if w not in members]
                else:
                    present = set(work)
                    work.extend(r for r in block if r not in present)
        return run.outcome(Status.SOLVED, rho)
    except _OutOfBudget:
        return run.outcome(Status.BUDGET_EXHAUSTED, rho)


def solve_srr(system: EquationSystem, rho0=None, config: SolverConfig | None = None) -> SolveOutcome:
    """Structured round-robin: solve(i) stabilizes all lower unknowns
    before each update of unknown i; entered at the highest index."""
    config = config or SolverConfig()
    xs = _require_finite(system)
    run = _Run(system, config)
    ops = run.ops
    points = config.box_points
    rho = {x: _rho0_fn(system, rho0)(x) for x in xs}
    get = lambda y: rho.get(y, ops.bottom)

    def solve(i: int) -> None:
        if i == 0:
            return
        x = xs[i - 1]
        while True:
            solve(i - 1)
            val = run.call(x, get)
            if points is None or x in points:
                new = run.box(x, rho[x], val)
            else:
                new = val
            if ops.eq(new, rho[x]):
                return
            run.record(x, rho[x], new)
            rho[x] = new

    try:
        solve(len(xs))
        return run.outcome(Status.SOLVED, rho)
    except _OutOfBudget:
        return run.outcome(Status.BUDGET_EXHAUSTED, rho)


def solve_sw(system: EquationSystem, rho0=None, config: SolverConfig | None = None) -> SolveOutcome:
    """Structured worklist: a priority queue over the declared order,
    always re-evaluating the pending unknown with the least index."""
    config = config or SolverConfig()
    xs = _require_finite(system)
    deps = _require_deps(system)
    infl = infl_from_deps(deps)
    run = _Run(system, config)
    ops = run.ops
    points = config.box_points
    rho = {x: _rho0_fn(system, rho0)(x) for x in xs}
    get = lambda y: rho.get(y, ops.bottom)
    index = {x: i for i, x in enumerate(xs)}
    heap: list[tuple[int, Unknown]] = []
    queued: set[Unknown] = set()

    def add(y):
        if y in queued:
            return
        queued.add(y)
        heapq.heappush(heap, (index[y], y))

    for x in xs:
        add(x)
    try:
        while heap:
            _, x = heapq.heappop(heap)
            queued.discard(x)
            val = run.call(x, get)
            if points is None or x in points:
                new = run.box(x, rho[x], val)
            else:
                new = val
            if not ops.eq(new, rho[x]):
                run.record(x, rho[x], new)
                rho[x] = new
                for r in infl.get(x, []):
                    add(r)
        return run.outcome(Status.SOLVED, rho)
    except _OutOfBudget:
        return run.outcome(Status.BUDGET_EXHAUSTED, rho)


def solve_two_phase(system: EquationSystem, rho0=None, config: SolverConfig | None = None) -> SolveOutcome:
    """Baseline: one widening phase (structured worklist with the widen
    operator) to a post solution, then narrowing passes until stable."""
    config = config or SolverConfig()
    xs = _require_finite(system)
    deps = _require_deps(system)
    infl = infl_from_deps(deps)
    run = _Run(system, config)
    ops = run.ops
    rho = {x: _rho0_fn(system, rho0)(x) for x in xs}
    get = lambda y: rho.get(y, ops.bottom)
    index = {x: i for i, x in enumerate(xs)}
    heap: list[tuple[int, Unknown]] = []
    queued: set[Unknown] = set()

    def add(y):
        if y not in queued:
            queued.add(y)
            heapq.heappush(heap, (index[y], y))

    for x in xs:
        add(x)
    try:
        while heap:
            _, x = heapq.heappop(heap)
            queued.discard(x)
            new = ops.widen(rho[x], run.call(x, get))
            if not ops.eq(new, rho[x]):
                run.record(x, rho[x], new)
                rho[x] = new
                for r in infl.get(x, []):
                    add(r)
        while True:
            dirty = False
            for x in xs:
                new = ops.narrow(rho[x], run.call(x, get))
                if not ops.eq(new, rho[x]):
                    run.record(x, rho[x], new)
                    rho[x] = new
                    dirty = True
            if not dirty:
                return run.outcome(Status.SOLVED, rho)
    except _OutOfBudget:
        return run.outcome(Status.BUDGET_EXHAUSTED, rho)


def solve_rld(system: EquationSystem, rho0=None, x0: Unknown = None,
              config: SolverConfig | None = None) -> SolveOutcome:
    """Demand-driven recursive baseline, transcribed with the combination
    operator fixed to join.

    Kept as printed: recursive solving happens on every lookup, so one
    rhs evaluation may nest inside another and the run is not a sequence
    of atomic updates.  Not generic in the operator; use the SLR family
    for that.
    """
    config = config or SolverConfig()
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    run = _Run(system, config)
    ops = run.ops
    r0 = _rho0_fn(system, rho0)
    rho: dict[Unknown, Value] = {}
    infl: dict[Unknown, dict] = {}
    stable: set[Unknown] = set()
    dom: set[Unknown] = set()

    def value(y):
        if y not in rho:
            rho[y] = r0(y)
        return rho[y]

    def solve(x):
        dom.add(x)
        if x in stable:
            return
        stable.add(x)

        def get(y):
            solve(y)
            infl.setdefault(y, {})[x] = None
            return value(y)

        tmp = ops.join(value(x), run.call(x, get))
        if not ops.eq(tmp, rho[x]):
            waiting = list(infl.get(x, ()))
            run.record(x, rho[x], tmp)
            rho[x] = tmp
            infl[x] = {}
            stable.difference_update(waiting)
            for y in waiting:
                solve(y)

    try:
        solve(x0)
        return run.outcome(Status.SOLVED, {u: rho[u] for u in rho if u in dom})
    except _OutOfBudget:
        return run.outcome(Status.BUDGET_EXHAUSTED, {u: rho[u] for u in rho if u in dom})


class _Slr:
    """Engine for the structured local recursive solver family.

    ``localize``: 0 applies the operator at every unknown, 1 only at
    dynamically detected widening points, 2 additionally removes an
    unknown from the widening-point set whenever it is solved.
    ``restart`` resets lower-priority unknowns after a descending step
    at a widening point.  ``side`` enables side-effecting right-hand
    sides; ``side_wp`` additionally turns every side-effected unknown
    into a widening point.
    """

    def __init__(self, system: EquationSystem, rho0, config: SolverConfig,
                 localize: int, restart: bool = False,
                 side: bool = False, side_wp: bool = False):
        self.run = _Run(system, config)
        self.ops = system.ops
        self.system = system
        self.config = config
        self.r0 = _rho0_fn(system, rho0)
        self.localize = localize
        self.restart_enabled = restart
        self.side_enabled = side
        self.side_wp = side_wp

        self.rho: dict[Unknown, Value] = {}
        self.infl: dict[Unknown, dict] = {}
        self.key: dict[Unknown, int] = {}
        self.count = 0
        self.dom: set[Unknown] = set()
        self.stable: set[Unknown] = set()
        self.wpoint: set[Unknown] = set()
        self.contribs: dict[Unknown, dict] = {}  # set[y]: contributing unknowns
        self.heap: list[tuple[int, Unknown]] = []
        self.queued: set[Unknown] = set()
        # restart-bound bookkeeping (SLR4)
        self.restarts: dict[Unknown, int] = {}
        self.last_restart_value: dict[Unknown, Value] = {}

    # -- basic machinery ---------------------------------------------------

    def init(self, y):
        self.dom.add(y)
        self.key[y] = -self.count
        self.count += 1
        self.infl[y] = {y: None}
        self.rho[y] = self.r0(y)
        if self.side_enabled:
            self.contribs.setdefault(y, {})

    def add(self, y):
        if y not in self.queued:
            self.queued.add(y)
            heapq.heappush(self.heap, (self.key[y], y))

    def extract_min(self):
        k, y = heapq.heappop(self.heap)
        self.queued.discard(y)
        return y

    def min_key(self):
        return self.heap[0][0]

    def set_value(self, x, v):
        if not self.ops.eq(self.rho[x], v):
            self.run.record(x, self.rho[x], v)
        self.rho[x] = v

    # -- rhs argument functions --------------------------------------------

    def eval(self, x, y):
        if y not in self.dom:
            self.init(y)
            self.solve(y)
        if self.localize and self.key[x] <= self.key[y]:
            self.wpoint.add(y)
        self.infl[y][x] = None
        return self.rho[y]

    def side(self, x, y, d):
        if self.side_wp:
            self.wpoint.add(y)
        pair = Contrib(x, y)
        if pair not in self.dom:
            self.dom.add(pair)
            self.key[pair] = -self.count
            self.count += 1
            self.rho[pair] = self.ops.bottom
        if self.ops.eq(d, self.rho[pair]):
            return
        self.set_value(pair, d)
        if y in self.dom:
            self.contribs[y][x] = None
            self.stable.discard(y)
            self.add(y)
        else:
            self.init(y)
            self.contribs[y] = {x: None}
            self.solve(y)

    # -- restarting (SLR4) --------------------------------------------------

    def restart(self, r, y):
        self.add(y)
        self.stable.discard(y)
        if self.key[y] < r:
            self.set_value(y, self.r0(y))
            waiting = list(self.infl[y])
            self.infl[y] = {}
            for z in waiting:
                self.restart(r, z)

    def _restart_allowed(self, x, tmp) -> bool:
        bound = self.config.restart_bound
        if bound is None:
            return True
        prev = self.last_restart_value.get(x)
        if prev is not None and not (self.ops.leq(tmp, prev) and not self.ops.eq(tmp, prev)):
            self.restarts[x] = self.restarts.get(x, 0) + 1
        self.last_restart_value[x] = tmp
        return self.restarts.get(x, 0) < bound

    # -- main solve ---------------------------------------------------------

    def solve(self, x):
        wpx = False
        if self.localize:
            wpx = x in self.wpoint
            if self.localize >= 2:
                self.wpoint.discard(x)
        if x in self.stable:
            return
        self.stable.add(x)
        side = (lambda z, d: self.side(x, z, d)) if self.side_enabled else None
        val = self.run.call(x, lambda y: self.eval(x, y), side)
        if self.side_enabled:
            for z in self.contribs.get(x, ()):
                val = self.ops.join(val, self.rho.get(Contrib(z, x), self.ops.bottom))
        if self.localize == 0 or wpx:
            tmp = self.run.box(x, self.rho[x], val)
        else:
            tmp = val
        if not self.ops.eq(tmp, self.rho[x]):
            if (self.restart_enabled and wpx and self.ops.leq(tmp, self.rho[x])
                    and self._restart_allowed(x, tmp)):
                for z in list(self.infl[x]) + ([x] if x not in self.infl[x] else []):
                    self.restart(self.key[x], z)
            else:
                if self.localize == 0 or wpx:
                    waiting = list(self.infl[x])
                    if x not in self.infl[x]:
                        waiting.append(x)
                else:
                    waiting = list(self.infl[x])
                for y in waiting:
                    self.add(y)
                self.stable.difference_update(waiting)
            self.infl[x] = {}
            self.set_value(x, tmp)
            while self.heap and self.min_key() <= self.key[x]:
                self.solve(self.extract_min())

    def run_from(self, x0) -> SolveOutcome:
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
        try:
            self.init(x0)
            self.solve(x0)
            # Drain anything still pending (a higher-priority unknown can
            # stay queued when the root's own evaluation did not change it).
            while self.heap:
                self.solve(self.extract_min())
            status = Status.SOLVED
        except _OutOfBudget:
            status = Status.BUDGET_EXHAUSTED
        rho = {u: self.rho[u] for u in self.rho if u in self.dom}
        return self.run.outcome(status, rho)


def solve_slr1(system, rho0=None, x0=None, config=None) -> SolveOutcome:
    """Structured local recursive solver; the operator applies everywhere."""
    return _Slr(system, rho0, config or SolverConfig(), localize=0).run_from(x0)


def solve_slr2(system, rho0=None, x0=None, config=None) -> SolveOutcome:
    """SLR with plain localized widening: the operator applies only at
    dynamically detected widening points (targets of back-edges)."""
    return _Slr(system, rho0, config or SolverConfig(), localize=1).run_from(x0)


def solve_slr3(system, rho0=None, x0=None, config=None) -> SolveOutcome:
    """SLR with simple localized widening: widening points can also be
    dropped again, so an inner loop stabilized once loses its point."""
    return _Slr(system, rho0, config or SolverConfig(), localize=2).run_from(x0)


def solve_slr4(system, rho0=None, x0=None, config=None) -> SolveOutcome:
    """SLR3 plus restarting: after a descending step at a widening point,
    all lower-priority unknowns it influences are reset to their initial
    values and re-solved.  Termination is no longer guaranteed, so the
    restart bound and budget govern."""
    return _Slr(system, rho0, config or SolverConfig(), localize=2,
                restart=True).run_from(x0)


def solve_slr1_plus(system, rho0=None, x0=None, config=None) -> SolveOutcome:
    """SLR1 for side-effecting systems: contributions land in fresh pair
    unknowns and are joined into the target's right-hand side."""
    return _Slr(system, rho0, config or SolverConfig(), localize=0,
                side=True).run_from(x0)


def solve_slr3_plus(system, rho0=None, x0=None, config=None) -> SolveOutcome:
    """SLR3 for side-effecting systems; every side-effected unknown is
    forced into the widening-point set on each emission."""
    return _Slr(system, rho0, config or SolverConfig(), localize=2,
                side=True, side_wp=True).run_from(x0)


SOLVERS: dict[str, Callable] = {
    "rr": solve_rr,
    "w": solve_w,
    "srr": solve_srr,
    "sw": solve_sw,
    "twophase": solve_two_phase,
}

LOCAL_SOLVERS: dict[str, Callable] = {
    "rld": solve_rld,
    "slr1": solve_slr1,
    "slr2": solve_slr2,
    "slr3": solve_slr3,
    "slr4": solve_slr4,
    "slr1plus": solve_slr1_plus,
    "slr3plus": solve_slr3_plus,
}
