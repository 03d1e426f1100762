"""Equation systems with instrumented evaluation and solution oracles.

A system maps unknowns to pure right-hand sides.  A right-hand side is a
callable ``f(get, side)`` that looks values up through ``get`` and may
emit contributions to other unknowns through ``side``; purity means the
sequence of lookups and emissions is a deterministic function of the
values returned by earlier lookups.

Systems may be demand-generated (the rhs mapping is a total function),
in which case only the local solvers apply; solvers that iterate
globally require the declared unknown list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

from .lattice import DomainOps

Unknown = Any
Value = Any
RhsFn = Callable[..., Value]


class PurityViolation(Exception):
    """A right-hand side broke the purity contract during evaluation."""


class BudgetExhausted(Exception):
    """An oracle iteration did not stabilize within its step budget."""


@dataclass(frozen=True)
class Contrib:
    """Pair unknown <source,target> holding one side contribution."""

    source: Unknown
    target: Unknown

    def __str__(self) -> str:
        return f"<{self.source},{self.target}>"


@dataclass
class EquationSystem:
    ops: DomainOps
    rhs_of: Callable[[Unknown], RhsFn]
    unknowns: list[Unknown] | None = None
    static_deps: dict[Unknown, list[Unknown]] | None = None


def static_system(ops: DomainOps, equations: Mapping[Unknown, RhsFn],
                  deps: Mapping[Unknown, Iterable[Unknown]] | None = None) -> EquationSystem:
    """System from a finite dict of right-hand sides, declared in dict order."""
    eqs = dict(equations)

    def rhs_of(x):
        return eqs[x]

    static = None if deps is None else {x: list(ds) for x, ds in deps.items()}
    return EquationSystem(ops=ops, rhs_of=rhs_of,
                          unknowns=list(eqs), static_deps=static)


class Assignment:
    """Partial map unknown -> value; reads outside the domain yield bottom."""

    __slots__ = ("bottom", "values")

    def __init__(self, bottom: Value, values: Mapping[Unknown, Value] | None = None):
        self.bottom = bottom
        self.values = dict(values or {})

    @property
    def dom(self):
        return self.values.keys()

    def get(self, u: Unknown) -> Value:
        return self.values.get(u, self.bottom)

    def __repr__(self) -> str:
        return f"Assignment({self.values!r})"


@dataclass
class EvalRecord:
    result: Value
    deps: list[Unknown]
    sides: list[tuple[Unknown, Value]]


def eval_rhs(system: EquationSystem, x: Unknown, rho: Assignment) -> EvalRecord:
    """Evaluate the rhs of ``x`` against the bottom-completed ``rho``.

    Records the lookup sequence (first occurrence order) and the side
    emissions.  Raises PurityViolation for a side effect on ``x`` itself,
    a second side effect on one target, or a lookup outside the declared
    static dependency set.
    """
    deps: list[Unknown] = []
    seen: set[Unknown] = set()
    sides: list[tuple[Unknown, Value]] = []
    targets: set[Unknown] = set()
    allowed = None
    if system.static_deps is not None and x in system.static_deps:
        allowed = set(system.static_deps[x])

    def get(y):
        if allowed is not None and y not in allowed:
            raise PurityViolation(f"{x} read {y} outside its declared deps")
        if y not in seen:
            seen.add(y)
            deps.append(y)
        return rho.get(y)

    def side(z, d):
        if z == x:
            raise PurityViolation(f"{x} side-effected its own left-hand side")
        if z in targets:
            raise PurityViolation(f"{x} side-effected {z} twice in one evaluation")
        targets.add(z)
        sides.append((z, d))

    result = system.rhs_of(x)(get, side)
    return EvalRecord(result=result, deps=deps, sides=sides)


def infl_from_deps(deps: Mapping[Unknown, Iterable[Unknown]]) -> dict[Unknown, list[Unknown]]:
    """Transpose a dependency map and add a self-loop for every unknown."""
    infl: dict[Unknown, list[Unknown]] = {y: [] for y in deps}
    for x, ds in deps.items():
        for y in ds:
            infl.setdefault(y, [])
            if x not in infl[y]:
                infl[y].append(x)
    for y, readers in infl.items():
        if y not in readers:
            readers.append(y)
    return infl


def _contribution(system: EquationSystem, rho: Assignment, x: Unknown, rec: EvalRecord) -> Value:
    """Own rhs value joined with all recorded pair contributions for x."""
    val = rec.result
    for u in rho.dom:
        if isinstance(u, Contrib) and u.target == x:
            val = system.ops.join(val, rho.get(u))
    return val


def is_box_solution(system: EquationSystem, rho: Assignment,
                    box: Callable[[Value, Value], Value]) -> bool:
    """Partial box-solution check: values stable under ``box`` and the
    domain closed under dynamic dependencies (and side targets)."""
    ops = system.ops
    for x in rho.dom:
        if isinstance(x, Contrib):
            continue
        rec = eval_rhs(system, x, rho)
        if any(d not in rho.dom for d in rec.deps):
            return False
        for z, d in rec.sides:
            if z not in rho.dom:
                return False
            if not ops.eq(rho.get(Contrib(x, z)), d):
                return False
        val = _contribution(system, rho, x, rec)
        if not ops.eq(rho.get(x), box(rho.get(x), val)):
            return False
    return True


def is_post_solution(system: EquationSystem, rho: Assignment) -> bool:
    """Every unknown dominates its rhs value; side targets dominate the
    emitted contributions."""
    ops = system.ops
    for x in rho.dom:
        if isinstance(x, Contrib):
            continue
        rec = eval_rhs(system, x, rho)
        if not ops.leq(rec.result, rho.get(x)):
            return False
        for z, d in rec.sides:
            if not ops.leq(d, rho.get(z)):
                return False
    return True


def _tarjan_sccs(nodes: list, succs: Mapping) -> list[list]:
    """Iterative Tarjan; components are returned in completion order."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    sccs: list[list] = []
    counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succs.get(root, ())))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succs.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def check_admissible(system: EquationSystem, points: Iterable[Unknown]) -> bool:
    """True iff every dependence cycle has its highest-order unknown in
    ``points``.  Implemented by SCC peeling: the maximal unknown of each
    nontrivial SCC must be selected; remove it and repeat."""
    if system.static_deps is None or system.unknowns is None:
        raise ValueError("admissibility needs static deps and a declared order")
    chosen = set(points)
    order = {x: i for i, x in enumerate(system.unknowns)}
    # edges u -> v whenever v reads u
    succs: dict = {x: [] for x in system.unknowns}
    for v, ds in system.static_deps.items():
        for u in ds:
            succs.setdefault(u, []).append(v)

    def peel(nodes: list) -> bool:
        nodeset = set(nodes)
        local = {n: [s for s in succs.get(n, ()) if s in nodeset] for n in nodes}
        for comp in _tarjan_sccs(nodes, local):
            if len(comp) == 1 and comp[0] not in local[comp[0]]:
                continue
            top = max(comp, key=lambda u: order[u])
            if top not in chosen:
                return False
            if not peel([n for n in comp if n != top]):
                return False
        return True

    return peel(list(system.unknowns))


def kleene_oracle(system: EquationSystem, max_steps: int = 1000) -> Assignment:
    """Naive Jacobi iteration from all-bottom until a stable full pass.

    Independent least-fixpoint reference for finite monotone systems;
    raises BudgetExhausted after ``max_steps`` passes.
    """
    if system.unknowns is None:
        raise ValueError("kleene_oracle needs a finite declared system")
    ops = system.ops
    rho = Assignment(ops.bottom, {x: ops.bottom for x in system.unknowns})
    for _ in range(max_steps):
        new = {x: eval_rhs(system, x, rho).result for x in system.unknowns}
        if all(ops.eq(new[x], rho.get(x)) for x in system.unknowns):
            return rho
        rho = Assignment(ops.bottom, new)
    raise BudgetExhausted(f"no fixpoint after {max_steps} passes")
