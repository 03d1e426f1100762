"""Weak topological orderings and the recursive component solver.

A hierarchical ordering is a well-parenthesized permutation of the
unknowns; the first element of each parenthesized component is its head.
It is a weak topological ordering for a dependence relation when every
dependence points forward or back to an enclosing head.  Construction
follows the classic recursive strongly-connected-component strategy:
order the components topologically, pick the earliest unknown of each
nontrivial component as its head, and recurse on the rest.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from .equations import EquationSystem, _tarjan_sccs
from .solvers import SolveOutcome, SolverConfig, Status, _OutOfBudget, _rho0_fn, _Run

Unknown = Any


class RequiresValidWto(Exception):
    pass


class HierarchicalOrdering:
    """Nested-list form: a component is a list whose first item is its head.

    Derived views: the flat element order, each element's position, the
    component span table, and the enclosing-head sets.
    """

    def __init__(self, items: Iterable):
        self.items = list(items)
        self.flat: list[Unknown] = []
        self.spans: list[tuple[int, int, Unknown]] = []  # (start, end, head)
        self._build(self.items)
        self.pos = {u: i for i, u in enumerate(self.flat)}
        if len(self.pos) != len(self.flat):
            raise ValueError("duplicate element in hierarchical ordering")
        self.omega: dict[Unknown, set[Unknown]] = {u: set() for u in self.flat}
        for s, e, head in self.spans:
            for i in range(s, e + 1):
                self.omega[self.flat[i]].add(head)

    def _build(self, items) -> None:
        for it in items:
            if isinstance(it, (list, tuple)):
                if not it:
                    raise ValueError("empty component")
                if isinstance(it[0], (list, tuple)):
                    raise ValueError("component head must be an element")
                start = len(self.flat)
                self._build(it)
                self.spans.append((start, len(self.flat) - 1, self.flat[start]))
            else:
                self.flat.append(it)

    def heads(self) -> set[Unknown]:
        return {h for _, _, h in self.spans}

    def __str__(self) -> str:
        def fmt(items):
            out = []
            for it in items:
                if isinstance(it, (list, tuple)):
                    out.append("(" + fmt(it) + ")")
                else:
                    out.append(str(it))
            return " ".join(out)

        return fmt(self.items)


def parse_wto(text: str) -> HierarchicalOrdering:
    """Parse the printed form, e.g. ``1 2 (3 (4 5)) 6``."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    stack: list[list] = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            comp = stack.pop()
            if not stack:
                raise ValueError("unbalanced parentheses")
            stack[-1].append(comp)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced parentheses")
    return HierarchicalOrdering(stack[0])


@dataclass
class WtoOps:
    head: Callable[[Unknown], bool]
    next: Callable[[Unknown], Unknown | None]
    nextinc: Callable[[Unknown], Unknown | None]
    skip: Callable[[Unknown], Unknown | None]


def wto_ops(ho: HierarchicalOrdering) -> WtoOps:
    flat = ho.flat
    pos = ho.pos
    span_of_head = {h: (s, e) for s, e, h in ho.spans}
    component_end = {}  # position -> True when some component ends there
    for s, e, _ in ho.spans:
        component_end[e] = True

    def innermost(u) -> tuple[int, int]:
        best = (0, len(flat) - 1)
        for s, e, _ in ho.spans:
            if s <= pos[u] <= e and (e - s) < (best[1] - best[0]):
                best = (s, e)
        return best

    def head(u) -> bool:
        return u in span_of_head

    def nxt(u):
        i = pos[u] + 1
        return flat[i] if i < len(flat) else None

    def nextinc(u):
        if component_end.get(pos[u]):
            return None
        return nxt(u)

    def skip(u):
        j = nxt(u)
        if j is None or j not in span_of_head:
            return None
        _, end = span_of_head[j]
        if end + 1 >= len(flat):
            return None
        s, e = innermost(u)
        if not (s <= end + 1 <= e):
            return None
        return flat[end + 1]

    return WtoOps(head=head, next=nxt, nextinc=nextinc, skip=skip)


def _edges_from_deps(deps: Mapping[Unknown, Iterable[Unknown]]) -> tuple[list, dict]:
    nodes: list = []
    for v in deps:
        if v not in nodes:
            nodes.append(v)
    for v in list(deps):
        for u in deps[v]:
            if u not in nodes:
                nodes.append(u)
    succs: dict = {n: [] for n in nodes}
    for v, ds in deps.items():
        for u in ds:
            if v not in succs[u]:
                succs[u].append(v)
    return nodes, succs


def build_wto(deps: Mapping[Unknown, Iterable[Unknown]],
              order: list[Unknown] | None = None) -> HierarchicalOrdering:
    """Construct a weak topological ordering for a dependence map.

    Nontrivial strongly connected components become parenthesized
    components headed by their earliest unknown (in the declared order);
    the head is peeled off and the remainder ordered recursively.
    """
    nodes, succs = _edges_from_deps(deps)
    if order is not None:
        ordered = [u for u in order if u in succs]
        ordered += [u for u in nodes if u not in set(ordered)]
        nodes = ordered
    rank = {u: i for i, u in enumerate(nodes)}

    def arrange(sub: list) -> list:
        subset = set(sub)
        local = {n: [s for s in succs[n] if s in subset] for n in sub}
        sccs = _tarjan_sccs(sub, local)
        comp_of = {}
        for ci, comp in enumerate(sccs):
            for n in comp:
                comp_of[n] = ci
        # condensation, topologically sorted with the earliest-unknown tie-break
        indeg = [0] * len(sccs)
        csucc: list[set] = [set() for _ in sccs]
        for n in sub:
            for s in local[n]:
                a, b = comp_of[n], comp_of[s]
                if a != b and b not in csucc[a]:
                    csucc[a].add(b)
                    indeg[b] += 1
        ready = [(min(rank[n] for n in comp), ci) for ci, comp in enumerate(sccs) if indeg[ci] == 0]
        heapq.heapify(ready)
        out = []
        while ready:
            _, ci = heapq.heappop(ready)
            comp = sorted(sccs[ci], key=lambda n: rank[n])
            if len(comp) == 1 and comp[0] not in local[comp[0]]:
                out.append(comp[0])
            else:
                head = comp[0]
                out.append([head] + arrange([n for n in comp if n != head]))
            for nxt in csucc[ci]:
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    heapq.heappush(ready, (min(rank[n] for n in sccs[nxt]), nxt))
        return out

    return HierarchicalOrdering(arrange(nodes))


def check_wto(ho: HierarchicalOrdering, deps: Mapping[Unknown, Iterable[Unknown]]) -> bool:
    """Definitional check: every dependence points strictly forward or
    back to an enclosing head."""
    pos = ho.pos
    for v, ds in deps.items():
        for u in ds:
            if u not in pos or v not in pos:
                return False
            if pos[u] < pos[v]:
                continue
            if v not in ho.omega[u]:
                return False
    return True


def solve_rec(system: EquationSystem, rho0=None,
              ho: HierarchicalOrdering | None = None,
              config: SolverConfig | None = None) -> SolveOutcome:
    """Recursive iteration over a weak topological ordering: component
    heads iterate with the combination operator until their component
    stabilizes, inner components before outer ones; other unknowns get
    plain assignments."""
    config = config or SolverConfig()
    if system.static_deps is None:
        raise RequiresValidWto("solve_rec needs static deps to validate the ordering")
    if ho is None:
        ho = build_wto(system.static_deps, system.unknowns)
    if not check_wto(ho, system.static_deps):
        raise RequiresValidWto("ordering is not a weak topological ordering for the system")
    ops = wto_ops(ho)
    run = _Run(system, config)
    dops = run.ops
    rho = {u: _rho0_fn(system, rho0)(u) for u in ho.flat}
    get = lambda y: rho.get(y, dops.bottom)

    def update_box(u):
        new = run.box(u, rho[u], run.call(u, get))
        if not dops.eq(new, rho[u]):
            run.record(u, rho[u], new)
            rho[u] = new

    def update_plain(u):
        new = run.call(u, get)
        if not dops.eq(new, rho[u]):
            run.record(u, rho[u], new)
            rho[u] = new

    def solve(u):
        while u is not None:
            if not ops.head(u):
                update_plain(u)
                u = ops.next(u)
            else:
                update_box(u)
                while True:
                    old = rho[u]
                    solve(ops.next(u))
                    update_box(u)
                    if dops.eq(rho[u], old):
                        break
                u = ops.skip(u)

    try:
        if ho.flat:
            solve(ho.flat[0])
        return run.outcome(Status.SOLVED, rho)
    except _OutOfBudget:
        return run.outcome(Status.BUDGET_EXHAUSTED, rho)
