"""Line-based equation files.

Format::

    # comment
    domain interval        (or natinf)
    x1 = x2
    x2 = x3 + 1
    x3 = min(x1 + 1, 4)
    x4 = guard(<=, 9, x2)
    x5 = ite0(x4, 1, 0)

Expressions are sums of terms; terms are integer constants, unknown
references, or calls to join/meet/min/max/guard/ite0/widenconst.  The
declared unknown order is the file order.  Static dependencies are the
syntactic references of each right-hand side.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import lattice as lat
from .equations import EquationSystem, static_system


class EqParseError(Exception):
    pass


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


@dataclass(frozen=True)
class SumExpr:
    parts: tuple


_TOKEN = re.compile(r"\s*(?:(?P<num>-?\d+)|(?P<name>[A-Za-z_]\w*)"
                    r"|(?P<cmp><=|>=|==|!=|<|>)|(?P<punct>[(),+=]))")

_FUNCS = {"join", "meet", "min", "max", "ite0", "guard", "widenconst"}


def _tokenize(text: str, lineno: int):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise EqParseError(f"line {lineno}: bad token at {text[pos:]!r}")
            break
        pos = m.end()
        if m.lastgroup:
            out.append((m.lastgroup, m.group(m.lastgroup)))
    return out


class _ExprParser:
    def __init__(self, tokens, lineno):
        self.toks = tokens
        self.i = 0
        self.lineno = lineno

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        k, v = self.peek()
        if kind is not None and k != kind or value is not None and v != value:
            raise EqParseError(f"line {self.lineno}: expected {value or kind}, got {v!r}")
        self.i += 1
        return v

    def expr(self):
        parts = [self.term()]
        while self.peek() == ("punct", "+"):
            self.take()
            parts.append(self.term())
        return parts[0] if len(parts) == 1 else SumExpr(tuple(parts))

    def term(self):
        k, v = self.peek()
        if k == "num":
            self.take()
            return Num(int(v))
        if k == "name" and v in _FUNCS:
            self.take()
            self.take("punct", "(")
            if v == "guard":
                cmp = self.take("cmp")
                self.take("punct", ",")
                bound = int(self.take("num"))
                self.take("punct", ",")
                arg = self.expr()
                self.take("punct", ")")
                return Call("guard", (cmp, bound, arg))
            args = [self.expr()]
            while self.peek() == ("punct", ","):
                self.take()
                args.append(self.expr())
            self.take("punct", ")")
            return Call(v, tuple(args))
        if k == "name":
            self.take()
            return Ref(v)
        raise EqParseError(f"line {self.lineno}: unexpected {v!r}")


def refs_of(node) -> list[str]:
    if isinstance(node, Ref):
        return [node.name]
    if isinstance(node, SumExpr):
        out = []
        for p in node.parts:
            for r in refs_of(p):
                if r not in out:
                    out.append(r)
        return out
    if isinstance(node, Call):
        args = node.args[2:] if node.fn == "guard" else node.args
        out = []
        for p in args:
            for r in refs_of(p):
                if r not in out:
                    out.append(r)
        return out
    return []


def _make_eval(node, domain: str):
    """Compile an expression AST to a closure over ``get``."""
    natinf = domain == "natinf"

    def const(k):
        return k if natinf else lat.iv_const(k)

    add = lat.nat_add if natinf else lat.iv_add
    join = lat.nat_join if natinf else lat.iv_join
    meet = lat.nat_meet if natinf else lat.iv_meet
    widen = lat.nat_widen if natinf else lat.iv_widen
    zero = 0 if natinf else lat.iv_const(0)

    def ev(n, get):
        if isinstance(n, Num):
            return const(n.value)
        if isinstance(n, Ref):
            return get(n.name)
        if isinstance(n, SumExpr):
            acc = ev(n.parts[0], get)
            for p in n.parts[1:]:
                acc = add(acc, ev(p, get))
            return acc
        assert isinstance(n, Call)
        if n.fn == "guard":
            cmp, bound, arg = n.args
            return lat.guard(cmp, ev(arg, get), bound)
        if n.fn == "ite0":
            cond, a, b = n.args
            v = ev(cond, get)
            return ev(a, get) if v == zero else ev(b, get)
        if n.fn == "widenconst":
            k, arg = n.args
            return widen(ev(k, get), ev(arg, get))
        vals = [ev(a, get) for a in n.args]
        op = {"join": join, "max": join, "meet": meet, "min": meet}[n.fn]
        acc = vals[0]
        for v in vals[1:]:
            acc = op(acc, v)
        return acc

    return lambda get, side=None: ev(node, get)


_ARITY = {"ite0": 3, "widenconst": 2}


def _validate(node, domain: str, lineno: int) -> None:
    if isinstance(node, SumExpr):
        for p in node.parts:
            _validate(p, domain, lineno)
    elif isinstance(node, Call):
        if node.fn == "guard":
            if domain == "natinf":
                raise EqParseError(f"line {lineno}: guard needs the interval domain")
            _validate(node.args[2], domain, lineno)
            return
        want = _ARITY.get(node.fn)
        if want is not None and len(node.args) != want:
            raise EqParseError(f"line {lineno}: {node.fn} takes {want} arguments")
        if not node.args:
            raise EqParseError(f"line {lineno}: {node.fn} needs arguments")
        for p in node.args:
            _validate(p, domain, lineno)


def parse_equations(text: str) -> tuple[EquationSystem, str]:
    """Parse an equation file; returns the system and its domain name."""
    domain = None
    equations: dict[str, object] = {}
    deps: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("domain"):
            domain = line.split()[-1]
            if domain not in ("interval", "natinf"):
                raise EqParseError(f"line {lineno}: unknown domain {domain!r}")
            continue
        if "=" not in line:
            raise EqParseError(f"line {lineno}: expected an equation")
        lhs, rhs_text = line.split("=", 1)
        name = lhs.strip()
        if not re.fullmatch(r"[A-Za-z_]\w*", name):
            raise EqParseError(f"line {lineno}: bad unknown name {name!r}")
        if name in equations:
            raise EqParseError(f"line {lineno}: duplicate equation for {name}")
        if domain is None:
            raise EqParseError("the domain header must precede the equations")
        parser = _ExprParser(_tokenize(rhs_text, lineno), lineno)
        node = parser.expr()
        if parser.i != len(parser.toks):
            raise EqParseError(f"line {lineno}: trailing tokens")
        _validate(node, domain, lineno)
        equations[name] = _make_eval(node, domain)
        deps[name] = refs_of(node)
    if domain is None:
        domain = "interval"
    for name, ds in deps.items():
        for d in ds:
            if d not in equations:
                raise EqParseError(f"unknown {d} referenced by {name} has no equation")
    ops = lat.natinf_ops() if domain == "natinf" else lat.interval_ops()
    return static_system(ops, equations, deps), domain


def load_equations(path) -> tuple[EquationSystem, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_equations(fh.read())
