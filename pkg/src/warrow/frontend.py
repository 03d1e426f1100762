"""Mini imperative language: parser, CFG construction, interval equations.

The language covers integer locals, affine assignments, if/while with
single-variable comparison guards, non-recursive calls (inlined per call
site), and flow-insensitively analyzed globals declared at top level::

    global int g = 0;
    int i;
    void f(int b) { if (b != 0) { g = b + 1; } }
    void main() { i = 0; while (i < 100) { i = i + 1; } f(1); }

Programs without globals compile to one environment-valued unknown per
program point.  Globals add one interval-valued unknown per global plus
an initializer unknown that is read before the main body, so global
writes become side effects with priority above the writing points.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from . import lattice as lat
from .equations import EquationSystem
from .lattice import BOT, DomainOps, Env, Interval

# ---------------------------------------------------------------------------
# Errors


class ParseError(Exception):
    pass


class UndeclaredVariable(ParseError):
    pass


class DuplicateMain(ParseError):
    pass


class RecursionUnsupported(ParseError):
    pass


class HasGlobals(Exception):
    """Raised by the pure-intraprocedural path when globals are present."""


class UnsupportedExpression(Exception):
    pass


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class LocalRef:
    name: str


@dataclass(frozen=True)
class GlobalRef:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # "+" or "-"
    left: Any
    right: Any


@dataclass(frozen=True)
class Cmp:
    var: str  # local variable name
    op: str
    bound: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass
class Assign:
    target: str
    expr: Any
    line: int


@dataclass
class If:
    cond: Any
    then: list
    orelse: list
    line: int


@dataclass
class While:
    cond: Any
    body: list
    line: int


@dataclass
class Call:
    name: str
    args: list
    line: int


@dataclass
class Return:
    line: int


@dataclass
class Program:
    locals: list[str]
    globals: dict[str, int]
    functions: dict[str, tuple[list[str], list]]  # name -> (params, body)


# ---------------------------------------------------------------------------
# Tokenizer / parser

_TOK = re.compile(
    r"(?P<ws>\s+)|(?P<comment>//[^\n]*)"
    r"|(?P<num>\d+)|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op><=|>=|==|!=|[-+<>=(){},;])"
)

_KEYWORDS = {"int", "void", "global", "if", "else", "while", "return", "true", "false"}


def _tokenize(src: str):
    toks = []
    line = 1
    col = 1
    pos = 0
    while pos < len(src):
        m = _TOK.match(src, pos)
        if m is None:
            raise ParseError(f"line {line}, col {col}: unexpected character {src[pos]!r}")
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append((kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0
        self.locals: list[str] = []
        self.globals: dict[str, int] = {}
        self.functions: dict[str, tuple[list[str], list]] = {}

    def peek(self):
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        return self.peek()[1] == text and self.peek()[0] in ("op", "name")

    def take(self, text: str | None = None, kind: str | None = None):
        k, v, line, col = self.toks[self.i]
        if text is not None and v != text or kind is not None and k != kind:
            want = text or kind
            raise ParseError(f"line {line}, col {col}: expected {want!r}, got {v!r}")
        self.i += 1
        return v, line

    def parse(self) -> Program:
        while self.peek()[0] != "eof":
            if self.at("global"):
                self.take("global")
                self.take("int")
                name, line = self.take(kind="name")
                self.take("=")
                neg = self.at("-")
                if neg:
                    self.take("-")
                num, _ = self.take(kind="num")
                self.take(";")
                self.globals[name] = -int(num) if neg else int(num)
            elif self.at("int") or self.at("void"):
                kw, _ = self.take()
                name, line = self.take(kind="name")
                if self.at(";"):
                    if kw != "int":
                        raise ParseError(f"line {line}: bad declaration")
                    self.take(";")
                    self.locals.append(name)
                elif self.at("("):
                    self.function(name, line)
                else:
                    raise ParseError(f"line {line}: expected ';' or '(' after {name!r}")
            else:
                _, v, line, col = self.peek()
                raise ParseError(f"line {line}, col {col}: unexpected {v!r}")
        mains = [f for f in self.functions if f == "main"]
        if not mains:
            raise ParseError("program has no main function")
        self.check_vars()
        return Program(locals=self.locals, globals=self.globals,
                       functions=self.functions)

    def function(self, name: str, line: int) -> None:
        if name in self.functions:
            if name == "main":
                raise DuplicateMain(f"line {line}: a second main function")
            raise ParseError(f"line {line}: function {name!r} redefined")
        self.take("(")
        params = []
        if not self.at(")"):
            while True:
                self.take("int")
                p, _ = self.take(kind="name")
                params.append(p)
                if self.at(","):
                    self.take(",")
                else:
                    break
        self.take(")")
        body = self.block()
        self.functions[name] = (params, body)

    def block(self) -> list:
        self.take("{")
        stmts = []
        while not self.at("}"):
            if self.at("int"):
                self.take("int")
                name, _ = self.take(kind="name")
                self.take(";")
                self.locals.append(name)
                continue
            stmts.append(self.statement())
        self.take("}")
        return stmts

    def statement(self):
        kind, v, line, col = self.peek()
        if v == "if":
            self.take("if")
            self.take("(")
            cond = self.condition()
            self.take(")")
            then = self.block()
            orelse = []
            if self.at("else"):
                self.take("else")
                orelse = self.block()
            return If(cond, then, orelse, line)
        if v == "while":
            self.take("while")
            self.take("(")
            cond = self.condition()
            self.take(")")
            body = self.block()
            return While(cond, body, line)
        if v == "return":
            self.take("return")
            if not self.at(";"):
                self.expression()
            self.take(";")
            return Return(line)
        if kind == "name":
            name, _ = self.take(kind="name")
            if self.at("("):
                self.take("(")
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.expression())
                        if self.at(","):
                            self.take(",")
                        else:
                            break
                self.take(")")
                self.take(";")
                return Call(name, args, line)
            self.take("=")
            expr = self.expression()
            self.take(";")
            return Assign(name, expr, line)
        raise ParseError(f"line {line}, col {col}: unexpected {v!r}")

    def condition(self):
        if self.at("true"):
            self.take("true")
            return BoolLit(True)
        if self.at("false"):
            self.take("false")
            return BoolLit(False)
        name, line = self.take(kind="name")
        op, _ = self.take(kind="op")
        if op not in ("<", "<=", ">", ">=", "==", "!="):
            raise ParseError(f"line {line}: bad comparison operator {op!r}")
        neg = self.at("-")
        if neg:
            self.take("-")
        num, _ = self.take(kind="num")
        k = -int(num) if neg else int(num)
        if name in self.globals:
            raise ParseError(f"line {line}: conditions on globals are unsupported")
        return Cmp(name, op, k)

    def expression(self):
        if self.at("-"):
            self.take("-")
            node = BinOp("-", Const(0), self.term())
        else:
            node = self.term()
        while self.at("+") or self.at("-"):
            op, _ = self.take()
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        kind, v, line, col = self.peek()
        if kind == "num":
            self.take()
            return Const(int(v))
        if kind == "name" and v not in _KEYWORDS:
            self.take()
            return GlobalRef(v) if v in self.globals else LocalRef(v)
        raise ParseError(f"line {line}, col {col}: expected a variable or constant")

    def check_vars(self):
        declared = set(self.locals) | set(self.globals)
        for fname, (params, body) in self.functions.items():
            scope = declared | set(params)

            def visit_expr(e, line):
                if isinstance(e, (LocalRef, GlobalRef)) and e.name not in scope:
                    raise UndeclaredVariable(f"line {line}: {e.name!r} is not declared")
                if isinstance(e, BinOp):
                    visit_expr(e.left, line)
                    visit_expr(e.right, line)

            def visit(stmts):
                for s in stmts:
                    if isinstance(s, Assign):
                        if s.target not in scope:
                            raise UndeclaredVariable(
                                f"line {s.line}: {s.target!r} is not declared")
                        visit_expr(s.expr, s.line)
                    elif isinstance(s, If):
                        if isinstance(s.cond, Cmp) and s.cond.var not in scope:
                            raise UndeclaredVariable(
                                f"line {s.line}: {s.cond.var!r} is not declared")
                        visit(s.then)
                        visit(s.orelse)
                    elif isinstance(s, While):
                        if isinstance(s.cond, Cmp) and s.cond.var not in scope:
                            raise UndeclaredVariable(
                                f"line {s.line}: {s.cond.var!r} is not declared")
                        visit(s.body)
                    elif isinstance(s, Call):
                        for a in s.args:
                            visit_expr(a, s.line)

            visit(body)


def parse(source: str) -> Program:
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Control-flow graph

Label = tuple  # ("skip",) | ("assign", var, expr) | ("gassign", g, expr)
#               | ("guard", cond, polarity)


@dataclass
class Cfg:
    nodes: list[str]
    edges: list[tuple[str, Label, str]]
    entry: str
    exit: str
    var_names: tuple[str, ...]
    globals: dict[str, int]
    line_of: dict[str, int]

    @property
    def preds(self) -> dict[str, list[tuple[str, Label]]]:
        out: dict[str, list[tuple[str, Label]]] = {n: [] for n in self.nodes}
        for src, label, dst in self.edges:
            out[dst].append((src, label))
        return out

    def node_at_line(self, line: int) -> str:
        for n in self.nodes:
            if self.line_of.get(n) == line:
                return n
        raise KeyError(f"no program point starts at line {line}")


class _CfgBuilder:
    def __init__(self, program: Program):
        self.program = program
        self.nodes: list[int] = []
        self.edges: list[tuple[int, Label, int]] = []
        self.lines: dict[int, int] = {}
        self.counter = 0

    def new_node(self) -> int:
        n = self.counter
        self.counter += 1
        self.nodes.append(n)
        return n

    def edge(self, src: int, label: Label, dst: int) -> None:
        self.edges.append((src, label, dst))

    def mark(self, node: int, line: int) -> None:
        self.lines.setdefault(node, line)

    def stmts(self, body: list, cur: int, stack: tuple[str, ...]) -> int:
        for s in body:
            self.mark(cur, s.line)
            if isinstance(s, Assign):
                nxt = self.new_node()
                if s.target in self.program.globals:
                    self.edge(cur, ("gassign", s.target, s.expr), nxt)
                else:
                    self.edge(cur, ("assign", s.target, s.expr), nxt)
                cur = nxt
            elif isinstance(s, If):
                t0 = self.new_node()
                self.edge(cur, ("guard", s.cond, True), t0)
                t_end = self.stmts(s.then, t0, stack)
                join = self.new_node()
                self.edge(t_end, ("skip",), join)
                if s.orelse:
                    f0 = self.new_node()
                    self.edge(cur, ("guard", s.cond, False), f0)
                    f_end = self.stmts(s.orelse, f0, stack)
                    self.edge(f_end, ("skip",), join)
                else:
                    self.edge(cur, ("guard", s.cond, False), join)
                cur = join
            elif isinstance(s, While):
                head = self.new_node()
                self.edge(cur, ("skip",), head)
                self.mark(head, s.line)
                b0 = self.new_node()
                self.edge(head, ("guard", s.cond, True), b0)
                b_end = self.stmts(s.body, b0, stack)
                self.edge(b_end, ("skip",), head)
                after = self.new_node()
                self.edge(head, ("guard", s.cond, False), after)
                cur = after
            elif isinstance(s, Call):
                if s.name not in self.program.functions:
                    raise ParseError(f"line {s.line}: unknown function {s.name!r}")
                if s.name in stack:
                    raise RecursionUnsupported(
                        f"line {s.line}: recursive call of {s.name!r}")
                params, fbody = self.program.functions[s.name]
                if len(params) != len(s.args):
                    raise ParseError(f"line {s.line}: {s.name!r} takes "
                                     f"{len(params)} arguments")
                for p, a in zip(params, s.args):
                    nxt = self.new_node()
                    self.edge(cur, ("assign", p, a), nxt)
                    cur = nxt
                cur = self.stmts(fbody, cur, stack + (s.name,))
            elif isinstance(s, Return):
                # returns only make sense at the tail here; treated as a no-op
                continue
        return cur


def build_cfg(program: Program) -> Cfg:
    b = _CfgBuilder(program)
    entry = b.new_node()
    params, body = program.functions["main"]
    exit_node = b.stmts(body, entry, ("main",))
    width = max(2, len(str(b.counter)))
    names = {}
    for n in b.nodes:
        base = f"n{n:0{width}d}"
        if n in b.lines:
            base += f"_L{b.lines[n]}"
        names[n] = base
    var_names = []
    for v in program.locals:
        if v not in var_names:
            var_names.append(v)
    for fn, (ps, _) in program.functions.items():
        for p in ps:
            if p not in var_names:
                var_names.append(p)
    return Cfg(
        nodes=[names[n] for n in b.nodes],
        edges=[(names[s], lbl, names[d]) for s, lbl, d in b.edges],
        entry=names[entry],
        exit=names[exit_node],
        var_names=tuple(var_names),
        globals=dict(program.globals),
        line_of={names[n]: ln for n, ln in b.lines.items()},
    )


# ---------------------------------------------------------------------------
# Transfer functions


def eval_affine(expr, env: Env, get_global=None) -> Interval:
    if env is BOT:
        return BOT
    if isinstance(expr, Const):
        return lat.iv_const(expr.value)
    if isinstance(expr, LocalRef):
        return env.get(expr.name)
    if isinstance(expr, GlobalRef):
        if get_global is None:
            raise UnsupportedExpression(f"global {expr.name!r} in a pure context")
        return get_global(expr.name)
    if isinstance(expr, BinOp):
        left = eval_affine(expr.left, env, get_global)
        right = eval_affine(expr.right, env, get_global)
        return lat.iv_add(left, right) if expr.op == "+" else lat.iv_sub(left, right)
    raise UnsupportedExpression(f"cannot evaluate {expr!r}")


def transfer(label: Label, env, get_global=None):
    """Environment transformer for one CFG edge label."""
    if env is BOT:
        return BOT
    kind = label[0]
    if kind == "skip":
        return env
    if kind == "assign":
        _, var, expr = label
        return lat.env_set(env, var, eval_affine(expr, env, get_global))
    if kind == "gassign":
        # the environment is unchanged; the written value is handled by the caller
        return env
    if kind == "guard":
        _, cond, polarity = label
        if isinstance(cond, BoolLit):
            return env if cond.value == polarity else BOT
        cmp = cond.op if polarity else _NEGATE[cond.op]
        return lat.env_set(env, cond.var, lat.guard(cmp, env.get(cond.var), cond.bound))
    raise UnsupportedExpression(f"unknown label {label!r}")


_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def _globals_in(expr) -> list[str]:
    if isinstance(expr, GlobalRef):
        return [expr.name]
    if isinstance(expr, BinOp):
        return _globals_in(expr.left) + _globals_in(expr.right)
    return []


# ---------------------------------------------------------------------------
# Equation generation


def equations_from_cfg(cfg: Cfg, domain: DomainOps | None = None) -> EquationSystem:
    """One environment unknown per program point; purely intraprocedural."""
    if cfg.globals:
        raise HasGlobals("program has globals; use equations_with_globals")
    ops = domain or lat.env_ops(cfg.var_names)
    preds = cfg.preds
    init_env = lat.env_top(cfg.var_names)
    equations = {}
    deps = {}
    for node in cfg.nodes:
        inc = preds[node]
        if node == cfg.entry:
            equations[node] = (lambda get, side=None: init_env)
            deps[node] = []
            continue

        def rhs(get, side=None, inc=inc):
            acc = BOT
            for src, label in inc:
                acc = ops.join(acc, transfer(label, get(src)))
            return acc

        equations[node] = rhs
        deps[node] = []
        for src, _ in inc:
            if src not in deps[node]:
                deps[node].append(src)
    from .equations import static_system

    return static_system(ops, equations, deps)


INIT_UNKNOWN = "$init"
ROOT_UNKNOWN = "$main"


def _mixed_ops(var_names) -> DomainOps:
    """Dispatching ops: program points carry environments, globals carry
    intervals; both share the BOT least element."""

    def pick(a, b, env_f, iv_f):
        if isinstance(a, Env) or isinstance(b, Env):
            return env_f(a, b)
        return iv_f(a, b)

    return DomainOps(
        leq=lambda a, b: pick(a, b, lat.env_leq, lat.iv_leq),
        eq=lambda a, b: a == b or (a is BOT and b is BOT),
        join=lambda a, b: pick(a, b, lat.env_join, lat.iv_join),
        widen=lambda a, b: pick(a, b, lat.env_widen, lat.iv_widen),
        narrow=lambda a, b: pick(a, b, lat.env_narrow, lat.iv_narrow),
        bottom=BOT,
    )


def equations_with_globals(program: Program, domain: DomainOps | None = None,
                           init_first: bool = True) -> EquationSystem:
    """Side-effecting system: one interval unknown per global, written by
    side effects from the assigning points and seeded by an initializer
    unknown that the root reads before the main body.

    ``init_first=False`` reads the main body first, which demotes the
    globals to the lowest priorities; useful to exhibit the divergent
    ordering.
    """
    cfg = build_cfg(program)
    if not cfg.globals:
        return equations_from_cfg(cfg, domain)
    ops = domain or _mixed_ops(cfg.var_names)
    preds = cfg.preds
    init_env = lat.env_top(cfg.var_names)
    equations = {}
    deps: dict[str, list[str]] = {}

    def node_rhs(node, inc):
        def rhs(get, side=None):
            acc = BOT
            for src, label in inc:
                env = get(src)
                if label[0] == "gassign":
                    _, gname, expr = label
                    written = eval_affine(expr, env, get)
                    if written is not BOT and side is not None:
                        side(gname, written)
                acc = ops.join(acc, transfer(label, env, get))
            return acc

        return rhs

    for node in cfg.nodes:
        inc = preds[node]
        if node == cfg.entry:
            equations[node] = (lambda get, side=None: init_env)
            deps[node] = []
            continue
        equations[node] = node_rhs(node, inc)
        ds = []
        for src, label in inc:
            if src not in ds:
                ds.append(src)
            exprs = [label[2]] if label[0] in ("assign", "gassign") else []
            for e in exprs:
                for g in _globals_in(e):
                    if g not in ds:
                        ds.append(g)
        deps[node] = ds

    def init_rhs(get, side=None):
        for g, k in cfg.globals.items():
            side(g, lat.iv_const(k))
        return BOT

    equations[INIT_UNKNOWN] = init_rhs
    deps[INIT_UNKNOWN] = []

    def root_rhs(get, side=None):
        if init_first:
            get(INIT_UNKNOWN)
            return get(cfg.exit)
        out = get(cfg.exit)
        get(INIT_UNKNOWN)
        return out

    equations[ROOT_UNKNOWN] = root_rhs
    deps[ROOT_UNKNOWN] = [INIT_UNKNOWN, cfg.exit]

    for g in cfg.globals:
        equations[g] = (lambda get, side=None: BOT)
        deps[g] = []

    unknowns = [ROOT_UNKNOWN, INIT_UNKNOWN] + list(cfg.nodes) + list(cfg.globals)

    def rhs_of(x):
        return equations[x]

    return EquationSystem(ops=ops, rhs_of=rhs_of, unknowns=unknowns,
                          static_deps=deps)
