"""Grammar and parser for scalar functions and constraint sets.

Function grammar (infix, case-sensitive):

    expr      := term (('+' | '-') term)*
    term      := unary (('*' | '/') unary)*
    unary     := ('-' | '+') unary | power
    power     := atom ('^' exponent)?          # exponent: integer literal
    atom      := NUMBER | VARIABLE | NAME '(' expr (',' expr)* ')'
               | '(' expr ')' | piecewise
    piecewise := 'piecewise' '(' branch (';' branch)* ')'
    branch    := condition ':' expr  |  'else' ':' expr
    condition := comparison ('and' comparison)*
    comparison:= expr REL expr                 # REL in <=, >=, <, >, ==

Variables are ``x1 .. xn``; recognised calls are ``exp, log, sqrt, sin,
cos, abs, min, max``.  ``abs``, ``min`` and ``max`` are lowered to
piecewise form at parse time so every kink is a guard boundary.

Constraint-set grammar: semicolon-separated ``expr <= c``, ``expr >= c``
or ``expr == c`` with a constant right-hand side.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .errors import ParseError

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    span: Tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Num(Node):
    value: float = 0.0


@dataclass(frozen=True)
class Var(Node):
    index: int = 0  # zero-based


@dataclass(frozen=True)
class BinOp(Node):
    op: str = "+"  # one of + - * / ^
    left: Node = None
    right: Node = None


@dataclass(frozen=True)
class Neg(Node):
    arg: Node = None


@dataclass(frozen=True)
class Call(Node):
    name: str = ""  # exp, log, sqrt, sin, cos
    arg: Node = None


@dataclass(frozen=True)
class Comparison(Node):
    """Single guard ``lhs REL rhs``, stored as ``gap = lhs - rhs`` vs 0."""

    gap: Node = None
    rel: str = "<="  # <=, >=, <, >, ==


@dataclass(frozen=True)
class Guard(Node):
    comparisons: Tuple[Comparison, ...] = ()


@dataclass(frozen=True)
class Piecewise(Node):
    """Ordered branches; first matching guard wins, ``None`` guard = else."""

    branches: Tuple[Tuple[Optional[Guard], Node], ...] = ()


@dataclass(frozen=True)
class IndicatorNode(Node):
    """0 on the attached constraint set, +inf outside (built, not parsed)."""

    constraints: tuple = ()  # tuple of (expr, rel, const)
    set_dim: int = 0


FUNCTIONS = {"exp", "log", "sqrt", "sin", "cos"}
LOWERED = {"abs", "min", "max"}
KEYWORDS = {"piecewise", "else", "and"}


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|[-+*/^();:,<>])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    pos: int


def _line_col(source: str, pos: int) -> Tuple[int, int]:
    line = source.count("\n", 0, pos) + 1
    last = source.rfind("\n", 0, pos)
    col = pos - last
    return line, col


def tokenize(source: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            line, col = _line_col(source, pos)
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append(Token(m.lastgroup, m.group(), m.start()))
    tokens.append(Token("eof", "", len(source)))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, max_dim: Optional[int] = None):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0
        self.max_dim = max_dim
        self.seen_dim = 0

    # -- token helpers --------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            self.fail(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return t

    def fail(self, message: str, token: Optional[Token] = None):
        token = token or self.peek()
        line, col = _line_col(self.source, token.pos)
        raise ParseError(message, line, col)

    # -- grammar ---------------------------------------------------------

    def parse_expression(self) -> Node:
        node = self.parse_term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.parse_term()
            node = BinOp(span=(node.span[0], rhs.span[1]), op=op, left=node, right=rhs)
        return node

    def parse_term(self) -> Node:
        node = self.parse_unary()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            rhs = self.parse_unary()
            node = BinOp(span=(node.span[0], rhs.span[1]), op=op, left=node, right=rhs)
        return node

    def parse_unary(self) -> Node:
        t = self.peek()
        if t.text == "-":
            self.next()
            arg = self.parse_unary()
            return Neg(span=(t.pos, arg.span[1]), arg=arg)
        if t.text == "+":
            self.next()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self) -> Node:
        base = self.parse_atom()
        if self.peek().text == "^":
            self.next()
            expo = self.parse_exponent()
            return BinOp(span=(base.span[0], self.tokens[self.i - 1].pos + 1), op="^", left=base, right=expo)
        return base

    def parse_exponent(self) -> Num:
        neg = False
        t = self.peek()
        if t.text == "-":
            self.next()
            neg = True
        t = self.next()
        if t.kind != "number" or ("." in t.text or "e" in t.text or "E" in t.text):
            self.fail("exponent must be an integer literal", t)
        val = int(t.text)
        return Num(span=(t.pos, t.pos + len(t.text)), value=float(-val if neg else val))

    def parse_atom(self) -> Node:
        t = self.peek()
        if t.kind == "number":
            self.next()
            return Num(span=(t.pos, t.pos + len(t.text)), value=float(t.text))
        if t.text == "(":
            self.next()
            node = self.parse_expression()
            self.expect(")")
            return node
        if t.kind == "name":
            return self.parse_name()
        self.fail(f"unexpected token {t.text or 'end of input'!r}", t)

    def parse_name(self) -> Node:
        t = self.next()
        name = t.text
        m = re.fullmatch(r"x(\d+)", name)
        if m:
            idx = int(m.group(1))
            if idx < 1:
                self.fail("variables are numbered from x1", t)
            if self.max_dim is not None and idx > self.max_dim:
                self.fail(f"unknown identifier {name!r}: declared dimension is {self.max_dim}", t)
            self.seen_dim = max(self.seen_dim, idx)
            return Var(span=(t.pos, t.pos + len(name)), index=idx - 1)
        if name == "piecewise":
            return self.parse_piecewise(t)
        if name in FUNCTIONS or name in LOWERED:
            self.expect("(")
            args = [self.parse_expression()]
            while self.peek().text == ",":
                self.next()
                args.append(self.parse_expression())
            close = self.expect(")")
            span = (t.pos, close.pos + 1)
            return self.build_call(name, args, span, t)
        if name in KEYWORDS:
            self.fail(f"keyword {name!r} not valid here", t)
        self.fail(f"unknown identifier {name!r}", t)

    def build_call(self, name: str, args: List[Node], span, tok) -> Node:
        if name in FUNCTIONS:
            if len(args) != 1:
                self.fail(f"{name} takes exactly one argument", tok)
            return Call(span=span, name=name, arg=args[0])
        if name == "abs":
            if len(args) != 1:
                self.fail("abs takes exactly one argument", tok)
            a = args[0]
            guard = Guard(span=span, comparisons=(Comparison(span=a.span, gap=a, rel=">="),))
            return Piecewise(span=span, branches=((guard, a), (None, Neg(span=a.span, arg=a))))
        # min / max lower to nested piecewise, folding left
        if len(args) < 2:
            self.fail(f"{name} takes at least two arguments", tok)
        node = args[0]
        for b in args[1:]:
            gap = BinOp(span=span, op="-", left=node, right=b)
            rel = "<=" if name == "min" else ">="
            guard = Guard(span=span, comparisons=(Comparison(span=span, gap=gap, rel=rel),))
            node = Piecewise(span=span, branches=((guard, node), (None, b)))
        return node

    def parse_piecewise(self, tok) -> Piecewise:
        self.expect("(")
        branches = []
        saw_else = False
        while True:
            t = self.peek()
            if t.text == "else":
                self.next()
                self.expect(":")
                expr = self.parse_expression()
                branches.append((None, expr))
                saw_else = True
            else:
                guard = self.parse_guard()
                self.expect(":")
                expr = self.parse_expression()
                branches.append((guard, expr))
            if self.peek().text == ";":
                self.next()
                if saw_else:
                    self.fail("'else' must be the final branch", self.peek())
                continue
            break
        close = self.expect(")")
        if not saw_else:
            self.fail("piecewise requires a final 'else' branch", close)
        return Piecewise(span=(tok.pos, close.pos + 1), branches=tuple(branches))

    def parse_guard(self) -> Guard:
        comps = [self.parse_comparison()]
        while self.peek().text == "and":
            self.next()
            comps.append(self.parse_comparison())
        return Guard(span=(comps[0].span[0], comps[-1].span[1]), comparisons=tuple(comps))

    def parse_comparison(self) -> Comparison:
        lhs = self.parse_expression()
        t = self.next()
        if t.text not in ("<=", ">=", "<", ">", "=="):
            self.fail(f"expected a comparison operator, found {t.text!r}", t)
        rhs = self.parse_expression()
        gap = BinOp(span=(lhs.span[0], rhs.span[1]), op="-", left=lhs, right=rhs)
        return Comparison(span=gap.span, gap=gap, rel=t.text)


def parse_expression_text(source: str, max_dim: Optional[int] = None) -> Tuple[Node, int]:
    """Parse a scalar expression; returns (root, inferred dimension)."""
    p = _Parser(source, max_dim=max_dim)
    node = p.parse_expression()
    t = p.peek()
    if t.kind != "eof":
        p.fail(f"unexpected trailing input {t.text!r}", t)
    return node, p.seen_dim


def parse_constraints_text(source: str, max_dim: Optional[int] = None) -> Tuple[List[Tuple[Node, str, float]], int]:
    """Parse ``expr REL const`` clauses separated by ';'."""
    parts = [s for s in source.split(";") if s.strip()]
    if not parts:
        raise ParseError("empty constraint list")
    out = []
    dim = 0
    offset = 0
    for part in parts:
        p = _Parser(part, max_dim=max_dim)
        lhs = p.parse_expression()
        t = p.next()
        if t.text not in ("<=", ">=", "=="):
            p.fail(f"expected <=, >= or ==, found {t.text!r}", t)
        rel = t.text
        rhs = p.parse_expression()
        tail = p.peek()
        if tail.kind != "eof":
            p.fail(f"unexpected trailing input {tail.text!r}", tail)
        out.append((lhs, rel, rhs))
        dim = max(dim, p.seen_dim)
        offset += len(part) + 1
    return out, dim
