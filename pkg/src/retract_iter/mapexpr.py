"""A tiny expression language for declaring mappings componentwise.

Grammar (whitespace insignificant)::

    expr    := cond ;
    cond    := or ( "?" expr ":" expr )? ;
    or      := cmp ;
    cmp     := add ( ("<"|"<="|">"|">="|"==") add )? ;
    add     := mul ( ("+"|"-") mul )* ;
    mul     := unary ( ("*"|"/") unary )* ;
    unary   := "-" unary | atom ;
    atom    := NUMBER | IDENT ( "(" expr ("," expr)* ")" )? | "(" expr ")" ;

Identifiers ``x`` (one-dimensional input only) and ``x0``, ``x1``, ... name
coordinates of the input vector; any other identifier is a function call.
Comparisons evaluate to 1.0 or 0.0 and ``==`` is exact float equality.  A
conditional evaluates only the selected branch.

Example
-------
>>> t1 = parse("x >= 0 ? -2*sin(x/2) : 2*sin(x/2)", dim=1)
>>> round(t1([1.0]), 6)
-0.958851
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

from .errors import EvaluationError, InvalidInputError, RetractIterError

__all__ = [
    "ParseError", "Const", "Var", "Neg", "BinOp", "Call", "Compare", "Cond",
    "Expr", "parse", "evaluate", "to_source", "FUNCTIONS",
]


class ParseError(RetractIterError, ValueError):
    """Source text is not a valid expression.

    ``kind`` is one of ``unexpected-token``, ``unknown-function``, ``arity``,
    ``unclosed-paren`` or ``bad-number``; ``position`` is a byte offset.
    """

    KINDS = ("unexpected-token", "unknown-function", "arity", "unclosed-paren", "bad-number")

    def __init__(self, kind: str, position: int, message: str):
        super().__init__(f"{kind} at offset {position}: {message}")
        self.kind = kind
        self.position = position
        self.message = message

    def __eq__(self, other):
        return (isinstance(other, ParseError)
                and (self.kind, self.position, self.message)
                == (other.kind, other.position, other.message))

    def __hash__(self):
        return hash((self.kind, self.position, self.message))


# -- AST ---------------------------------------------------------------------
# ``pos`` is the byte offset of the node's leading token.  It is excluded from
# equality so that structurally identical trees compare equal.

@dataclass(frozen=True)
class Const:
    value: float
    pos: int = 0

    def __eq__(self, other):
        return isinstance(other, Const) and _same_float(self.value, other.value)

    def __hash__(self):
        return hash(("const", self.value))


@dataclass(frozen=True)
class Var:
    index: int
    pos: int = 0

    def __eq__(self, other):
        return isinstance(other, Var) and self.index == other.index

    def __hash__(self):
        return hash(("var", self.index))


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    pos: int = 0

    def __eq__(self, other):
        return isinstance(other, Neg) and self.operand == other.operand

    def __hash__(self):
        return hash(("neg", self.operand))


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    pos: int = 0

    def __eq__(self, other):
        return (isinstance(other, BinOp) and self.op == other.op
                and self.left == other.left and self.right == other.right)

    def __hash__(self):
        return hash(("bin", self.op, self.left, self.right))


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    pos: int = 0

    def __eq__(self, other):
        return isinstance(other, Call) and self.name == other.name and self.args == other.args

    def __hash__(self):
        return hash(("call", self.name, self.args))


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Node"
    right: "Node"
    pos: int = 0

    def __eq__(self, other):
        return (isinstance(other, Compare) and self.op == other.op
                and self.left == other.left and self.right == other.right)

    def __hash__(self):
        return hash(("cmp", self.op, self.left, self.right))


@dataclass(frozen=True)
class Cond:
    test: "Node"
    then: "Node"
    orelse: "Node"
    pos: int = 0

    def __eq__(self, other):
        return (isinstance(other, Cond) and self.test == other.test
                and self.then == other.then and self.orelse == other.orelse)

    def __hash__(self):
        return hash(("cond", self.test, self.then, self.orelse))


Node = Union[Const, Var, Neg, BinOp, Call, Compare, Cond]


def _same_float(a, b):
    return a == b or (math.isnan(a) and math.isnan(b))


# -- functions ---------------------------------------------------------------

def _log(pos, a):
    if a <= 0:
        raise EvaluationError(f"log of non-positive value {a!r}", pos)
    return math.log(a)


def _sqrt(pos, a):
    if a < 0:
        raise EvaluationError(f"sqrt of negative value {a!r}", pos)
    return math.sqrt(a)


def _exp(pos, a):
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _clamp(pos, v, lo, hi):
    return min(max(v, lo), hi)


def _plain(f):
    return lambda pos, *args: f(*args)


# name -> (arity, implementation taking (pos, *args))
FUNCTIONS: dict[str, tuple[int, Callable]] = {
    "sin": (1, _plain(math.sin)),
    "cos": (1, _plain(math.cos)),
    "tan": (1, _plain(math.tan)),
    "tanh": (1, _plain(math.tanh)),
    "exp": (1, _exp),
    "log": (1, _log),
    "sqrt": (1, _sqrt),
    "abs": (1, _plain(abs)),
    "min": (2, _plain(min)),
    "max": (2, _plain(max)),
    "clamp": (3, _clamp),
}

_COMPARE = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
}


# -- tokenizer ---------------------------------------------------------------

_MANTISSA = re.compile(rb"[0-9]+\.?[0-9]*|\.[0-9]+")
_EXPONENT = re.compile(rb"[eE][+-]?[0-9]+")
_IDENT = re.compile(rb"[A-Za-z_][A-Za-z0-9_]*")
_VAR = re.compile(r"x([0-9]+)?\Z")
_PUNCT = ("<=", ">=", "==", "<", ">", "+", "-", "*", "/", "(", ")", ",", "?", ":")


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num", "ident", "op", "end"
    text: str
    pos: int


def _tokenize(src: bytes) -> list[_Tok]:
    """Tokenize; a lexical error becomes a trailing ``error`` token so that the
    parser reports whichever failure comes first in the source."""
    toks: list = []
    try:
        _lex(src, toks)
    except ParseError as err:
        toks.append(_Tok("error", "", err.position))
        toks.append(err)
        return toks
    toks.append(_Tok("end", "", len(src)))
    return toks


def _lex(src: bytes, toks: list) -> None:
    i, n = 0, len(src)
    while i < n:
        c = src[i:i + 1]
        if c in b" \t\r\n":
            i += 1
            continue
        if c.isdigit() or (c == b"." and src[i + 1:i + 2].isdigit()):
            end = _MANTISSA.match(src, i).end()
            if src[end:end + 1] in (b"e", b"E"):
                m = _EXPONENT.match(src, end)
                if m is None:
                    raise ParseError("bad-number", i, "exponent has no digits")
                end = m.end()
            nxt = src[end:end + 1]
            if nxt == b"." or nxt.isalnum() or nxt == b"_":
                raise ParseError("bad-number", i, f"malformed number starting {src[i:end + 1].decode(errors='replace')!r}")
            toks.append(_Tok("num", src[i:end].decode(), i))
            i = end
            continue
        if c == b".":
            raise ParseError("bad-number", i, "lone '.'")
        m = _IDENT.match(src, i)
        if m:
            toks.append(_Tok("ident", m.group().decode(), i))
            i = m.end()
            continue
        for p in _PUNCT:
            if src.startswith(p.encode(), i):
                toks.append(_Tok("op", p, i))
                i += len(p)
                break
        else:
            ch = src[i:].decode("utf-8", errors="replace")[:1]
            raise ParseError("unexpected-token", i, f"unexpected character {ch!r}")


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, src: bytes, dim: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.dim = dim
        self.open_parens: list[int] = []

    @property
    def tok(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind == "error":
            raise self.toks[self.i + 1]
        return t

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def at(self, *ops) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def fail(self, tok: _Tok, expected: str):
        if tok.kind == "end":
            if self.open_parens:
                raise ParseError("unclosed-paren", tok.pos,
                                 f"'(' at offset {self.open_parens[-1]} is never closed")
            raise ParseError("unexpected-token", tok.pos, f"unexpected end of input, expected {expected}")
        raise ParseError("unexpected-token", tok.pos, f"unexpected {tok.text!r}, expected {expected}")

    def expect(self, op: str, expected: str) -> _Tok:
        if not self.at(op):
            self.fail(self.tok, expected)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self.fail(self.tok, "end of input")
        return node

    def expr(self) -> Node:
        return self.cond()

    def cond(self) -> Node:
        test = self.cmp()
        if self.at("?"):
            q = self.advance()
            then = self.expr()
            self.expect(":", "':'")
            orelse = self.expr()
            return Cond(test, then, orelse, q.pos)
        return test

    def cmp(self) -> Node:
        left = self.add()
        if self.at(*_COMPARE):
            op = self.advance()
            right = self.add()
            return Compare(op.text, left, right, op.pos)
        return left

    def add(self) -> Node:
        node = self.mul()
        while self.at("+", "-"):
            op = self.advance()
            node = BinOp(op.text, node, self.mul(), op.pos)
        return node

    def mul(self) -> Node:
        node = self.unary()
        while self.at("*", "/"):
            op = self.advance()
            node = BinOp(op.text, node, self.unary(), op.pos)
        return node

    def unary(self) -> Node:
        if self.at("-"):
            op = self.advance()
            return Neg(self.unary(), op.pos)
        return self.atom()

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError("bad-number", tok.pos, f"{tok.text} overflows a 64-bit float")
            return Const(value, tok.pos)
        if tok.kind == "ident":
            self.advance()
            m = _VAR.match(tok.text)
            if m:
                return self.variable(tok, m)
            return self.call(tok)
        if self.at("("):
            self.advance()
            self.open_parens.append(tok.pos)
            node = self.expr()
            self.expect(")", "')'")
            self.open_parens.pop()
            return node
        self.fail(tok, "a number, variable, function call or '('")

    def variable(self, tok: _Tok, m) -> Var:
        if self.at("("):
            raise ParseError("unknown-function", tok.pos, f"{tok.text!r} is a variable, not a function")
        if m.group(1) is None:
            if self.dim != 1:
                raise ParseError("unexpected-token", tok.pos,
                                 f"bare 'x' is only valid for dim 1; use x0..x{self.dim - 1}")
            return Var(0, tok.pos)
        index = int(m.group(1))
        if index >= self.dim:
            raise ParseError("unexpected-token", tok.pos,
                             f"variable {tok.text!r} out of range for dim {self.dim}")
        return Var(index, tok.pos)

    def call(self, tok: _Tok) -> Call:
        if tok.text not in FUNCTIONS:
            raise ParseError("unknown-function", tok.pos,
                             f"unknown identifier {tok.text!r}; functions are {', '.join(FUNCTIONS)}")
        arity = FUNCTIONS[tok.text][0]
        if not self.at("("):
            raise ParseError("arity", tok.pos, f"{tok.text} takes {arity} argument(s), none given")
        paren = self.advance()
        self.open_parens.append(paren.pos)
        args = [self.expr()]
        while self.at(","):
            self.advance()
            args.append(self.expr())
        self.expect(")", "',' or ')'")
        self.open_parens.pop()
        if len(args) != arity:
            raise ParseError("arity", tok.pos, f"{tok.text} takes {arity} argument(s), got {len(args)}")
        return Call(tok.text, tuple(args), tok.pos)


# -- compiled expressions ----------------------------------------------------

def _compile(node: Node) -> Callable:
    """Turn an AST into a closure ``f(x) -> float`` over a coordinate sequence."""
    if isinstance(node, Const):
        v = node.value
        return lambda x: v
    if isinstance(node, Var):
        i = node.index
        return lambda x: float(x[i])
    if isinstance(node, Neg):
        f = _compile(node.operand)
        return lambda x: -f(x)
    if isinstance(node, BinOp):
        f, g, pos = _compile(node.left), _compile(node.right), node.pos
        if node.op == "+":
            return lambda x: f(x) + g(x)
        if node.op == "-":
            return lambda x: f(x) - g(x)
        if node.op == "*":
            return lambda x: f(x) * g(x)

        def div(x):
            den = g(x)
            if den == 0.0:
                raise EvaluationError("division by zero", pos)
            return f(x) / den
        return div
    if isinstance(node, Compare):
        f, g, test = _compile(node.left), _compile(node.right), _COMPARE[node.op]
        return lambda x: 1.0 if test(f(x), g(x)) else 0.0
    if isinstance(node, Cond):
        t, a, b = _compile(node.test), _compile(node.then), _compile(node.orelse)
        return lambda x: a(x) if t(x) != 0.0 else b(x)
    if isinstance(node, Call):
        impl, pos = FUNCTIONS[node.name][1], node.pos
        fs = [_compile(a) for a in node.args]
        if len(fs) == 1:
            f0 = fs[0]
            return lambda x: impl(pos, f0(x))
        return lambda x: impl(pos, *[f(x) for f in fs])
    raise TypeError(f"not an expression node: {node!r}")


class Expr:
    """A parsed expression: an immutable AST plus a compiled evaluator.

    Calling the expression on a vector evaluates it.
    """

    __slots__ = ("ast", "dim", "source", "_fn")

    def __init__(self, ast: Node, dim: int, source: str | None = None):
        self.ast = ast
        self.dim = dim
        self.source = source
        self._fn = _compile(ast)

    def __call__(self, x) -> float:
        try:
            return self._fn(x)
        except (OverflowError, ValueError) as exc:
            # math.* raises ValueError on inf/nan arguments
            raise EvaluationError(str(exc), self.ast.pos) from None
        except IndexError:
            raise InvalidInputError(f"expression declared for dim {self.dim}, got vector of length {len(x)}") from None

    def __eq__(self, other):
        return isinstance(other, Expr) and self.ast == other.ast

    def __hash__(self):
        return hash(self.ast)

    def __repr__(self):
        return f"Expr({to_source(self.ast)!r}, dim={self.dim})"


def parse(source: str, dim: int = 1) -> Expr:
    """Parse ``source`` into an :class:`Expr` over vectors of length ``dim``.

    Raises :class:`ParseError` carrying the earliest failing byte offset.
    """
    if not isinstance(dim, int) or dim < 1:
        raise InvalidInputError(f"dim must be a positive integer, got {dim!r}")
    src = source.encode("utf-8") if isinstance(source, str) else bytes(source)
    return Expr(_Parser(src, dim).parse(), dim, source if isinstance(source, str) else None)


def evaluate(e: Expr, x) -> float:
    """Evaluate ``e`` at the vector ``x``."""
    return e(x)


def to_source(e) -> str:
    """Fully parenthesized source text that reparses to the same tree."""
    node = e.ast if isinstance(e, Expr) else e
    dim1 = isinstance(e, Expr) and e.dim == 1

    def go(n) -> str:
        if isinstance(n, Const):
            return repr(n.value)
        if isinstance(n, Var):
            return "x" if dim1 else f"x{n.index}"
        if isinstance(n, Neg):
            return f"(-{go(n.operand)})"
        if isinstance(n, (BinOp, Compare)):
            return f"({go(n.left)} {n.op} {go(n.right)})"
        if isinstance(n, Cond):
            return f"({go(n.test)} ? {go(n.then)} : {go(n.orelse)})"
        if isinstance(n, Call):
            return f"{n.name}({', '.join(go(a) for a in n.args)})"
        raise TypeError(f"not an expression node: {n!r}")

    return go(node)
