"""Parser and evaluator for one-variable scalar functions.

Chain generators are parameterized by real functions of a single time
variable.  This module provides the small expression language those
functions are written in, plus the step-function descriptor used for
the discontinuous solutions of the multiplicative composition identity
a(s,tau) * a(tau,t) = a(s,t).

Grammar (standard precedence: ``^`` > unary ``-`` > ``*``/``/`` > ``+``/``-``,
with ``^`` right-associative)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := NUMBER | 't' | FUNC '(' expr ')' | '(' expr ')'

The free variable is always named ``t``; callers substitute either time
endpoint on evaluation.  Known functions: abs, cos, exp, log, sin, sqrt.
There is no symbolic simplification anywhere: trees evaluate exactly as
written.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EvalDomainError, ExpressionSyntaxError

__all__ = [
    "ScalarFn",
    "StepSpec",
    "parse",
    "evaluate",
    "cantor2_step",
    "FUNCTION_NAMES",
    "VARIABLE_NAME",
]

VARIABLE_NAME = "t"

_FUNCTIONS = {
    "abs": np.abs,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "sqrt": np.sqrt,
}
FUNCTION_NAMES = tuple(sorted(_FUNCTIONS))


# --- expression tree -------------------------------------------------------
#
# Node equality deliberately ignores source positions, so a reparsed
# pretty-print compares equal to the original tree.

@dataclass(frozen=True)
class Const:
    value: float
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


Node = Const | Var | Neg | BinOp | Call


# --- tokenizer -------------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_OPERATORS = "+-*/^"


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        m = _NUMBER_RE.match(source, i)
        if m:
            tokens.append(("num", m.group(), i))
            i = m.end()
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            tokens.append(("ident", m.group(), i))
            i = m.end()
            continue
        if ch in _OPERATORS:
            tokens.append(("op", ch, i))
        elif ch == "(":
            tokens.append(("lparen", ch, i))
        elif ch == ")":
            tokens.append(("rparen", ch, i))
        elif ch == ",":
            tokens.append(("comma", ch, i))
        else:
            raise ExpressionSyntaxError(f"unexpected character {ch!r}", i, source)
        i += 1
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.index = 0

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        raise ExpressionSyntaxError(message, tok[2], self.source)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            self.fail(f"unexpected {text!r} after expression")
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term(), pos)
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.factor(), pos)
            else:
                return node

    def factor(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.factor(), pos)
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            node = BinOp("^", node, self.factor(), pos)
        return node

    def atom(self) -> Node:
        kind, text, pos = self.advance()
        if kind == "num":
            return Const(float(text), pos)
        if kind == "ident":
            if text == VARIABLE_NAME:
                return Var(pos)
            if text in _FUNCTIONS:
                if self.peek()[0] != "lparen":
                    self.fail(f"function {text!r} must be followed by '('")
                self.advance()
                arg = self.expr()
                k, txt, p = self.peek()
                if k == "comma":
                    self.fail(f"function {text!r} takes exactly one argument")
                if k != "rparen":
                    self.fail("expected ')'")
                self.advance()
                return Call(text, arg, pos)
            self.fail(f"unknown identifier {text!r}", (kind, text, pos))
        if kind == "lparen":
            node = self.expr()
            k, txt, p = self.peek()
            if k != "rparen":
                self.fail("expected ')'")
            self.advance()
            return node
        if kind == "end":
            self.fail("unexpected end of input", (kind, text, pos))
        self.fail(f"expected an operand, found {text!r}", (kind, text, pos))


# --- pretty printer --------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PRECEDENCE = 3
_ATOM_PRECEDENCE = 5


def _node_precedence(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PRECEDENCE[node.op]
    if isinstance(node, Neg):
        return _NEG_PRECEDENCE
    return _ATOM_PRECEDENCE


def _render(node: Node, var: str, context: int) -> str:
    if isinstance(node, Const):
        text = repr(node.value)
    elif isinstance(node, Var):
        text = var
    elif isinstance(node, Call):
        text = f"{node.func}({_render(node.arg, var, 0)})"
    elif isinstance(node, Neg):
        text = "-" + _render(node.operand, var, _NEG_PRECEDENCE)
    else:
        prec = _PRECEDENCE[node.op]
        if node.op == "^":
            # left operand of '^' must be an atom; right side may carry a sign
            left = _render(node.left, var, _ATOM_PRECEDENCE)
            right = _render(node.right, var, _NEG_PRECEDENCE)
        else:
            left = _render(node.left, var, prec)
            right = _render(node.right, var, prec + 1)
        text = f"{left} {node.op} {right}" if prec == 1 else f"{left}{node.op}{right}"
    if _node_precedence(node) < context:
        return f"({text})"
    return text


# --- evaluation ------------------------------------------------------------

def _eval_lax(node: Node, x):
    """Evaluate without domain checks; invalid points become nan/inf."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval_lax(node.operand, x)
    if isinstance(node, Call):
        return _FUNCTIONS[node.func](_eval_lax(node.arg, x))
    left = _eval_lax(node.left, x)
    right = _eval_lax(node.right, x)
    op = node.op
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        return left / right
    return np.power(left, right)


def _eval_strict(node: Node, x, source: str):
    if isinstance(node, Const):
        return np.float64(node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval_strict(node.operand, x, source)
    if isinstance(node, Call):
        arg = _eval_strict(node.arg, x, source)
        if node.func == "log" and arg <= 0.0:
            raise EvalDomainError(f"log of non-positive value {float(arg)!r}", node.pos, source)
        if node.func == "sqrt" and arg < 0.0:
            raise EvalDomainError(f"sqrt of negative value {float(arg)!r}", node.pos, source)
        return _FUNCTIONS[node.func](arg)
    left = _eval_strict(node.left, x, source)
    right = _eval_strict(node.right, x, source)
    op = node.op
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if right == 0.0:
            raise EvalDomainError("division by zero", node.pos, source)
        return left / right
    if left < 0.0 and right != np.floor(right):
        raise EvalDomainError(
            f"negative base {float(left)!r} raised to non-integer power {float(right)!r}",
            node.pos,
            source,
        )
    if left == 0.0 and right < 0.0:
        raise EvalDomainError("zero raised to a negative power", node.pos, source)
    return np.power(left, right)


class ScalarFn:
    """A parsed one-variable real function.

    Calling the object evaluates leniently (NaN/inf flow through, which is
    what the bulk chain evaluator wants); :meth:`eval` is the strict scalar
    path that raises :class:`EvalDomainError` with the node position.
    """

    __slots__ = ("root", "source")

    def __init__(self, root: Node, source: str = ""):
        self.root = root
        self.source = source or _render(root, VARIABLE_NAME, 0)

    @staticmethod
    def parse(text: str) -> "ScalarFn":
        if not text.strip():
            raise ExpressionSyntaxError("empty expression", 0, text)
        return ScalarFn(_Parser(text).parse(), text)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval_lax(self.root, arr)
        out = np.asarray(out, dtype=float)
        if arr.ndim == 0:
            return float(out)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape)
        return out

    def eval(self, x: float) -> float:
        with np.errstate(all="ignore"):
            return float(_eval_strict(self.root, np.float64(x), self.source))

    def to_string(self, var: str = VARIABLE_NAME) -> str:
        return _render(self.root, var, 0)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"ScalarFn({self.to_string()!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ScalarFn) and self.root == other.root

    def __hash__(self) -> int:
        return hash(self.root)


def parse(text: str) -> ScalarFn:
    """Parse ``text`` into a :class:`ScalarFn`."""
    return ScalarFn.parse(text)


def evaluate(fn: ScalarFn, x: float) -> float:
    """Strictly evaluate ``fn`` at ``x`` (domain failures raise)."""
    return fn.eval(x)


# --- step solutions of the multiplicative composition identity -------------

@dataclass(frozen=True)
class StepSpec:
    """Right-open unit step that switches off at ``threshold``.

    Describes the discontinuous solution of a(s,tau)*a(tau,t) = a(s,t):
    the value is 1 while t < threshold and 0 once t >= threshold.
    """

    threshold: float

    def __post_init__(self):
        if not (self.threshold > 0):
            raise ValueError(f"step threshold must be positive, got {self.threshold!r}")


def cantor2_step(spec: StepSpec, s, t):
    """Evaluate the step solution at the ordered pair ``(s, t)``.

    Exactly 1.0 for t < threshold and exactly 0.0 for t >= threshold, so
    products of step factors compose without rounding.
    """
    s_arr = np.asarray(s, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > t_arr):
        raise EvalDomainError(f"step requires 0 <= s <= t, got s={s!r}, t={t!r}")
    out = np.where(t_arr < spec.threshold, 1.0, 0.0)
    if t_arr.ndim == 0 and s_arr.ndim == 0:
        return float(out)
    return out
