"""Closed-form expressions in one or more named variables.

The expression language covers what a curve or surface component needs:
constants, the parameter(s), the four arithmetic operators, powers with a
constant exponent, unary negation, and sin/cos/tan/exp/log/sqrt.  Expressions
are immutable trees; differentiation is symbolic and exact.

Operator precedence is ``^`` over unary minus over ``*``/``/`` over ``+``/``-``,
everything left-associative except ``^`` which is right-associative, so
``2^3^2`` is ``2^512``-free and equals 512, and ``-2^2`` is ``-4``.  Exponents
must be constant (no parameter inside), which keeps differentiation of powers
in the plain ``c * u^(c-1) * u'`` form.

Constant folding is deliberately light: an operation whose operands are all
constants is folded, nothing else is rewritten.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprDomainError, ExprParseError

__all__ = [
    "Expression", "Const", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow",
    "Call", "parse", "differentiate", "evaluate", "to_source",
    "compile_scalar", "compile_array", "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


@dataclass(frozen=True)
class Expression:
    def __str__(self):
        return to_source(self)


@dataclass(frozen=True)
class Const(Expression):
    value: float


@dataclass(frozen=True)
class Var(Expression):
    name: str = "s"


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True)
class Add(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Sub(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Mul(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Div(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: float


@dataclass(frozen=True)
class Call(Expression):
    fn: str
    arg: Expression


# ------------------------------------------------------------------ folding

def _fold2(cls, op, a, b):
    # c (op) c -> c; nothing else is rewritten
    if isinstance(a, Const) and isinstance(b, Const):
        try:
            return Const(op(a.value, b.value))
        except (ZeroDivisionError, ValueError, OverflowError):
            pass
    return cls(a, b)


def _add(a, b):
    return _fold2(Add, lambda x, y: x + y, a, b)


def _sub(a, b):
    return _fold2(Sub, lambda x, y: x - y, a, b)


def _mul(a, b):
    return _fold2(Mul, lambda x, y: x * y, a, b)


def _div(a, b):
    return _fold2(Div, lambda x, y: x / y, a, b)


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    return Neg(a)


def _pow(base, exponent):
    if isinstance(base, Const):
        try:
            return Const(_checked_pow(base.value, exponent, None))
        except ExprDomainError:
            pass
    return Pow(base, exponent)


def _call(fn, arg):
    if isinstance(arg, Const):
        try:
            return Const(_apply_fn(fn, arg.value, None))
        except ExprDomainError:
            pass
    return Call(fn, arg)


# ------------------------------------------------------------------- parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            # skip over leading whitespace before reporting
            at = pos + len(source[pos:]) - len(source[pos:].lstrip())
            if at >= len(source):
                break
            raise ExprParseError(f"unexpected character {source[at]!r}", at)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, variables):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0
        self.variables = tuple(variables)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, text, offset = self.peek()
        if kind != "op" or text != op:
            raise ExprParseError(f"expected {op!r}", offset)
        return self.advance()

    def parse(self):
        e = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprParseError(f"unexpected trailing input {text!r}", offset)
        return e

    def expr(self):
        e = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                rhs = self.term()
                e = _add(e, rhs) if text == "+" else _sub(e, rhs)
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                rhs = self.unary()
                e = _mul(e, rhs) if text == "*" else _div(e, rhs)
            else:
                return e

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return _neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, offset = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            exponent = self.unary()
            value = _constant_value(exponent)
            if value is None:
                raise ExprParseError("non-constant exponent", offset)
            return _pow(base, value)
        return base

    def atom(self):
        kind, text, offset = self.advance()
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if text in self.variables:
                return Var(text)
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return _call(text, arg)
            raise ExprParseError(f"unknown identifier {text!r}", offset)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "end":
            raise ExprParseError("unexpected end of input", offset)
        raise ExprParseError(f"unexpected token {text!r}", offset)


def _constant_value(e):
    """Fold a variable-free subtree to a float, or None if it has a variable."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return None
    if isinstance(e, Neg):
        v = _constant_value(e.arg)
        return None if v is None else -v
    if isinstance(e, (Add, Sub, Mul, Div)):
        a = _constant_value(e.left)
        b = _constant_value(e.right)
        if a is None or b is None:
            return None
        return {Add: lambda: a + b, Sub: lambda: a - b,
                Mul: lambda: a * b, Div: lambda: a / b}[type(e)]()
    if isinstance(e, Pow):
        v = _constant_value(e.base)
        return None if v is None else _checked_pow(v, e.exponent, e)
    if isinstance(e, Call):
        v = _constant_value(e.arg)
        return None if v is None else _apply_fn(e.fn, v, e)
    raise TypeError(f"not an expression node: {e!r}")


def parse(source: str, variables=("s",)) -> Expression:
    """Parse an expression in the given variable names.

    Parameters
    ----------
    source : str
        Expression text, e.g. ``"(2/5)*sin(2*s) - (1/40)*sin(8*s)"``.
    variables : tuple of str
        Identifiers accepted as variables.  Curves use the default ``("s",)``;
        surfaces pass their parameter names.

    Raises
    ------
    ExprParseError
        On any syntax error, unknown identifier, or non-constant exponent.
        The error carries the byte offset of the problem.
    """
    return _Parser(source, variables).parse()


# ------------------------------------------------------------ differentiate

def differentiate(e: Expression, var: str = "s") -> Expression:
    """Exact derivative of `e` with respect to the named variable."""
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg, var))
    if isinstance(e, Add):
        return _add(differentiate(e.left, var), differentiate(e.right, var))
    if isinstance(e, Sub):
        return _sub(differentiate(e.left, var), differentiate(e.right, var))
    if isinstance(e, Mul):
        return _add(_mul(differentiate(e.left, var), e.right),
                    _mul(e.left, differentiate(e.right, var)))
    if isinstance(e, Div):
        num = _sub(_mul(differentiate(e.left, var), e.right),
                   _mul(e.left, differentiate(e.right, var)))
        return _div(num, _pow(e.right, 2.0))
    if isinstance(e, Pow):
        c = e.exponent
        if c == 0.0:
            return Const(0.0)
        du = differentiate(e.base, var)
        if c == 1.0:
            return du
        # keep u^1 and u^0 out of the result: repeated differentiation would
        # otherwise breed 0 * u^-1 terms that evaluate to nan at zeros of u
        lowered = e.base if c - 1.0 == 1.0 else _pow(e.base, c - 1.0)
        return _mul(_mul(Const(c), lowered), du)
    if isinstance(e, Call):
        du = differentiate(e.arg, var)
        u = e.arg
        if e.fn == "sin":
            return _mul(_call("cos", u), du)
        if e.fn == "cos":
            return _neg(_mul(_call("sin", u), du))
        if e.fn == "tan":
            return _div(du, _pow(_call("cos", u), 2.0))
        if e.fn == "exp":
            return _mul(_call("exp", u), du)
        if e.fn == "log":
            return _div(du, u)
        if e.fn == "sqrt":
            return _div(du, _mul(Const(2.0), _call("sqrt", u)))
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------- evaluate

def _checked_pow(base, exponent, node):
    if base == 0.0 and exponent < 0.0:
        raise ExprDomainError(
            f"zero raised to negative power in {_describe(node)}", node)
    try:
        r = math.pow(base, exponent)
    except (ValueError, OverflowError) as exc:
        raise ExprDomainError(
            f"power out of domain ({exc}) in {_describe(node)}", node) from None
    return r


def _apply_fn(fn, x, node):
    try:
        if fn == "log":
            if x <= 0.0:
                raise ValueError("log of non-positive value")
            return math.log(x)
        if fn == "sqrt":
            if x < 0.0:
                raise ValueError("sqrt of negative value")
            return math.sqrt(x)
        r = getattr(math, fn)(x)
    except (ValueError, OverflowError) as exc:
        raise ExprDomainError(f"{exc} in {_describe(node)}", node) from None
    if not math.isfinite(r):
        raise ExprDomainError(f"non-finite result in {_describe(node)}", node)
    return r


def _describe(node):
    return "constant folding" if node is None else repr(to_source(node))


def evaluate(e: Expression, value) -> float:
    """Evaluate at a point.

    `value` is a float (bound to variable ``s``) or a mapping of variable
    names to floats.  Raises ExprDomainError at singular points, naming the
    offending subexpression.
    """
    env = value if isinstance(value, dict) else {"s": float(value)}
    return _eval(e, env)


def _eval(e, env):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise ExprDomainError(f"unbound variable {e.name!r}", e) from None
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, Add):
        return _eval(e.left, env) + _eval(e.right, env)
    if isinstance(e, Sub):
        return _eval(e.left, env) - _eval(e.right, env)
    if isinstance(e, Mul):
        return _eval(e.left, env) * _eval(e.right, env)
    if isinstance(e, Div):
        d = _eval(e.right, env)
        if d == 0.0:
            raise ExprDomainError(f"division by zero in {_describe(e)}", e)
        return _eval(e.left, env) / d
    if isinstance(e, Pow):
        return _checked_pow(_eval(e.base, env), e.exponent, e)
    if isinstance(e, Call):
        return _apply_fn(e.fn, _eval(e.arg, env), e)
    raise TypeError(f"not an expression node: {e!r}")


# ------------------------------------------------------------ pretty print

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4,
         Const: 5, Var: 5, Call: 5}


def _fmt_const(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_source(e: Expression) -> str:
    """Render with minimal parentheses; reparsing gives an equal-valued tree."""
    p = _PREC[type(e)]
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        arg = to_source(e.arg)
        if _PREC[type(e.arg)] < p:
            arg = f"({arg})"
        return f"-{arg}"
    if isinstance(e, (Add, Sub, Mul, Div)):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        left = to_source(e.left)
        if _PREC[type(e.left)] < p:
            left = f"({left})"
        right = to_source(e.right)
        # subtraction and division bind their right operand
        rp = _PREC[type(e.right)]
        if rp < p or (rp == p and isinstance(e, (Sub, Div))):
            right = f"({right})"
        return f"{left} {op} {right}"
    if isinstance(e, Pow):
        base = to_source(e.base)
        if not isinstance(e.base, (Const, Var, Call)) or (
                isinstance(e.base, Const) and e.base.value < 0):
            base = f"({base})"
        exp = _fmt_const(e.exponent)
        if e.exponent < 0:
            exp = f"({exp})"
        return f"{base}^{exp}"
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# ----------------------------------------------------------------- compile

def _emit(e, consts):
    if isinstance(e, Const):
        name = f"c{len(consts)}"
        consts[name] = e.value
        return name
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_emit(e.arg, consts)})"
    if isinstance(e, (Add, Sub, Mul, Div)):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        return f"({_emit(e.left, consts)} {op} {_emit(e.right, consts)})"
    if isinstance(e, Pow):
        name = f"c{len(consts)}"
        consts[name] = e.exponent
        return f"({_emit(e.base, consts)} ** {name})"
    if isinstance(e, Call):
        return f"_{e.fn}({_emit(e.arg, consts)})"
    raise TypeError(f"not an expression node: {e!r}")


def _compile(e, variables, funcs):
    consts = {}
    body = _emit(e, consts)
    args = ", ".join(variables)
    namespace = {f"_{fn}": funcs[fn] for fn in FUNCTIONS}
    namespace.update(consts)
    code = f"lambda {args}: {body}"
    return eval(code, namespace)  # noqa: S307 - generated from our own AST


def compile_scalar(e: Expression, variables=("s",)):
    """Compile to a fast scalar callable.

    No domain checking happens in the compiled function; use `evaluate` when
    errors must be caught and attributed.
    """
    return _compile(e, variables, {fn: getattr(math, fn) for fn in FUNCTIONS})


def compile_array(e: Expression, variables=("s",)):
    """Compile to a vectorized callable over numpy arrays (unchecked)."""
    funcs = {fn: getattr(np, fn) for fn in FUNCTIONS}
    f = _compile(e, variables, funcs)

    def wrapped(*args):
        out = f(*(np.asarray(a, dtype=float) for a in args))
        # a constant expression must still broadcast to the input shape
        return np.broadcast_to(out, np.broadcast(*args).shape).astype(float) \
            if np.ndim(out) == 0 and args else out

    return wrapped
