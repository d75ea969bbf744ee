"""Symbolic expressions in one generalized coordinate and its time derivatives.

An expression is an immutable tree over real constants, named parameters, the
time variable ``t``, and derivative coordinates ``x, x', x'', ...`` (each
derivative order is treated as an independent symbol).  Construction goes
through the smart constructors :func:`add`, :func:`mul`, :func:`power`,
:func:`neg` and :func:`call`, which flatten nested sums/products and keep
operands in a total canonical order, so structural equality (``==``) is
deterministic and usable in tests.

Everything here is a pure function over immutable values; expressions can be
shared freely between threads or processes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence


class ExprError(Exception):
    """Base class for errors raised by this module."""


class ParseError(ExprError):
    """Malformed source text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ExprError):
    """Base class for evaluation failures."""


class MissingSymbolError(EvalError):
    """The binding does not cover a symbol appearing in the expression."""


class NonFiniteError(EvalError):
    """Evaluation produced an overflow, NaN or division by zero."""


FUNCTIONS = ("sin", "cos", "exp")
RESERVED = {"x", "t", "d"} | set(FUNCTIONS)

_MATH = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


# --------------------------------------------------------------------------
# node types
# --------------------------------------------------------------------------

class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_expr(self)

    # operator sugar so trees can be written inline in code and tests

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return mul(self, power(_coerce(other), -1))

    def __rtruediv__(self, other):
        return mul(_coerce(other), power(self, -1))

    def __pow__(self, exponent: int):
        return power(self, exponent)

    def __neg__(self):
        return neg(self)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return Constant(float(value))
    raise TypeError(f"cannot use {value!r} as an expression")


@dataclass(frozen=True, repr=False)
class Constant(Expr):
    value: float

    def __post_init__(self):
        # +0.0 normalizes -0.0 so equal-looking trees compare equal
        object.__setattr__(self, "value", float(self.value) + 0.0)

    def __repr__(self):
        return f"Constant({self.value!r})"


@dataclass(frozen=True, repr=False)
class Parameter(Expr):
    name: str

    def __post_init__(self):
        if not self.name.isidentifier() or self.name in RESERVED:
            raise ValueError(f"invalid parameter name {self.name!r}")

    def __repr__(self):
        return f"Parameter({self.name!r})"


@dataclass(frozen=True, repr=False)
class TimeVar(Expr):
    def __repr__(self):
        return "TimeVar()"


@dataclass(frozen=True, repr=False)
class DerivCoord(Expr):
    """k-th time derivative of the coordinate; order 0 is the coordinate."""

    order: int

    def __post_init__(self):
        if not isinstance(self.order, int) or self.order < 0:
            raise ValueError(f"derivative order must be a non-negative integer, got {self.order!r}")

    def __repr__(self):
        return f"DerivCoord({self.order})"


@dataclass(frozen=True, repr=False)
class Sum(Expr):
    operands: tuple

    def __post_init__(self):
        if len(self.operands) < 2:
            raise ValueError("Sum needs at least two operands")
        if any(isinstance(op, Sum) for op in self.operands):
            raise ValueError("Sum operands must be flattened")

    def __repr__(self):
        return f"Sum{self.operands!r}"


@dataclass(frozen=True, repr=False)
class Product(Expr):
    operands: tuple

    def __post_init__(self):
        if len(self.operands) < 2:
            raise ValueError("Product needs at least two operands")
        if any(isinstance(op, Product) for op in self.operands):
            raise ValueError("Product operands must be flattened")

    def __repr__(self):
        return f"Product{self.operands!r}"


@dataclass(frozen=True, repr=False)
class Power(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent == 0:
            raise ValueError(f"exponent must be a non-zero integer, got {self.exponent!r}")

    def __repr__(self):
        return f"Power({self.base!r}, {self.exponent})"


@dataclass(frozen=True, repr=False)
class Call(Expr):
    func: str
    arg: Expr

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")

    def __repr__(self):
        return f"Call({self.func!r}, {self.arg!r})"


ZERO = Constant(0.0)
ONE = Constant(1.0)
MINUS_ONE = Constant(-1.0)
T = TimeVar()
X = DerivCoord(0)


# --------------------------------------------------------------------------
# canonical ordering and smart constructors
# --------------------------------------------------------------------------

def _sort_key(e: Expr):
    # leaves order: constants (by value), parameters (by name), t, x^(k);
    # composites compare recursively on their children.
    if isinstance(e, Constant):
        return (0, e.value)
    if isinstance(e, Parameter):
        return (1, e.name)
    if isinstance(e, TimeVar):
        return (2,)
    if isinstance(e, DerivCoord):
        return (3, e.order)
    if isinstance(e, Call):
        return (4, e.func, _sort_key(e.arg))
    if isinstance(e, Power):
        return (5, _sort_key(e.base), e.exponent)
    if isinstance(e, Product):
        return (6, tuple(_sort_key(op) for op in e.operands))
    if isinstance(e, Sum):
        return (7, tuple(_sort_key(op) for op in e.operands))
    raise TypeError(f"not an expression: {e!r}")


def add(*operands: Expr) -> Expr:
    """n-ary sum; flattens nested sums and orders operands canonically."""
    flat = []
    for op in operands:
        if isinstance(op, Sum):
            flat.extend(op.operands)
        else:
            flat.append(op)
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(sorted(flat, key=_sort_key)))


def mul(*operands: Expr) -> Expr:
    """n-ary product; flattens nested products and orders operands canonically."""
    flat = []
    for op in operands:
        if isinstance(op, Product):
            flat.extend(op.operands)
        else:
            flat.append(op)
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(sorted(flat, key=_sort_key)))


def power(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    return Power(base, exponent)


def neg(e: Expr) -> Expr:
    if isinstance(e, Constant):
        return Constant(-e.value)
    return mul(MINUS_ONE, e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def call(func: str, arg: Expr) -> Expr:
    return Call(func, arg)


# --------------------------------------------------------------------------
# structure queries
# --------------------------------------------------------------------------

def children(e: Expr) -> tuple:
    if isinstance(e, (Sum, Product)):
        return e.operands
    if isinstance(e, Power):
        return (e.base,)
    if isinstance(e, Call):
        return (e.arg,)
    return ()


def max_deriv_order(e: Expr) -> int:
    """Highest derivative order appearing in ``e``; -1 if none appears."""
    if isinstance(e, DerivCoord):
        return e.order
    best = -1
    for c in children(e):
        best = max(best, max_deriv_order(c))
    return best


def free_parameters(e: Expr) -> set:
    if isinstance(e, Parameter):
        return {e.name}
    names: set = set()
    for c in children(e):
        names |= free_parameters(c)
    return names


def contains_time(e: Expr) -> bool:
    if isinstance(e, TimeVar):
        return True
    return any(contains_time(c) for c in children(e))


# --------------------------------------------------------------------------
# simplification
# --------------------------------------------------------------------------

def simplify(e: Expr) -> Expr:
    """Constant folding, identity elimination, like-term and like-power
    collection, flattening and canonical ordering.

    Evaluation is preserved: ``evaluate(simplify(e), b) == evaluate(e, b)``
    up to floating round-off, for every binding valid for ``e``.  The result
    is a fixed point: ``simplify(simplify(e)) == simplify(e)``.
    """
    if isinstance(e, (Constant, Parameter, TimeVar, DerivCoord)):
        if isinstance(e, Constant):
            return Constant(e.value)  # normalizes -0.0
        return e
    if isinstance(e, Call):
        arg = simplify(e.arg)
        if isinstance(arg, Constant):
            folded = _MATH[e.func](arg.value) if e.func != "exp" else _safe_exp(arg.value)
            if folded is not None and math.isfinite(folded):
                return Constant(folded)
        return Call(e.func, arg)
    if isinstance(e, Power):
        return _simplify_power(simplify(e.base), e.exponent)
    if isinstance(e, Product):
        return _simplify_product([simplify(op) for op in e.operands])
    if isinstance(e, Sum):
        return _simplify_sum([simplify(op) for op in e.operands])
    raise TypeError(f"not an expression: {e!r}")


def _safe_exp(v: float):
    try:
        return math.exp(v)
    except OverflowError:
        return None


def _simplify_power(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Constant):
        try:
            v = base.value ** exponent
        except (OverflowError, ZeroDivisionError):
            return Power(base, exponent)
        if math.isfinite(v):
            return Constant(v)
        return Power(base, exponent)
    if isinstance(base, Power):  # (b^j)^k = b^(j*k) for integer j, k
        return _simplify_power(base.base, base.exponent * exponent)
    if isinstance(base, Product):  # (a*b)^k = a^k * b^k
        return _simplify_product([_simplify_power(f, exponent) for f in base.operands])
    return Power(base, exponent)


def _simplify_product(factors: list) -> Expr:
    flat = []
    for f in factors:
        if isinstance(f, Product):
            flat.extend(f.operands)
        else:
            flat.append(f)
    const = 1.0
    powers: dict = {}  # base -> integer exponent, insertion-ordered
    for f in flat:
        if isinstance(f, Constant):
            const *= f.value
        elif isinstance(f, Power):
            powers[f.base] = powers.get(f.base, 0) + f.exponent
        else:
            powers[f] = powers.get(f, 0) + 1
    if const == 0.0:
        return ZERO
    rebuilt = []
    for base, exp in powers.items():
        if exp == 0:
            continue
        piece = _simplify_power(base, exp)
        if isinstance(piece, Constant):  # exponent merge can fold, e.g. 2^1 * 2^-1... or (b^j)^k collapse
            const *= piece.value
        else:
            rebuilt.append(piece)
    if const == 0.0:
        return ZERO
    sums = [p for p in rebuilt if isinstance(p, Sum)]
    if len(sums) == 1 and (const != 1.0 or len(rebuilt) > 1):
        # Distribute over a single sum factor so that products of linear
        # combinations flatten and cancellation can see the terms.  A
        # product of two sums stays factored: this is not full expansion.
        s = sums[0]
        others = [p for p in rebuilt if p is not s]
        return _simplify_sum(
            [_simplify_product([Constant(const), *others, t]) for t in s.operands])
    if const != 1.0 or not rebuilt:
        rebuilt.append(Constant(const))
    return mul(*rebuilt)


def _coeff_rest(term: Expr):
    # split a simplified non-Sum term into (coefficient, symbolic rest)
    if isinstance(term, Product) and isinstance(term.operands[0], Constant):
        rest = term.operands[1:]
        return term.operands[0].value, (rest[0] if len(rest) == 1 else Product(rest))
    return 1.0, term


def _simplify_sum(terms: list) -> Expr:
    flat = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.operands)
        else:
            flat.append(t)
    const = 0.0
    collected: dict = {}  # rest -> coefficient, insertion-ordered
    for t in flat:
        if isinstance(t, Constant):
            const += t.value
        else:
            coeff, rest = _coeff_rest(t)
            collected[rest] = collected.get(rest, 0.0) + coeff
    rebuilt = []
    for rest, coeff in collected.items():
        if coeff == 0.0:
            continue
        if coeff == 1.0:
            rebuilt.append(rest)
        else:
            rebuilt.append(mul(Constant(coeff), rest))
    if const != 0.0 or not rebuilt:
        rebuilt.append(Constant(const))
    return add(*rebuilt)


# --------------------------------------------------------------------------
# calculus
# --------------------------------------------------------------------------

def _derive(e: Expr, leaf: Callable[[Expr], Expr]) -> Expr:
    if isinstance(e, (Constant, Parameter, TimeVar, DerivCoord)):
        return leaf(e)
    if isinstance(e, Sum):
        return add(*[_derive(op, leaf) for op in e.operands])
    if isinstance(e, Product):
        terms = []
        ops = e.operands
        for i in range(len(ops)):
            terms.append(mul(*ops[:i], _derive(ops[i], leaf), *ops[i + 1:]))
        return add(*terms)
    if isinstance(e, Power):
        inner = _derive(e.base, leaf)
        return mul(Constant(float(e.exponent)), power(e.base, e.exponent - 1), inner)
    if isinstance(e, Call):
        inner = _derive(e.arg, leaf)
        if e.func == "sin":
            outer = Call("cos", e.arg)
        elif e.func == "cos":
            outer = neg(Call("sin", e.arg))
        else:
            outer = Call("exp", e.arg)
        return mul(outer, inner)
    raise TypeError(f"not an expression: {e!r}")


def partial(e: Expr, k: int) -> Expr:
    """Partial derivative with respect to the order-``k`` derivative coordinate,
    treating every other derivative order, ``t`` and parameters as constants."""
    def leaf(node):
        if isinstance(node, DerivCoord) and node.order == k:
            return ONE
        return ZERO

    return simplify(_derive(e, leaf))


def total_time_derivative(e: Expr) -> Expr:
    """Total d/dt by the chain rule: t -> 1 and x^(k) -> x^(k+1)."""
    def leaf(node):
        if isinstance(node, TimeVar):
            return ONE
        if isinstance(node, DerivCoord):
            return DerivCoord(node.order + 1)
        return ZERO

    return simplify(_derive(e, leaf))


def _rebuild(e: Expr, repl: Callable[[Expr], Expr]) -> Expr:
    out = repl(e)
    if out is not None:
        return out
    if isinstance(e, (Constant, Parameter, TimeVar, DerivCoord)):
        return e
    if isinstance(e, Sum):
        return add(*[_rebuild(op, repl) for op in e.operands])
    if isinstance(e, Product):
        return mul(*[_rebuild(op, repl) for op in e.operands])
    if isinstance(e, Power):
        return power(_rebuild(e.base, repl), e.exponent)
    if isinstance(e, Call):
        return Call(e.func, _rebuild(e.arg, repl))
    raise TypeError(f"not an expression: {e!r}")


def substitute(e: Expr, k: int, replacement: Expr) -> Expr:
    """Replace every occurrence of the order-``k`` derivative coordinate."""
    def repl(node):
        if isinstance(node, DerivCoord) and node.order == k:
            return replacement
        return None

    return simplify(_rebuild(e, repl))


def bind_parameters(e: Expr, values: Mapping[str, float]) -> Expr:
    """Replace named parameters listed in ``values`` with constants."""
    def repl(node):
        if isinstance(node, Parameter) and node.name in values:
            return Constant(float(values[node.name]))
        return None

    return simplify(_rebuild(e, repl))


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

@dataclass
class Binding:
    """Point at which expressions are evaluated.

    ``deriv_values[k]`` is the value of x^(k).  Every derivative order and
    every parameter name appearing in the expression must be covered;
    anything missing is an error, never a default.
    """

    time: float = 0.0
    deriv_values: Sequence[float] = ()
    parameters: Mapping[str, float] = None

    def __post_init__(self):
        if self.parameters is None:
            self.parameters = {}


def evaluate(e: Expr, b: Binding) -> float:
    """IEEE double evaluation in deterministic (canonical) operand order."""
    v = _eval(e, b)
    if not math.isfinite(v):
        raise NonFiniteError(f"expression evaluated to {v!r}")
    return v


def _eval(e: Expr, b: Binding) -> float:
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, Parameter):
        try:
            return float(b.parameters[e.name])
        except KeyError:
            raise MissingSymbolError(f"parameter {e.name!r} is not bound") from None
    if isinstance(e, TimeVar):
        return float(b.time)
    if isinstance(e, DerivCoord):
        if e.order >= len(b.deriv_values):
            raise MissingSymbolError(
                f"derivative order {e.order} is not bound "
                f"(binding covers orders 0..{len(b.deriv_values) - 1})")
        return float(b.deriv_values[e.order])
    if isinstance(e, Sum):
        return sum(_eval(op, b) for op in e.operands)
    if isinstance(e, Product):
        out = 1.0
        for op in e.operands:
            out *= _eval(op, b)
        return out
    if isinstance(e, Power):
        base = _eval(e.base, b)
        try:
            return base ** e.exponent
        except (OverflowError, ZeroDivisionError) as exc:
            raise NonFiniteError(f"{base!r} ** {e.exponent}: {exc}") from None
    if isinstance(e, Call):
        arg = _eval(e.arg, b)
        try:
            return _MATH[e.func](arg)
        except (OverflowError, ValueError) as exc:
            raise NonFiniteError(f"{e.func}({arg!r}): {exc}") from None
    raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------

def format_expr(e: Expr) -> str:
    """Render to source text; ``parse(format_expr(e))`` is structurally ``e``."""
    if isinstance(e, Sum):
        negative, body = _signed(e.operands[0], head=True)
        out = ("-" + body) if negative else body
        for op in e.operands[1:]:
            negative, body = _signed(op, head=False)
            out += (" - " if negative else " + ") + body
        return out
    negative, body = _signed(e, head=True)
    return ("-" + body) if negative else body


def _signed(e: Expr, head: bool):
    # Split an addend into (negative?, unsigned text).  A mid-sum " - "
    # negates the whole following term, so any (-1)-led product may split
    # there.  A leading "-" instead binds as part of the first factor's
    # base, so at head position the split is unsafe when the remainder
    # starts with a constant (the sign would be absorbed into the literal)
    # or with a power (the exponent would capture the negated base).
    if isinstance(e, Constant) and e.value < 0:
        return True, _fmt_number(-e.value)
    if isinstance(e, Product) and e.operands[0] == MINUS_ONE:
        rest = e.operands[1:]
        if not head or not isinstance(rest[0], (Constant, Power)):
            return True, "*".join(_fmt_factor(f) for f in rest)
    return False, _fmt_term(e)


def _fmt_term(e: Expr) -> str:
    if isinstance(e, Product):
        return "*".join(_fmt_factor(f) for f in e.operands)
    return _fmt_factor(e)


def _fmt_factor(e: Expr) -> str:
    if isinstance(e, Power):
        return f"{_fmt_base(e.base)}^{e.exponent}"
    return _fmt_base(e)


def _fmt_base(e: Expr) -> str:
    if isinstance(e, Constant):
        return _fmt_number(e.value)
    if isinstance(e, Parameter):
        return e.name
    if isinstance(e, TimeVar):
        return "t"
    if isinstance(e, DerivCoord):
        return "x" if e.order == 0 else f"d(x,{e.order})"
    if isinstance(e, Call):
        return f"{e.func}({format_expr(e.arg)})"
    return "(" + format_expr(e) + ")"


def _fmt_number(v: float) -> str:
    return repr(v)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[+\-*/^(),'])
  | (?P<ws>\s+)
""", re.VERBOSE)


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks = []  # (kind, value, offset)
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", pos)
            kind = m.lastgroup
            if kind != "ws":
                self.toks.append((kind, m.group(), pos))
            pos = m.end()
        self.toks.append(("eof", "", len(text)))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.peek()
        if val != value or kind == "eof":
            got = "end of input" if kind == "eof" else repr(val)
            raise ParseError(f"expected {value!r}, got {got}", off)
        return self.next()


def parse(text: str) -> Expr:
    """Parse DSL source text into a canonical expression tree.

    Grammar::

        expr    := term (("+"|"-") term)*
        term    := factor (("*"|"/") factor)*
        factor  := base ("^" integer)?
        base    := number | param | coord | "(" expr ")" | func "(" expr ")" | "-" base
        coord   := "x" "'"*  |  "d(x," integer ")"      (at most 3 primes)
        func    := "sin" | "cos" | "exp"

    ``t`` is the time variable; any other identifier not in the reserved set
    is a named parameter.  Errors carry the byte offset of the offending
    token.
    """
    toks = _Tokens(text)
    e = _parse_expr(toks)
    kind, val, off = toks.peek()
    if kind != "eof":
        raise ParseError(f"unexpected trailing input {val!r}", off)
    return e


def _parse_expr(toks: _Tokens) -> Expr:
    terms = [_parse_term(toks)]
    while toks.peek()[1] in ("+", "-"):
        _, op, _ = toks.next()
        rhs = _parse_term(toks)
        terms.append(rhs if op == "+" else neg(rhs))
    return add(*terms)


def _parse_term(toks: _Tokens) -> Expr:
    factors = [_parse_factor(toks)]
    while toks.peek()[1] in ("*", "/"):
        _, op, _ = toks.next()
        rhs = _parse_factor(toks)
        factors.append(rhs if op == "*" else power(rhs, -1))
    return mul(*factors)


def _parse_factor(toks: _Tokens) -> Expr:
    base = _parse_base(toks)
    if toks.peek()[1] == "^":
        toks.next()
        return power(base, _parse_integer(toks, "exponent"))
    return base


def _parse_integer(toks: _Tokens, what: str) -> int:
    sign = 1
    if toks.peek()[1] == "-":
        toks.next()
        sign = -1
    kind, val, off = toks.peek()
    if kind != "number":
        got = "end of input" if kind == "eof" else repr(val)
        raise ParseError(f"expected integer {what}, got {got}", off)
    if not re.fullmatch(r"\d+", val):
        raise ParseError(f"{what} must be an integer, got {val!r}", off)
    toks.next()
    return sign * int(val)


def _parse_base(toks: _Tokens) -> Expr:
    kind, val, off = toks.next()
    if kind == "number":
        return Constant(float(val))
    if val == "-":
        return neg(_parse_base(toks))
    if val == "(":
        e = _parse_expr(toks)
        toks.expect(")")
        return e
    if kind == "ident":
        if val == "t":
            return T
        if val == "x":
            order = 0
            while toks.peek()[1] == "'":
                _, _, qoff = toks.next()
                order += 1
                if order > 3:
                    raise ParseError("at most 3 primes allowed; use d(x,k)", qoff)
            return DerivCoord(order)
        if val == "d":
            toks.expect("(")
            kind2, val2, off2 = toks.next()
            if val2 != "x":
                raise ParseError(f"expected 'x' in d(x,k), got {val2!r}", off2)
            toks.expect(",")
            ioff = toks.peek()[2]
            order = _parse_integer(toks, "derivative order")
            if order < 0:
                raise ParseError("derivative order must be >= 0", ioff)
            toks.expect(")")
            return DerivCoord(order)
        if val in FUNCTIONS:
            toks.expect("(")
            arg = _parse_expr(toks)
            toks.expect(")")
            return Call(val, arg)
        if toks.peek()[1] == "(":
            raise ParseError(f"unknown function {val!r}", off)
        return Parameter(val)
    got = "end of input" if kind == "eof" else repr(val)
    raise ParseError(f"expected a value, got {got}", off)
