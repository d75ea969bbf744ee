"""Shared test utilities: random tree generation, bindings, fits, stencils."""

import math
import random

from ostro.expr import (
    Binding, Call, Constant, DerivCoord, Parameter, TimeVar,
    add, evaluate, free_parameters, max_deriv_order, mul, neg, power, simplify, sub,
)

PARAM_NAMES = ("a", "b", "c", "k", "m")


def random_expr(rng: random.Random, depth: int = 4):
    """Random expression tree, biased toward well-scaled evaluation."""
    if depth <= 0:
        pick = rng.random()
        if pick < 0.3:
            return Constant(round(rng.uniform(-3.0, 3.0), 3))
        if pick < 0.5:
            return Parameter(rng.choice(PARAM_NAMES))
        if pick < 0.6:
            return TimeVar()
        return DerivCoord(rng.randrange(0, 5))
    pick = rng.random()
    if pick < 0.35:
        return add(*[random_expr(rng, depth - 1) for _ in range(rng.randrange(2, 4))])
    if pick < 0.70:
        return mul(*[random_expr(rng, depth - 1) for _ in range(rng.randrange(2, 4))])
    if pick < 0.80:
        exp = rng.choice([-2, -1, 2, 3])
        return power(random_expr(rng, depth - 1), exp)
    if pick < 0.90:
        return Call(rng.choice(("sin", "cos")), random_expr(rng, depth - 1))
    if pick < 0.95:
        return neg(random_expr(rng, depth - 1))
    return Call("exp", random_expr(rng, 1))


def random_binding(rng: random.Random, e, lo=0.5, hi=1.6):
    """Binding covering every symbol of ``e``, with values kept away from 0
    so that negative powers stay well conditioned."""
    orders = max_deriv_order(e)
    vals = tuple(rng.choice([-1.0, 1.0]) * rng.uniform(lo, hi) for _ in range(orders + 1))
    params = {name: rng.choice([-1.0, 1.0]) * rng.uniform(lo, hi)
              for name in free_parameters(e)}
    return Binding(time=rng.uniform(-1.0, 1.0), deriv_values=vals, parameters=params)


def structurally_zero(e) -> bool:
    return simplify(e) == Constant(0.0)


def equivalent(a, b) -> bool:
    """Structural equality of a and b after cancellation (a - b -> 0)."""
    return structurally_zero(sub(a, b))


def eval_close(a, b, binding, rtol=1e-12) -> bool:
    va = evaluate(a, binding)
    vb = evaluate(b, binding)
    return abs(va - vb) <= rtol * max(1.0, abs(va), abs(vb))


def rel_err(got: float, want: float) -> float:
    return abs(got - want) / max(1.0, abs(got), abs(want))


def linear_fit(xs, ys):
    """Least-squares slope, intercept and R^2 for y = a*x + b."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - my) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def cos_derivatives(n: int, amplitude=1.0):
    """Derivatives of amplitude*cos(t) at t = 0, orders 0..n."""
    pattern = (1.0, 0.0, -1.0, 0.0)
    return tuple(amplitude * pattern[k % 4] for k in range(n + 1))


def sin_derivatives(n: int):
    pattern = (0.0, 1.0, 0.0, -1.0)
    return tuple(pattern[k % 4] for k in range(n + 1))


def central_stencil(series, i, k, h):
    """Central finite-difference estimate of the k-th derivative (k <= 4),
    O(h^2) accurate, from uniformly spaced samples."""
    s = series
    if k == 0:
        return s[i]
    if k == 1:
        return (s[i + 1] - s[i - 1]) / (2 * h)
    if k == 2:
        return (s[i + 1] - 2 * s[i] + s[i - 1]) / h ** 2
    if k == 3:
        return (s[i + 2] - 2 * s[i + 1] + 2 * s[i - 1] - s[i - 2]) / (2 * h ** 3)
    if k == 4:
        return (s[i + 2] - 4 * s[i + 1] + 6 * s[i] - 4 * s[i - 1] + s[i - 2]) / h ** 4
    raise ValueError(k)


def uniform_grid(a: float, b: float, n: int):
    ts = [a + (b - a) * i / n for i in range(n + 1)]
    ts[-1] = b
    return ts
