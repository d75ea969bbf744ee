"""Equations of motion and conserved quantities for higher-derivative Lagrangians.

For a Lagrangian L(t, x, x', ..., x^(N)) the stationary-action condition is

    sum_{n=0}^{N} (-1)^n (d/dt)^n [dL/dx^(n)] = 0,

an ODE of order 2N.  Alongside it this module computes two quantity ladders:

* the even/odd gradient ladder F^(a) = dL/dx^(2a), p^(a) = dL/dx^(2a+1),
  together with the force-balance evaluator that reports
  sum_a F^(a)  versus  sum_a d^(a+1) p^(a) / dt^(a+1) along a trajectory
  (the two sides are reported, not asserted equal: for N > 1 they
  genuinely differ on solutions, while the Euler-Lagrange residual is the
  criterion that vanishes);
* the standard canonical momenta
  p_k = sum_{j=k+1}^{N} (-1)^(j-k-1) (d/dt)^(j-k-1) [dL/dx^(j)]
  whose Hamiltonian H = sum_k p_k x^(k+1) - L is conserved for
  time-independent L and serves as the energy oracle of the test suite.

All functions are pure and all returned values immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .expr import (
    Binding, Constant, DerivCoord, Expr,
    add, bind_parameters, contains_time, evaluate, format_expr, max_deriv_order,
    mul, neg, partial, power, simplify, substitute, total_time_derivative,
)


class DegenerateLagrangianError(ValueError):
    """The leading-order coefficient vanishes or is not constant, so the
    equation of motion cannot be solved for its highest derivative."""


@dataclass(frozen=True)
class Lagrangian:
    """A Lagrangian body plus parameter values.

    ``order`` is the highest derivative order appearing in the simplified
    body (at least 1, so that derivative-free bodies still define the
    classical index ranges).  The body is stored simplified; parameters stay
    symbolic until :meth:`bound` is called.
    """

    body: Expr
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "body", simplify(self.body))
        object.__setattr__(self, "parameters", dict(self.parameters))

    @classmethod
    def from_text(cls, text: str, parameters: Optional[Mapping[str, float]] = None):
        from .expr import parse
        return cls(parse(text), parameters or {})

    @property
    def order(self) -> int:
        return max(1, max_deriv_order(self.body))

    def bound(self) -> "Lagrangian":
        """Substitute the stored parameter values into the body.

        A vanishing coefficient then disappears structurally, which can
        lower the derivative order of the resulting Lagrangian.
        """
        return Lagrangian(bind_parameters(self.body, self.parameters), {})


@dataclass(frozen=True)
class EquationOfMotion:
    """residual == 0 is the equation of motion; ``order`` is 2N.

    ``explicit_rhs`` is g with x^(2N) = g(t, x, ..., x^(2N-1)), present only
    after :func:`solve_explicit`.
    """

    residual: Expr
    order: int
    explicit_rhs: Optional[Expr] = None


@dataclass(frozen=True)
class MomentumSet:
    """The two momentum ladders of a Lagrangian.

    ``forces[a]`` is dL/dx^(2a) for a = 0..floor(N/2); ``momenta[a]`` is
    dL/dx^(2a+1) for a = 0..ceil(N/2)-1; ``canonical_momenta[k]`` are the
    standard higher-order momenta for k = 0..N-1, and ``hamiltonian`` their
    Legendre transform.
    """

    forces: tuple
    momenta: tuple
    canonical_momenta: tuple
    hamiltonian: Expr


def euler_lagrange(L: Lagrangian) -> EquationOfMotion:
    """Derive the order-2N equation of motion of ``L``.

    The residual keeps the sign convention with the n = 0 term positive:
    dL/dx - d/dt(dL/dx') + d^2/dt^2(dL/dx'') - ...
    """
    n = L.order
    terms = []
    for k in range(n + 1):
        term = partial(L.body, k)
        for _ in range(k):
            term = total_time_derivative(term)
        if k % 2 == 1:
            term = neg(term)
        terms.append(term)
    return EquationOfMotion(residual=simplify(add(*terms)), order=2 * n)


def solve_explicit(eom: EquationOfMotion) -> EquationOfMotion:
    """Solve the residual for its leading derivative x^(2N).

    Requires the residual to be affine in x^(2N) with a coefficient free of
    t and of all derivative coordinates (parameters are fine); otherwise
    raises :class:`DegenerateLagrangianError`.
    """
    top = eom.order
    coeff = partial(eom.residual, top)
    if max_deriv_order(coeff) >= 0 or contains_time(coeff):
        raise DegenerateLagrangianError(
            f"coefficient of d(x,{top}) is not constant: {format_expr(coeff)}")
    if coeff == Constant(0.0):
        raise DegenerateLagrangianError(f"coefficient of d(x,{top}) vanishes")
    rest = substitute(eom.residual, top, Constant(0.0))
    rhs = simplify(mul(Constant(-1.0), rest, power(coeff, -1)))
    return EquationOfMotion(residual=eom.residual, order=eom.order, explicit_rhs=rhs)


def generalized_forces(L: Lagrangian) -> list:
    """F^(a) = dL/dx^(2a) for a = 0..floor(N/2)."""
    return [partial(L.body, 2 * a) for a in range(L.order // 2 + 1)]


def generalized_momenta(L: Lagrangian) -> list:
    """p^(a) = dL/dx^(2a+1) for a = 0..ceil(N/2)-1."""
    count = (L.order + 1) // 2
    return [partial(L.body, 2 * a + 1) for a in range(count)]


def ostrogradski_momenta(L: Lagrangian) -> list:
    """Canonical momenta p_k, k = 0..N-1, conjugate to x^(k)."""
    n = L.order
    out = []
    for k in range(n):
        terms = []
        for j in range(k + 1, n + 1):
            term = partial(L.body, j)
            for _ in range(j - k - 1):
                term = total_time_derivative(term)
            if (j - k - 1) % 2 == 1:
                term = neg(term)
            terms.append(term)
        out.append(simplify(add(*terms)))
    return out


def ostrogradski_hamiltonian(L: Lagrangian) -> Expr:
    """H = sum_k p_k x^(k+1) - L; conserved when L has no explicit time."""
    momenta = ostrogradski_momenta(L)
    terms = [mul(p, DerivCoord(k + 1)) for k, p in enumerate(momenta)]
    terms.append(neg(L.body))
    return simplify(add(*terms))


def momentum_set(L: Lagrangian) -> MomentumSet:
    return MomentumSet(
        forces=tuple(generalized_forces(L)),
        momenta=tuple(generalized_momenta(L)),
        canonical_momenta=tuple(ostrogradski_momenta(L)),
        hamiltonian=ostrogradski_hamiltonian(L),
    )


def force_balance_eval(L: Lagrangian, traj) -> list:
    """Evaluate the force-balance ledger along a trajectory.

    Returns rows ``(t, lhs, rhs, el_residual)`` where lhs = sum_a F^(a),
    rhs = sum_a d^(a+1) p^(a) / dt^(a+1) (total derivatives taken
    symbolically, then evaluated) and el_residual is the Euler-Lagrange
    residual at the same point.  All three are reported; only el_residual
    is expected to vanish on solutions.
    """
    from .dynamics import state_derivatives

    eom = solve_explicit(euler_lagrange(L))
    if traj.order < eom.order:
        raise ValueError(
            f"trajectory carries {traj.order} derivatives, need {eom.order}")
    lhs_expr = simplify(add(*generalized_forces(L)))
    rhs_terms = []
    for a, p in enumerate(generalized_momenta(L)):
        term = p
        for _ in range(a + 1):
            term = total_time_derivative(term)
        rhs_terms.append(term)
    rhs_expr = simplify(add(*rhs_terms))
    needed = max(max_deriv_order(lhs_expr), max_deriv_order(rhs_expr),
                 max_deriv_order(eom.residual), eom.order - 1)
    rows = []
    for s in traj.samples:
        c = state_derivatives(eom, s, needed, parameters=L.parameters)
        b = Binding(time=s.t, deriv_values=c, parameters=L.parameters)
        rows.append((s.t,
                     evaluate(lhs_expr, b),
                     evaluate(rhs_expr, b),
                     evaluate(eom.residual, b)))
    return rows


def equations_document(L: Lagrangian) -> dict:
    """Serializable summary of everything derived from ``L``."""
    eom = solve_explicit(euler_lagrange(L))
    ms = momentum_set(L)
    return {
        "residual": format_expr(eom.residual),
        "explicit_rhs": format_expr(eom.explicit_rhs),
        "order": eom.order,
        "F_alpha": [format_expr(f) for f in ms.forces],
        "p_alpha": [format_expr(p) for p in ms.momenta],
        "ostro_momenta": [format_expr(p) for p in ms.canonical_momenta],
        "hamiltonian": format_expr(ms.hamiltonian),
    }
