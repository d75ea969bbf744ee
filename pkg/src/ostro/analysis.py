"""Diagnostics comparing full higher-derivative dynamics against the
second-order (Newtonian) truncation.

The kinematic side works on a Taylor model of the trajectory around an
expansion point: the quadratic head r_N = c0 + c1*u + c2*u^2/2 is the
Newtonian prediction, and everything above it,

    q_r(u) = sum_{k>=3} c_k u^k / k!,

is the residual the truncation hides.  The dynamic side compares action
integrals: S along the full trajectory versus S_Newton along the truncated
system's own trajectory, their gap expressed as a multiple n = (S - S_N)/h
of a configurable action quantum h.

Two further trajectory-level quantities are evaluated (never asserted):

* the product pair m*(r*r' - r_N*r_N') versus m*(r - r_N)*(r' - r_N'),
  which differ in general by the cross terms the shorthand drops, and agree
  exactly when the Newtonian part vanishes identically;
* Q = sum_a p^(a) * x^(a+2), the odd-gradient ladder contracted with the
  acceleration ladder, evaluated along the motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .expr import Binding, evaluate, max_deriv_order, partial
from .variational import Lagrangian, EquationOfMotion, euler_lagrange, solve_explicit
from .dynamics import (
    IntegratorConfig, PhaseState, Trajectory, integrate, resample,
    state_derivatives, to_first_order,
)


@dataclass(frozen=True)
class TaylorModel:
    """Derivative coefficients c[k] = x^(k)(t0), k = 0..M, with M >= 2."""

    t0: float
    c: tuple

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if len(self.c) < 3:
            raise ValueError("need at least orders 0..2 (the Newtonian head)")
        if not all(math.isfinite(v) for v in self.c):
            raise ValueError("coefficients must be finite")

    @property
    def order(self) -> int:
        return len(self.c) - 1


@dataclass(frozen=True)
class EnergyCoefficients:
    """Quadratic-form weights: alphas[0] on x^2, alphas[1] on x'^2, and
    alphas[i] on (x^(i))^2 for i >= 2."""

    alphas: tuple

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if len(self.alphas) < 2:
            raise ValueError("need at least the x^2 and x'^2 weights")


@dataclass
class ComparisonReport:
    """Everything :func:`compare` measures.  Series rows are tuples led by t."""

    s: float
    s_newton: float
    delta_s: float
    n: float
    h: float
    m: float
    q_r: list            # (t, q_kinematic, q_dynamic)
    uncertainty: list    # (t, lhs, rhs)
    quantum_potential: list  # (t, q)
    energy: list         # (t, v, w, q_energy, e)

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "s_newton": self.s_newton,
            "delta_s": self.delta_s,
            "n": self.n,
            "h": self.h,
            "m": self.m,
            "q_r": [list(row) for row in self.q_r],
            "uncertainty": [list(row) for row in self.uncertainty],
            "quantum_potential": [list(row) for row in self.quantum_potential],
            "energy": [list(row) for row in self.energy],
        }


# --------------------------------------------------------------------------
# Taylor kinematics
# --------------------------------------------------------------------------

def taylor_eval(model: TaylorModel, t: float) -> float:
    """sum_k c[k] (t - t0)^k / k!"""
    u = t - model.t0
    acc = 0.0
    term = 1.0
    for k, ck in enumerate(model.c):
        if k > 0:
            term *= u / k
        acc += ck * term
    return acc


def taylor_deriv_eval(model: TaylorModel, t: float) -> float:
    """First derivative of the Taylor polynomial at t."""
    u = t - model.t0
    acc = 0.0
    term = 1.0
    for k in range(1, len(model.c)):
        if k > 1:
            term *= u / (k - 1)
        acc += model.c[k] * term
    return acc


def newton_eval(model: TaylorModel, t: float) -> float:
    """Quadratic head c0 + c1*u + c2*u^2/2; higher coefficients ignored.

    The term arithmetic mirrors :func:`taylor_eval` operation for operation,
    so an order-2 model evaluates bit-identically under both.
    """
    u = t - model.t0
    return model.c[0] + model.c[1] * u + model.c[2] * (u * (u / 2.0))


def hidden_residual(model: TaylorModel, t: float) -> float:
    """Tail sum_{k>=3} c[k] u^k / k!, so that taylor = newton + residual."""
    u = t - model.t0
    acc = 0.0
    term = u * (u / 2.0)
    for k in range(3, len(model.c)):
        term *= u / k
        acc += model.c[k] * term
    return acc


def model_from_state(eom: EquationOfMotion, s: PhaseState, order: int,
                     parameters=None) -> TaylorModel:
    """Taylor model of the solution through ``s``, using the equation of
    motion to continue derivatives above the state."""
    if order < 2:
        raise ValueError("order must be at least 2")
    c = state_derivatives(eom, s, max(order, eom.order - 1), parameters)
    return TaylorModel(t0=s.t, c=tuple(c[:order + 1]))


# --------------------------------------------------------------------------
# action
# --------------------------------------------------------------------------

def action_integral(L: Lagrangian, traj: Trajectory, intervals: int = 1024,
                    eom: Optional[EquationOfMotion] = None) -> float:
    """Composite-Simpson integral of L along the trajectory.

    The trajectory is resampled on a uniform grid of ``intervals`` cells
    (even, default 1024).  If L references derivative orders beyond the
    state, ``eom`` must be given so the missing orders can be continued
    through the equation of motion.
    """
    if intervals < 2 or intervals % 2 != 0:
        raise ValueError("intervals must be even and >= 2")
    needed = max_deriv_order(L.body)
    if needed >= traj.order and eom is None:
        raise ValueError(
            f"integrand references d(x,{needed}) but states carry orders "
            f"0..{traj.order - 1}; pass the equation of motion to extend them")
    a, b = traj.t0, traj.t1
    ts = [a + (b - a) * i / intervals for i in range(intervals + 1)]
    ts[-1] = b
    states = resample(traj, ts)
    values = []
    for s in states:
        if needed >= traj.order:
            vals = state_derivatives(eom, s, max(needed, eom.order - 1), L.parameters)
        else:
            vals = s.y
        values.append(evaluate(L.body, Binding(time=s.t, deriv_values=vals,
                                               parameters=L.parameters)))
    h = (b - a) / intervals
    acc = values[0] + values[-1]
    acc += 4.0 * sum(values[i] for i in range(1, intervals, 2))
    acc += 2.0 * sum(values[i] for i in range(2, intervals, 2))
    return acc * h / 3.0


def action_gap(s: float, s_newton: float, h: float):
    """delta = s - s_newton and its expression n = delta/h as a multiple of
    the action quantum h; n is reported as a real number, never rounded."""
    if h <= 0:
        raise ValueError("h must be positive")
    delta = s - s_newton
    return delta, delta / h


# --------------------------------------------------------------------------
# trajectory-level diagnostics
# --------------------------------------------------------------------------

def uncertainty_pair(full: TaylorModel, m: float, t: float):
    """Both sides of the truncation-product identity at time t.

    lhs = m*(r*r' - r_N*r_N'), rhs = m*(r - r_N)*(r' - r_N') with r from the
    full model and r_N from its quadratic head.  The two agree only when the
    Newtonian part vanishes; both are returned, nothing is asserted.
    """
    if m <= 0:
        raise ValueError("mass must be positive")
    u = t - full.t0
    r = taylor_eval(full, t)
    rdot = taylor_deriv_eval(full, t)
    r_n = newton_eval(full, t)
    rdot_n = full.c[1] + full.c[2] * u
    lhs = m * (r * rdot - r_n * rdot_n)
    rhs = m * (r - r_n) * (rdot - rdot_n)
    return lhs, rhs


def quantum_potential(L: Lagrangian, eom: EquationOfMotion, s: PhaseState,
                      n_terms: int) -> float:
    """Q = sum_{a=0}^{n_terms-1} p^(a) * x^(a+2) at the state ``s``, where
    p^(a) = dL/dx^(2a+1) and derivatives above the state come from the
    equation of motion."""
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    top = n_terms + 1
    vals = state_derivatives(eom, s, max(top, eom.order - 1), L.parameters)
    b = Binding(time=s.t, deriv_values=vals, parameters=L.parameters)
    q = 0.0
    for a in range(n_terms):
        p = partial(L.body, 2 * a + 1)
        q += evaluate(p, b) * vals[a + 2]
    return q


def energy_decomposition(coeffs, derivs):
    """(V, W, Q_energy, E): V = a1*x^2, W = a2*x'^2, Q_energy the weighted
    squares of the higher derivatives, E their sum.

    ``derivs`` may be a PhaseState or a plain sequence of derivative values;
    it must cover every order the coefficient list references.
    """
    alphas = coeffs.alphas if isinstance(coeffs, EnergyCoefficients) \
        else EnergyCoefficients(tuple(coeffs)).alphas
    vals = derivs.y if isinstance(derivs, PhaseState) else tuple(derivs)
    if len(vals) < len(alphas):
        raise ValueError(
            f"need derivative orders 0..{len(alphas) - 1}, got 0..{len(vals) - 1}")
    v = alphas[0] * vals[0] ** 2
    w = alphas[1] * vals[1] ** 2
    q = sum(alphas[i] * vals[i] ** 2 for i in range(2, len(alphas)))
    return v, w, q, v + w + q


# --------------------------------------------------------------------------
# the full comparison pipeline
# --------------------------------------------------------------------------

@dataclass
class CompareOptions:
    report_samples: int = 256
    taylor_order: int = 8
    action_intervals: int = 1024
    n_terms: Optional[int] = None
    alphas: Optional[Sequence[float]] = None


def compare(L_full: Lagrangian, L_newton: Lagrangian,
            init_full: PhaseState, init_newton: PhaseState,
            t_end: float, cfg: IntegratorConfig, h: float, m: float,
            options: Optional[CompareOptions] = None) -> ComparisonReport:
    """Integrate the full and truncated systems side by side and report.

    Parameters are substituted into both Lagrangians up front, so a
    coefficient set to zero drops out structurally and lowers the derived
    order.  The initial states must agree in x and x'.
    """
    opt = options or CompareOptions()
    lf = L_full.bound()
    ln = L_newton.bound()
    eom_f = solve_explicit(euler_lagrange(lf))
    eom_n = solve_explicit(euler_lagrange(ln))
    if len(init_full.y) != eom_f.order:
        raise ValueError(
            f"full initial state has {len(init_full.y)} entries, equation "
            f"of motion has order {eom_f.order}")
    if len(init_newton.y) != eom_n.order:
        raise ValueError(
            f"truncated initial state has {len(init_newton.y)} entries, "
            f"equation of motion has order {eom_n.order}")
    if init_newton.t != init_full.t or init_newton.y[:2] != init_full.y[:2]:
        raise ValueError("initial states must share t, x and x'")

    traj_f = integrate(to_first_order(eom_f), init_full, t_end, cfg)
    traj_n = integrate(to_first_order(eom_n), init_newton, t_end, cfg)

    s_full = action_integral(lf, traj_f, opt.action_intervals)
    s_newton = action_integral(ln, traj_n, opt.action_intervals)
    delta, n = action_gap(s_full, s_newton, h)

    model0 = model_from_state(eom_f, init_full, opt.taylor_order)
    n_terms = opt.n_terms if opt.n_terms is not None else max(1, (lf.order + 1) // 2)

    t0 = init_full.t
    grid_n = max(2, opt.report_samples)
    ts = [t0 + (t_end - t0) * i / (grid_n - 1) for i in range(grid_n)]
    ts[-1] = t_end
    states_f = resample(traj_f, ts)
    states_n = resample(traj_n, ts)

    q_r = []
    uncertainty = []
    q_series = []
    energy = []
    alphas = EnergyCoefficients(tuple(opt.alphas)) if opt.alphas else None
    for t, sf, sn in zip(ts, states_f, states_n):
        q_kin = sf.y[0] - newton_eval(model0, t)
        q_dyn = sf.y[0] - sn.y[0]
        q_r.append((t, q_kin, q_dyn))
        lhs, rhs = uncertainty_pair(model0, m, t)
        uncertainty.append((t, lhs, rhs))
        q_series.append((t, quantum_potential(lf, eom_f, sf, n_terms)))
        if alphas is not None:
            vals = state_derivatives(eom_f, sf,
                                     max(len(alphas.alphas) - 1, eom_f.order - 1))
            energy.append((t,) + energy_decomposition(alphas, vals))

    return ComparisonReport(s=s_full, s_newton=s_newton, delta_s=delta, n=n,
                            h=h, m=m, q_r=q_r, uncertainty=uncertainty,
                            quantum_potential=q_series, energy=energy)
