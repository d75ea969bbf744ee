import math
import random

import pytest

from ostro.variational import Lagrangian, euler_lagrange, solve_explicit
from ostro.dynamics import IntegratorConfig, PhaseState, Trajectory, integrate, to_first_order
from ostro.analysis import (
    CompareOptions, ComparisonReport, EnergyCoefficients, TaylorModel,
    action_gap, action_integral, compare, energy_decomposition, hidden_residual,
    model_from_state, newton_eval, quantum_potential, taylor_eval, uncertainty_pair,
)
from helpers import cos_derivatives, linear_fit, uniform_grid

HO = Lagrangian.from_text("0.5*d(x,1)^2 - 0.5*x^2")
HO_EOM = solve_explicit(euler_lagrange(HO))
PU = Lagrangian.from_text("0.5*d(x,2)^2 - 2.5*d(x,1)^2 + 2*x^2")
PU_EOM = solve_explicit(euler_lagrange(PU))
FREE = Lagrangian.from_text("0.5*d(x,1)^2")
FREE_EOM = solve_explicit(euler_lagrange(FREE))


def test_taylor_eval_examples():
    assert taylor_eval(TaylorModel(0.0, (0.0, 1.0, 2.0)), 1.0) == 2.0
    assert taylor_eval(TaylorModel(0.0, (0.0, 0.0, 0.0, 6.0)), 2.0) == 8.0
    model = TaylorModel(0.0, cos_derivatives(12))
    assert abs(taylor_eval(model, 1.0) - math.cos(1.0)) <= 1e-6


def test_newton_eval_examples():
    assert newton_eval(TaylorModel(0.0, (0.0, 1.0, 2.0, 99.0)), 1.0) == 2.0
    assert newton_eval(TaylorModel(0.0, (5.0, 0.0, 0.0, 3.0)), 7.7) == 5.0
    m = TaylorModel(0.0, (0.3, -1.2, 0.8))
    for t in (-2.0, 0.4, 3.0):
        assert newton_eval(m, t) == taylor_eval(m, t)


def test_hidden_residual_examples():
    assert hidden_residual(TaylorModel(0.0, (0.0, 0.0, 0.0, 6.0)), 1.0) == 1.0
    assert hidden_residual(TaylorModel(0.0, (1.0, 1.0, 1.0)), 4.2) == 0.0
    model = TaylorModel(0.0, cos_derivatives(10))
    t = 0.1
    lhs = taylor_eval(model, t) - newton_eval(model, t)
    assert abs(lhs - hidden_residual(model, t)) <= 1e-12


def test_decomposition_identity_random_models():
    rng = random.Random(2024)
    for _ in range(1000):
        order = rng.randrange(2, 12)
        c = tuple(rng.uniform(-2.0, 2.0) for _ in range(order + 1))
        model = TaylorModel(rng.uniform(-1.0, 1.0), c)
        t = model.t0 + rng.uniform(-1.5, 1.5)
        full = taylor_eval(model, t)
        split = newton_eval(model, t) + hidden_residual(model, t)
        assert abs(full - split) <= 1e-12 * max(1.0, abs(full))


def test_model_from_state_examples():
    m = model_from_state(PU_EOM, PhaseState(0.0, (1.0, 0.0, -1.0, 0.0)), 6)
    assert m.c == cos_derivatives(6)
    m = model_from_state(FREE_EOM, PhaseState(0.0, (0.0, 1.0)), 4)
    assert m.c == (0.0, 1.0, 0.0, 0.0, 0.0)
    m = model_from_state(HO_EOM, PhaseState(0.0, (1.0, 0.0)), 3)
    assert m.c == (1.0, 0.0, -1.0, 0.0)


def _grid_trajectory(fn_derivs, order, a, b, n):
    samples = [PhaseState(t, fn_derivs(t)[:order]) for t in uniform_grid(a, b, n)]
    return Trajectory(order=order, samples=samples)


def test_action_free_particle():
    traj = _grid_trajectory(lambda t: (t, 1.0), 2, 0.0, 1.0, 1024)
    assert abs(action_integral(FREE, traj) - 0.5) <= 1e-10


def test_action_harmonic_full_period():
    traj = _grid_trajectory(lambda t: (math.cos(t), -math.sin(t)), 2,
                            0.0, 2 * math.pi, 1024)
    assert abs(action_integral(HO, traj)) <= 1e-8


def test_action_constant_lagrangian():
    L = Lagrangian.from_text("c", {"c": 3.25})
    traj = _grid_trajectory(lambda t: (0.0, 0.0), 2, 0.0, 4.0, 64)
    assert action_integral(L, traj, intervals=64) == 3.25 * 4.0


def test_action_simpson_exact_on_cubics():
    L = Lagrangian.from_text("t^3 - 2*t^2 + t + 0.5*d(x,1)")
    traj = _grid_trajectory(lambda t: (1.0, 0.0), 2, 0.0, 2.0, 1024)
    exact = 2.0 ** 4 / 4 - 2 * 2.0 ** 3 / 3 + 2.0 ** 2 / 2
    got = action_integral(L, traj)
    assert abs(got - exact) <= 1e-12 * max(1.0, abs(exact))


def test_action_needs_eom_for_higher_orders():
    traj = _grid_trajectory(lambda t: (math.cos(t), -math.sin(t)), 2,
                            0.0, 1.0, 64)
    L2 = Lagrangian.from_text("0.5*d(x,2)^2")
    with pytest.raises(ValueError, match="d\\(x,2\\)"):
        action_integral(L2, traj, intervals=64)
    got = action_integral(L2, traj, intervals=64, eom=HO_EOM)
    exact = 0.25 * (1.0 + math.sin(1.0) * math.cos(1.0))  # int 0.5*cos^2
    assert abs(got - exact) <= 1e-8


def test_action_gap_basics():
    assert action_gap(2.5, 0.0, 1.0) == (2.5, 2.5)
    assert action_gap(1.25, 1.25, 0.5) == (0.0, 0.0)
    delta, n = action_gap(3.0, 1.0, 0.25)
    assert delta == 2.0 and n == 8.0
    with pytest.raises(ValueError):
        action_gap(1.0, 0.0, 0.0)


def test_uncertainty_pair_examples():
    lhs, rhs = uncertainty_pair(TaylorModel(0.0, (0.0, 0.0, 0.0, 6.0)), 1.0, 1.0)
    assert lhs == 3.0 and rhs == 3.0
    lhs, rhs = uncertainty_pair(TaylorModel(0.0, (1.0, 1.0, 0.0, 6.0)), 1.0, 1.0)
    assert lhs == 10.0 and rhs == 3.0
    lhs, rhs = uncertainty_pair(TaylorModel(0.0, (0.4, -0.3, 1.1)), 2.0, 5.0)
    assert lhs == 0.0 and rhs == 0.0


def test_uncertainty_pair_degenerate_newtonian_part():
    rng = random.Random(55)
    for _ in range(100):
        order = rng.randrange(3, 9)
        c = (0.0, 0.0, 0.0) + tuple(rng.uniform(-2, 2) for _ in range(order - 2))
        model = TaylorModel(0.0, c)
        t = rng.uniform(-1.2, 1.2)
        lhs, rhs = uncertainty_pair(model, 1.7, t)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_uncertainty_pair_rejects_nonpositive_mass():
    with pytest.raises(ValueError):
        uncertainty_pair(TaylorModel(0.0, (1.0, 0.0, 0.0)), 0.0, 1.0)


def test_quantum_potential_examples():
    assert quantum_potential(FREE, FREE_EOM, PhaseState(0.0, (0.3, 2.0)), 1) == 0.0
    assert quantum_potential(HO, HO_EOM, PhaseState(0.0, (1.0, 0.0)), 1) == 0.0
    assert quantum_potential(PU, PU_EOM, PhaseState(0.0, (1.0, 0.0, -1.0, 0.0)), 2) == 0.0
    assert quantum_potential(PU, PU_EOM, PhaseState(0.0, (0.0, 1.0, 0.0, -1.0)), 2) == 0.0


def test_quantum_potential_first_order_identity():
    # with one term on an N = 1 system, Q is exactly dL/dx' * x''
    rng = random.Random(8)
    L = Lagrangian.from_text("0.5*d(x,1)^2 - 0.5*x^2 + 0.3*x*d(x,1)")
    eom = solve_explicit(euler_lagrange(L))
    for _ in range(20):
        s = PhaseState(0.0, (rng.uniform(-2, 2), rng.uniform(-2, 2)))
        xdd = (-s.y[0] - 0.3 * 0.0)  # residual: -x - x'' = 0 after the x*x' term cancels
        p = s.y[1] + 0.3 * s.y[0]
        assert quantum_potential(L, eom, s, 1) == p * xdd


def test_energy_decomposition_examples():
    assert energy_decomposition((0.5, 0.5, 0.5), (1.0, 0.0, 2.0)) == (0.5, 0.0, 2.0, 2.5)
    assert energy_decomposition((0.0, 0.0, 0.0), (1.0, 2.0, 3.0)) == (0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        energy_decomposition((0.5, 0.5, 0.5), (1.0, 0.0))
    assert energy_decomposition(EnergyCoefficients((1.0, 2.0)),
                                PhaseState(0.0, (3.0, 4.0))) == (9.0, 32.0, 0.0, 41.0)


def test_energy_conserved_on_harmonic_solution():
    traj = integrate(to_first_order(HO_EOM), PhaseState(0.0, (1.0, 0.0)),
                     2 * math.pi, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
    for s in traj.samples:
        v, w, q, e = energy_decomposition((0.5, 0.5), s)
        assert q == 0.0
        assert abs(e - 0.5) <= 1e-8


CFG = IntegratorConfig(method="rk45", rel_tol=1e-10, abs_tol=1e-12)


def test_compare_identical_systems():
    rep = compare(HO, HO, PhaseState(0.0, (1.0, 0.0)), PhaseState(0.0, (1.0, 0.0)),
                  10.0, CFG, h=1.0, m=1.0)
    assert abs(rep.delta_s) <= 1e-9
    assert abs(rep.n) <= 1e-9
    assert max(abs(q_dyn) for _, _, q_dyn in rep.q_r) <= 1e-9
    assert rep.delta_s == rep.s - rep.s_newton
    assert abs(rep.n * rep.h - rep.delta_s) <= 1e-12 * max(1.0, abs(rep.delta_s))


def test_compare_zero_coefficient_equals_absent_term():
    with_eps = Lagrangian.from_text("0.5*d(x,1)^2 - 0.5*x^2 - eps*d(x,2)^2",
                                    {"eps": 0.0})
    rep_a = compare(with_eps, HO, PhaseState(0.0, (1.0, 0.0)),
                    PhaseState(0.0, (1.0, 0.0)), 10.0, CFG, h=1.0, m=1.0)
    rep_b = compare(HO, HO, PhaseState(0.0, (1.0, 0.0)),
                    PhaseState(0.0, (1.0, 0.0)), 10.0, CFG, h=1.0, m=1.0)
    assert rep_a.to_dict() == rep_b.to_dict()


def _perturbed_report(eps: float, t_end=10.0):
    L_full = Lagrangian.from_text("0.5*d(x,1)^2 - 0.5*x^2 - eps*d(x,2)^2",
                                  {"eps": eps})
    return compare(L_full, HO,
                   PhaseState(0.0, (1.0, 0.0, -1.0, 0.0)), PhaseState(0.0, (1.0, 0.0)),
                   t_end, CFG, h=1.0, m=1.0,
                   options=CompareOptions(report_samples=64, action_intervals=2048))


def test_compare_gap_monotone_in_perturbation():
    gaps = [abs(_perturbed_report(eps).delta_s) for eps in (1e-5, 1e-4, 1e-3)]
    assert gaps[0] > 0.0
    assert gaps[0] < gaps[1] < gaps[2]


def test_compare_gap_linear_in_perturbation():
    eps = (1e-6, 1e-5, 1e-4, 1e-3)
    gaps = [_perturbed_report(e).delta_s for e in eps]
    slope, intercept, r2 = linear_fit(list(eps), gaps)
    assert r2 >= 0.999


def test_compare_validates_initial_states():
    with pytest.raises(ValueError, match="share"):
        compare(HO, HO, PhaseState(0.0, (1.0, 0.0)), PhaseState(0.0, (2.0, 0.0)),
                5.0, CFG, h=1.0, m=1.0)
    with pytest.raises(ValueError, match="entries"):
        compare(PU, HO, PhaseState(0.0, (1.0, 0.0)), PhaseState(0.0, (1.0, 0.0)),
                5.0, CFG, h=1.0, m=1.0)


def test_report_energy_and_q_series():
    rep = compare(PU, HO, PhaseState(0.0, (1.0, 0.0, -1.0, 0.0)),
                  PhaseState(0.0, (1.0, 0.0)), 6.0, CFG, h=1.0, m=1.0,
                  options=CompareOptions(report_samples=32, alphas=(0.5, 0.5)))
    assert len(rep.energy) == 32
    assert len(rep.quantum_potential) == 32
    # x = cos t solves the full system: V + W = 0.5 along it
    for t, v, w, q, e in rep.energy:
        assert abs(e - 0.5) <= 1e-6
    d = rep.to_dict()
    assert set(d) == {"s", "s_newton", "delta_s", "n", "h", "m",
                      "q_r", "uncertainty", "quantum_potential", "energy"}


def test_report_truncation_tail_matches_kinematics():
    # near t0 the kinematic q_r column behaves like c3 * dt^3 / 6
    rep = compare(PU, HO, PhaseState(0.0, (0.0, 1.0, 0.0, -1.0)),
                  PhaseState(0.0, (0.0, 1.0)), 0.5, CFG, h=1.0, m=1.0,
                  options=CompareOptions(report_samples=128))
    t, q_kin, _ = rep.q_r[1]
    assert abs(q_kin / t ** 3 - (-1.0 / 6.0)) <= 0.05 / 6.0
