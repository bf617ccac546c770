from __future__ import annotations

import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from fpdvi.errors import DimensionMismatch, GridMismatch, InvalidOrder, MaxOuterExceeded
from fpdvi.evolution import (
    FPDVIProblem,
    Trajectory,
    apply_gamma,
    build_tables,
    refine_and_estimate_order,
    solve_fpdvi,
)
from fpdvi.fracops import TimeGrid
from fpdvi.hypotheses import estimate_theta_A, select_weight_L
from fpdvi.maps import ConstantMap, ConstantNonlocal, LinearPointsNonlocal
from fpdvi.problem_io import load_problem
from fpdvi.vi import Affine, Box, Zero, natural_residual, VIProblem

from conftest import FIXTURES, PROBLEMS, ml_reference, scalar_problem


def classical_reference(lp):
    """Exact path of the alpha = 1 benchmark: u = -C theta, so theta' = (A + F - B C) theta + c."""
    d = lp.document
    A = np.array(d["A"])
    B = np.array(d["B"]["value"])
    F = np.array(d["f"]["linear"])
    c = np.array(d["f"]["const"])
    C = np.array(d["g"]["linear"])
    h = np.array(d["h"]["value"])
    n = A.shape[0]
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = A + F - B @ C
    aug[:n, n] = c

    def ref(t):
        return np.stack([(expm(s * aug) @ np.append(h, 1.0))[:n] for s in np.atleast_1d(t)])

    return ref, aug[:n, :n], c, h


# operator tables


def test_tables_with_zero_generator():
    p = scalar_problem(0.4, A=0.0)
    tab = build_tables(p, TimeGrid.uniform(1.0, 16))
    assert np.allclose(tab.E1, 1.0, atol=1e-15)
    assert np.allclose(tab.E2, 1 / math.gamma(0.4), atol=1e-14)


@pytest.mark.parametrize("kind", ["uniform", "graded"])
def test_weight_mass_and_positivity(kind):
    g = TimeGrid.uniform(2.0, 40) if kind == "uniform" else TimeGrid.graded(2.0, 40, 2.5)
    tab = build_tables(scalar_problem(0.35, A=-1.0, T=2.0), g)
    assert np.array_equal(tab.E1[0], np.eye(1))
    for i in range(1, 41):
        w = tab.weights(i)
        assert np.all(w > 0)
        assert abs(w.sum() - g.nodes[i] ** 0.35 / 0.35) <= 1e-13


def test_unit_order_weights_are_steps():
    tab = build_tables(scalar_problem(1.0), TimeGrid.uniform(1.0, 8))
    assert np.allclose(tab.weights(8), 1 / 8, atol=1e-15)


def test_graded_tables_match_direct_evaluation():
    from fpdvi.mittag_leffler import MLParams, ml_matrix

    A = np.array([[-1.0, 0.5], [0.0, -2.0]])
    p = FPDVIProblem(0.7, 1.0, A, ConstantMap(np.zeros((2, 1))), ConstantMap([0.0, 0.0]), ConstantMap([0.0]),
                     ConstantNonlocal([1.0, 0.0]), Box([-1.0], [1.0]), Affine(np.eye(1)), Zero())
    g = TimeGrid.graded(1.0, 12, 2.0)
    tab = build_tables(p, g)
    x = g.nodes
    E = tab.midpoint_matrices(7)
    for j in range(7):
        d = x[7] - 0.5 * (x[j] + x[j + 1])
        assert np.allclose(E[j], ml_matrix(MLParams(0.7, 0.7), d**0.7, A), atol=1e-13)


# one application of the map


def test_gamma_first_term_only():
    A = np.array([[-1.0, 0.3], [0.0, -0.5]])
    p = FPDVIProblem(0.6, 1.0, A, ConstantMap(np.zeros((2, 1))), ConstantMap([0.0, 0.0]), ConstantMap([0.0]),
                     ConstantNonlocal([1.0, 2.0]), Box([-1.0], [1.0]), Affine(np.eye(1)), Zero())
    g = TimeGrid.uniform(1.0, 32)
    tab = build_tables(p, g)
    out = apply_gamma(p, tab, Trajectory(g, np.zeros((33, 2)), np.zeros((33, 1))))
    assert np.allclose(out.theta, tab.E1 @ np.array([1.0, 2.0]), atol=0, rtol=0)


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0])
def test_gamma_constant_forcing(alpha):
    p = scalar_problem(alpha, f=1.0, h=0.25)
    g = TimeGrid.graded(1.0, 24, 1.5)
    out = apply_gamma(p, build_tables(p, g), Trajectory(g, np.zeros((25, 1)), np.zeros((25, 1))))
    assert np.max(np.abs(out.theta[:, 0] - (0.25 + g.nodes**alpha / math.gamma(alpha + 1)))) <= 1e-8


def test_gamma_classical_semigroup():
    A = np.array([[-1.0, 2.0], [-0.5, -1.5]])
    p = FPDVIProblem(1.0, 2.0, A, ConstantMap(np.zeros((2, 1))), ConstantMap([0.0, 0.0]), ConstantMap([0.0]),
                     ConstantNonlocal([1.0, -1.0]), Box([-1.0], [1.0]), Affine(np.eye(1)), Zero())
    g = TimeGrid.uniform(2.0, 20)
    out = apply_gamma(p, build_tables(p, g), Trajectory(g, np.zeros((21, 2)), np.zeros((21, 1))))
    ref = np.stack([expm(x * A) @ [1.0, -1.0] for x in g.nodes])
    assert np.max(np.abs(out.theta - ref)) <= 1e-6


def test_gamma_rejects_foreign_trajectory():
    p = scalar_problem(0.5)
    tab = build_tables(p, TimeGrid.uniform(1.0, 8))
    g2 = TimeGrid.uniform(1.0, 16)
    with pytest.raises(GridMismatch):
        apply_gamma(p, tab, Trajectory(g2, np.zeros((17, 1)), np.zeros((17, 1))))
    g = TimeGrid.uniform(1.0, 8)
    with pytest.raises(DimensionMismatch):
        apply_gamma(p, tab, Trajectory(g, np.zeros((9, 2)), np.zeros((9, 1))))


# Picard solve


def test_scalar_decay_example():
    p = scalar_problem(0.5, A=-1.0)
    g = TimeGrid.uniform(1.0, 256)
    traj, rep = solve_fpdvi(p, g)
    assert rep.converged and rep.iterations == 1
    for i in (1, 17, 100, 256):
        assert abs(traj.theta[i, 0] - ml_reference(0.5, 1.0, -math.sqrt(g.nodes[i])).real) <= 1e-10


def test_linear_coupled_example():
    lp = load_problem(PROBLEMS / "linear_coupled.json")
    g = lp.config.grid(lp.problem.T)
    assert lp.problem.alpha == 0.6 and g.N == 512
    traj, rep = solve_fpdvi(lp.problem, g, tol=lp.config.tol)
    ref = np.array([ml_reference(0.6, 1.0, x**0.6).real for x in g.nodes])
    assert np.max(np.abs(traj.theta[:, 0] - ref) / ref) <= 1e-3
    assert np.allclose(traj.u[:, 0], traj.theta[:, 0], atol=1e-8)


def test_nonlocal_literal_instance_is_self_consistent():
    # h = theta(T)/2 on the linear coupled data; the only fixed point is the zero path
    tol = 1e-10
    p = scalar_problem(0.6, B=1.0, g=(0.0, -1.0), h=LinearPointsNonlocal([0.0], [(1.0, [[0.5]])]))
    traj, rep = solve_fpdvi(p, TimeGrid.uniform(1.0, 512), tol=tol, max_outer=500)
    assert abs(traj.theta[0, 0] - traj.theta[-1, 0] / 2) <= tol
    assert np.max(np.abs(traj.theta)) <= 1e-8


def test_nonlocal_benchmark_against_frozen_fine_grid():
    lp = load_problem(PROBLEMS / "nonlocal.json")
    ref = json.loads((FIXTURES / "nonlocal_ref_4096.json").read_text())
    traj, rep = solve_fpdvi(lp.problem, lp.config.grid(lp.problem.T), tol=lp.config.tol)
    assert abs(traj.theta[0, 0] - traj.theta[-1, 0] / 2) <= lp.config.tol
    assert np.allclose(traj.xi, ref["xi"], atol=1e-15)
    assert np.max(np.abs(traj.theta[:, 0] - np.array(ref["theta"]))) <= 1e-3


def test_mild_identity_and_control_feasibility():
    for name in ("linear_coupled", "nonlocal", "classical_5x5"):
        lp = load_problem(PROBLEMS / f"{name}.json")
        g = lp.config.grid(lp.problem.T)
        tol = lp.config.tol
        traj, rep = solve_fpdvi(lp.problem, g, tol=tol)
        tab = build_tables(lp.problem, g)
        again = apply_gamma(lp.problem, tab, traj)
        assert np.max(np.linalg.norm(again.theta - traj.theta, axis=1)) <= 2 * tol, name
        p = lp.problem
        w = p.g.evaluate(g.nodes, traj.theta)
        for i in range(0, g.N + 1, 37):
            u = traj.u[i]
            assert np.linalg.norm(u - p.K.project(u)) <= 1e-9
            assert natural_residual(VIProblem(p.K, w[i], p.G, p.phi), u) <= lp.config.vi_tol


def test_classical_limit_against_ode_integration():
    lp = load_problem(PROBLEMS / "classical_5x5.json")
    _, M, c, h = classical_reference(lp)
    g = lp.config.grid(lp.problem.T)
    traj, _ = solve_fpdvi(lp.problem, g, tol=lp.config.tol)
    sol = solve_ivp(lambda t, y: M @ y + c, (0, 2.0), h, t_eval=g.nodes, rtol=1e-12, atol=1e-14, method="DOP853")
    ref = sol.y.T
    assert np.max(np.linalg.norm(traj.theta - ref, axis=1)) <= 1e-4 * np.max(np.linalg.norm(ref, axis=1))


def test_determinism():
    lp = load_problem(PROBLEMS / "nonlocal_affine.json")
    g = TimeGrid.graded(lp.problem.T, 64, 2.0)
    a, _ = solve_fpdvi(lp.problem, g, tol=1e-10, max_outer=300)
    b, _ = solve_fpdvi(lp.problem, g, tol=1e-10, max_outer=300)
    assert a.theta.tobytes() == b.theta.tobytes() and a.u.tobytes() == b.u.tobytes()


def test_change_nonincreasing_on_certified_contraction():
    p = scalar_problem(0.5, A=-1.0, B=0.5, g=(0.0, -1.0))
    # |B| = 0.5, f = 0, selection is 1-Lipschitz in g and g is 1-Lipschitz in theta
    theta_A = float(estimate_theta_A(0.5, np.array([[-1.0]]), 1.0, 0.01))
    L, cert = select_weight_L(0.5, 1.0, theta_A, np.full(65, 0.5), np.zeros(65), 1.0)
    assert cert < 1
    _, rep = solve_fpdvi(p, TimeGrid.uniform(1.0, 256), tol=1e-12, damping=1.0)
    assert rep.converged and np.all(np.diff(rep.history) <= 0)


def test_max_outer_exceeded_keeps_best_iterate():
    lp = load_problem(PROBLEMS / "diverging.json")
    g = lp.config.grid(lp.problem.T)
    with pytest.raises(MaxOuterExceeded) as exc:
        solve_fpdvi(lp.problem, g, max_outer=lp.config.max_outer)
    rep = exc.value.report
    assert not rep.converged and rep.iterations == lp.config.max_outer
    # the attached path is the iterate with the smallest change, not the last one
    assert rep.history[-1] > min(rep.history)
    assert np.all(np.isfinite(exc.value.trajectory.theta))
    assert rep.damping_changes and rep.damping_changes[-1][1] == 1 / 16


def test_solver_validation():
    p = scalar_problem(0.5)
    g = TimeGrid.uniform(1.0, 8)
    for kw in (dict(tol=1e-13), dict(damping=0.0), dict(damping=1.5), dict(max_outer=0)):
        with pytest.raises(ValueError):
            solve_fpdvi(p, g, **kw)
    with pytest.raises(GridMismatch):
        solve_fpdvi(p, TimeGrid.uniform(2.0, 8))
    with pytest.raises(InvalidOrder):
        scalar_problem(1.2)
    with pytest.raises(DimensionMismatch):
        FPDVIProblem(0.5, 1.0, np.eye(2), ConstantMap([[0.0]]), ConstantMap([0.0]), ConstantMap([0.0]),
                     ConstantNonlocal([0.0]), Box([0.0], [1.0]), Affine(np.eye(1)), Zero())


# order studies


def test_order_skipped_without_quadrature_error():
    p = scalar_problem(0.5, A=-1.0)
    study = refine_and_estimate_order(
        p, 16, 3, reference=lambda t: np.array([[ml_reference(0.5, 1.0, -math.sqrt(x)).real] for x in t])
    )
    assert study.order is None and max(study.errors) <= 1e-12


def test_order_linear_coupled():
    p = scalar_problem(0.6, B=1.0, g=(0.0, -1.0))
    study = refine_and_estimate_order(
        p, 64, 4, reference=lambda t: np.array([[ml_reference(0.6, 1.0, x**0.6).real] for x in t])
    )
    assert study.order >= 0.9
    assert np.all(np.diff(study.errors) < 0)


def test_order_classical_benchmark():
    lp = load_problem(PROBLEMS / "classical_5x5.json")
    ref, *_ = classical_reference(lp)
    study = refine_and_estimate_order(lp.problem, 64, 4, reference=ref)
    assert study.order >= 0.9


def test_order_needs_three_levels():
    with pytest.raises(ValueError):
        refine_and_estimate_order(scalar_problem(0.5), 8, 2)
