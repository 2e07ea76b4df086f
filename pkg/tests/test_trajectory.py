"""Placement stage: surrogates, convex subproblem, and the outer SCA loop."""

import numpy as np
import pytest

from uavmec.compute import induced_speed_term, propulsion_power
from uavmec.config import desk_profile
from uavmec.trajectory import (
    KKT_TOL, FEAS_TOL, SuavAssignment, TrajectoryProblem, _Subproblem,
    build_problem, run_stage2, solve_convex_subproblem, surrogate_f,
    surrogate_g, surrogate_h, true_f, true_g, true_h, true_objective,
)

PROP = dict(prop_c1=79.86, prop_c2=21.99, prop_c3=263.85, prop_c4=0.00924,
            tip_speed=120.0)


def small_problem(rng, n_suavs=2, max_uds=3, queue_scale=60.0):
    positions = rng.uniform(100.0, 400.0, (n_suavs, 2))
    while True:
        dists = [np.linalg.norm(positions[i] - positions[j])
                 for i in range(n_suavs) for j in range(i + 1, n_suavs)]
        if not dists or min(dists) >= 12.0:
            break
        positions = rng.uniform(100.0, 400.0, (n_suavs, 2))
    assignments = []
    for _ in range(n_suavs):
        k = int(rng.integers(0, max_uds + 1))
        assignments.append(SuavAssignment(
            ud_positions=rng.uniform(0.0, 500.0, (k, 2)),
            weights=rng.uniform(20.0, 400.0, k),
            phi=rng.uniform(1e4, 1e6, k)))
    return TrajectoryProblem(
        current_positions=positions, assignments=assignments,
        queue_p=rng.uniform(0.0, queue_scale, n_suavs), altitude=100.0,
        dt=1.0, v_max=25.0, d_min=10.0, **PROP)


# --- surrogate properties ---

def test_surrogate_f_tangent_and_below():
    rng = np.random.default_rng(11)
    for _ in range(200):
        cur = rng.uniform(0.0, 500.0, 2)
        exp_q = cur + rng.uniform(-25.0, 25.0, 2)
        v_exp = float(np.linalg.norm(exp_q - cur))
        xi_exp = induced_speed_term(v_exp, PROP["prop_c3"])
        at_exp = surrogate_f(xi_exp, exp_q, exp_q, cur, xi_exp, 1.0)
        assert at_exp == pytest.approx(true_f(xi_exp, exp_q, cur, 1.0),
                                       abs=1e-12)
        xi = xi_exp * rng.uniform(0.5, 2.0)
        q = cur + rng.uniform(-25.0, 25.0, 2)
        assert surrogate_f(xi, q, exp_q, cur, xi_exp, 1.0) \
            <= true_f(xi, q, cur, 1.0) + 1e-9


def test_surrogate_g_tangent_and_below():
    rng = np.random.default_rng(12)
    for _ in range(200):
        ud = rng.uniform(0.0, 500.0, 2)
        exp_q = rng.uniform(0.0, 500.0, 2)
        phi = rng.uniform(1e4, 1e6)
        at_exp = surrogate_g(exp_q, exp_q, ud, phi, 100.0)
        assert at_exp == pytest.approx(true_g(exp_q, ud, phi, 100.0),
                                       abs=1e-12)
        q = exp_q + rng.uniform(-40.0, 40.0, 2)
        assert surrogate_g(q, exp_q, ud, phi, 100.0) \
            <= true_g(q, ud, phi, 100.0) + 1e-9


def test_surrogate_h_tangent_and_below():
    rng = np.random.default_rng(13)
    for _ in range(200):
        ei = rng.uniform(0.0, 500.0, 2)
        ej = rng.uniform(0.0, 500.0, 2)
        at_exp = surrogate_h(ei, ej, ei, ej)
        assert at_exp == pytest.approx(true_h(ei, ej), rel=1e-12)
        qi = ei + rng.uniform(-30.0, 30.0, 2)
        qj = ej + rng.uniform(-30.0, 30.0, 2)
        assert surrogate_h(qi, qj, ei, ej) <= true_h(qi, qj) + 1e-9


def test_true_objective_manual_recompute():
    rng = np.random.default_rng(14)
    prob = small_problem(rng)
    pos = prob.current_positions + rng.uniform(-10.0, 10.0, (2, 2))
    expected = 0.0
    for n, asg in enumerate(prob.assignments):
        for j in range(len(asg.weights)):
            d2 = np.sum((pos[n] - asg.ud_positions[j]) ** 2)
            rate = np.log2(1.0 + asg.phi[j] / (100.0 ** 2 + d2))
            expected += asg.weights[j] / rate
        v = np.linalg.norm(pos[n] - prob.current_positions[n]) / prob.dt
        expected += prob.queue_p[n] * prob.dt * propulsion_power(
            v, PROP["prop_c1"], PROP["prop_c2"], PROP["prop_c3"],
            PROP["prop_c4"], PROP["tip_speed"])
    assert true_objective(prob, pos) == pytest.approx(expected, rel=1e-12)


# --- analytic derivatives ---

def finite_diff(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return g


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(15)
    prob = small_problem(rng)
    sub = _Subproblem(prob, prob.current_positions.copy())
    x = sub.initial_point()
    x += rng.uniform(0.01, 0.1, x.size)
    num = finite_diff(sub.objective, x)
    ana = sub.gradient(x)
    scale = np.abs(ana).max()
    assert np.abs(ana - num).max() <= 1e-4 * max(1.0, scale)


def test_objective_hessian_matches_finite_differences():
    rng = np.random.default_rng(16)
    prob = small_problem(rng)
    sub = _Subproblem(prob, prob.current_positions.copy())
    x = sub.initial_point() + rng.uniform(0.05, 0.2,
                                          sub.initial_point().size)
    hess = sub.objective_hessian(x)
    h = 1e-5
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        col = (sub.gradient(xp) - sub.gradient(xm)) / (2.0 * h)
        denom = max(1.0, np.abs(hess[:, i]).max())
        assert np.abs(hess[:, i] - col).max() <= 1e-3 * denom


def test_constraint_jacobian_matches_finite_differences():
    rng = np.random.default_rng(17)
    prob = small_problem(rng)
    sub = _Subproblem(prob, prob.current_positions.copy())
    x = sub.initial_point() + rng.uniform(0.05, 0.2,
                                          sub.initial_point().size)
    jac = sub.constraints_jac(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += 1e-6
        xm[i] -= 1e-6
        col = (sub.constraints(xp) - sub.constraints(xm)) / 2e-6
        denom = max(1.0, np.abs(jac[:, i]).max())
        assert np.abs(jac[:, i] - col).max() <= 1e-4 * denom


# --- convex subproblem ---

def test_subproblem_meets_optimality_contract():
    rng = np.random.default_rng(18)
    for _ in range(8):
        prob = small_problem(rng)
        sol = solve_convex_subproblem(prob, prob.current_positions.copy())
        assert sol.kkt_residual <= KKT_TOL
        sub = _Subproblem(prob, prob.current_positions.copy())
        x = np.concatenate([sol.positions.ravel(), sol.xi,
                            np.concatenate(sol.zeta) if sol.zeta
                            and sum(len(z) for z in sol.zeta)
                            else np.empty(0)])
        assert float(np.min(sub.constraints(x))) >= -FEAS_TOL


def test_subproblem_respects_speed_ball():
    rng = np.random.default_rng(19)
    prob = small_problem(rng)
    sol = solve_convex_subproblem(prob, prob.current_positions.copy())
    moved = np.linalg.norm(sol.positions - prob.current_positions, axis=1)
    assert np.all(moved <= prob.v_max * prob.dt + 1e-9)


def test_subproblem_improves_on_staying_put():
    # With queued weights pulling toward the UDs, moving must not cost more
    # than hovering in place (the expansion point is always feasible).
    rng = np.random.default_rng(20)
    for _ in range(5):
        prob = small_problem(rng, queue_scale=10.0)
        stay = true_objective(prob, prob.current_positions)
        sol = solve_convex_subproblem(prob, prob.current_positions.copy())
        assert true_objective(prob, sol.positions) <= stay + 1e-6


# --- outer SCA loop ---

def test_stage2_true_objective_monotone():
    rng = np.random.default_rng(21)
    for _ in range(5):
        prob = small_problem(rng)
        res = run_stage2(prob)
        assert res.converged
        vals = np.asarray(res.true_values)
        assert np.all(np.diff(vals) <= 1e-6 * np.maximum(1.0, np.abs(vals[:-1])))


def test_stage2_positions_within_speed_ball():
    rng = np.random.default_rng(22)
    prob = small_problem(rng)
    res = run_stage2(prob)
    moved = np.linalg.norm(res.positions - prob.current_positions, axis=1)
    assert np.all(moved <= prob.v_max * prob.dt + 1e-9)


def test_stage2_keeps_separation_under_squeeze():
    # Two SUAVs whose assigned UDs sit at the same hotspot: the optimum
    # without the pairwise constraint would collapse them together.
    hotspot = np.array([250.0, 250.0])
    assignments = [
        SuavAssignment(ud_positions=np.array([hotspot]),
                       weights=np.array([500.0]), phi=np.array([5e5])),
        SuavAssignment(ud_positions=np.array([hotspot]),
                       weights=np.array([500.0]), phi=np.array([5e5])),
    ]
    prob = TrajectoryProblem(
        current_positions=np.array([[238.0, 250.0], [262.0, 250.0]]),
        assignments=assignments, queue_p=np.array([1.0, 1.0]),
        altitude=100.0, dt=1.0, v_max=25.0, d_min=10.0, **PROP)
    res = run_stage2(prob)
    gap = np.linalg.norm(res.positions[0] - res.positions[1])
    assert gap >= prob.d_min - 1e-6
    # Both should still have crowded toward the hotspot.
    for q in res.positions:
        assert np.linalg.norm(q - hotspot) < 24.0


def test_zero_speed_limit_freezes_positions():
    rng = np.random.default_rng(23)
    prob = small_problem(rng)
    prob.v_max = 0.0
    res = run_stage2(prob)
    assert np.allclose(res.positions, prob.current_positions, atol=1e-9)


def test_pure_propulsion_problem_stays_put():
    # No assigned UDs anywhere: moving only adds propulsion energy, so the
    # optimizer should stay (hover power is the unique minimum at v=0 over
    # small displacements... actually the power curve dips at mid speeds,
    # but the queue weight makes any move cost queue_p * dt * P(v) vs
    # hovering; the true objective is minimized at the propulsion-optimal
    # speed, so just check the contract holds and nothing blows up).
    prob = TrajectoryProblem(
        current_positions=np.array([[100.0, 100.0], [400.0, 400.0]]),
        assignments=[SuavAssignment(np.empty((0, 2)), np.empty(0),
                                    np.empty(0))] * 2,
        queue_p=np.array([5.0, 5.0]), altitude=100.0, dt=1.0,
        v_max=25.0, d_min=10.0, **PROP)
    res = run_stage2(prob)
    assert res.converged
    stay = true_objective(prob, prob.current_positions)
    assert res.true_values[-1] <= stay + 1e-9


# --- build_problem mapping ---

def test_build_problem_weight_mapping():
    cfg = desk_profile()
    rng = np.random.default_rng(24)
    m, n = 6, cfg.num_suavs
    profile = np.array([0, 0, 1, -1, 1, 0])
    shares = np.full((n, m), 1.0 / m)
    data_bits = rng.uniform(1e5, 1e6, m)
    data_bits[4] = 0.0  # zero-size task must be dropped
    phi = rng.uniform(1e4, 1e6, (n, m))
    ud_pos = rng.uniform(0.0, cfg.area_width, (m, 2))
    suav_pos = rng.uniform(0.0, cfg.area_width, (n, 2))
    queue_p = rng.uniform(0.0, 50.0, n)
    v = 500.0
    prob = build_problem(profile, shares, data_bits, phi, ud_pos, suav_pos,
                         queue_p, cfg, v)
    assert prob.n_suavs == n
    # SUAV 0 serves UDs 0, 1, 5; SUAV 1 serves only UD 2 (4 has no data).
    assert len(prob.assignments[0].weights) == 3
    assert len(prob.assignments[1].weights) == 1
    expected = (v * (cfg.gamma_time * data_bits[2]
                     + cfg.gamma_energy * cfg.ud_tx_power * data_bits[2])
                / (shares[1, 2] * cfg.suav_bandwidth))
    assert prob.assignments[1].weights[0] == pytest.approx(expected,
                                                           rel=1e-12)
    assert prob.assignments[1].phi[0] == pytest.approx(phi[1, 2])
    assert np.array_equal(prob.assignments[0].ud_positions,
                          ud_pos[[0, 1, 5]])
    assert prob.dt == cfg.slot_duration
    assert prob.d_min == cfg.min_separation
    assert np.array_equal(prob.queue_p, queue_p)


def test_expansion_point_feasible_but_not_stationary():
    # A single SUAV with a heavy UD far away: the expansion point must be
    # feasible to start from but fails the stationarity audit, since the
    # rate term pulls the position toward the UD.
    prob = TrajectoryProblem(
        current_positions=np.array([[100.0, 100.0]]),
        assignments=[SuavAssignment(ud_positions=np.array([[400.0, 400.0]]),
                                    weights=np.array([300.0]),
                                    phi=np.array([2e5]))],
        queue_p=np.array([2.0]), altitude=100.0, dt=1.0,
        v_max=25.0, d_min=10.0, **PROP)
    sub = _Subproblem(prob, prob.current_positions.copy())
    x = sub.initial_point()
    assert float(np.min(sub.constraints(x))) >= -1e-12
    assert sub.kkt_residual(x) > KKT_TOL
