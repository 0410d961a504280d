import numpy as np
import pytest

from sipba.benchmarks import analytic_saddle, quadratic_testbed, synthetic_problem
from sipba.errors import (
    ContractViolation,
    ParameterOverflowError,
    SaddleConvergenceError,
)
from sipba.saddle import (
    default_start,
    estimate_T_lipschitz,
    eval_phi,
    grad_phi,
    lemma_step_bound,
    solve_saddle,
)
from sipba.smoothing import PenaltyReg, operator_T

quad = quadratic_testbed()


def test_lemma_step_bound_value():
    # mu=2, lip_F=2, lip_f=2: min(1,2) / (2 + 1*2 + 2*1)^2 = 1/36
    assert lemma_step_bound(quad, PenaltyReg(1.0, 1.0)) == pytest.approx(1.0 / 36.0)


def test_lemma_step_bound_refuses_mu_zero():
    from dataclasses import replace

    weak = replace(quad, mu=0.0, assumption_note="concavity assumption dropped")
    with pytest.raises(ContractViolation):
        lemma_step_bound(weak, PenaltyReg(1.0, 1.0))


def test_lemma_step_bound_overflow():
    with pytest.raises(ParameterOverflowError):
        lemma_step_bound(quad, PenaltyReg(1e300, 1.0))


def test_default_start_projects_zero():
    prob = synthetic_problem(4).problem
    u0 = default_start(prob)
    lo = 1.0 / (2.0 * np.sqrt(4))
    np.testing.assert_allclose(u0, np.full(8, lo))


def test_lipschitz_estimate_brackets_jacobian():
    # T is affine on the testbed with Jacobian [[2(1+rho), sigma], [-sigma, 2rho+sigma]]
    rng = np.random.default_rng(4)
    for _ in range(10):
        rho, sigma = rng.uniform(0.3, 4.0), rng.uniform(0.1, 1.5)
        A = np.array([[2 * (1 + rho), sigma], [-sigma, 2 * rho + sigma]])
        smin, smax = np.linalg.svd(A, compute_uv=False)[[1, 0]]
        est = estimate_T_lipschitz(quad, PenaltyReg(rho, sigma), np.array([1.0]), np.zeros(2))
        assert smin * (1 - 1e-8) <= est <= smax * (1 + 1e-8)


def test_lipschitz_estimate_deterministic():
    pr = PenaltyReg(2.0, 0.5)
    a = estimate_T_lipschitz(quad, pr, np.array([0.7]), np.zeros(2))
    b = estimate_T_lipschitz(quad, pr, np.array([0.7]), np.zeros(2))
    assert a == b


def test_solve_saddle_example():
    # x=1, rho=sigma=1: saddle at y*=10/13, z*=12/13
    sd = solve_saddle(quad, PenaltyReg(1.0, 1.0), [1.0], tol=1e-12)
    assert sd.converged
    assert sd.residual <= 1e-12
    np.testing.assert_allclose(sd.y_star, [10.0 / 13.0], atol=1e-9)
    np.testing.assert_allclose(sd.z_star, [12.0 / 13.0], atol=1e-9)
    np.testing.assert_array_equal(sd.u, np.concatenate((sd.y_star, sd.z_star)))


def test_solve_saddle_matches_analytic_solution():
    rng = np.random.default_rng(12)
    for _ in range(20):
        x = rng.normal(scale=2.0)
        rho, sigma = rng.uniform(0.1, 8.0), rng.uniform(0.05, 2.0)
        sd = solve_saddle(quad, PenaltyReg(rho, sigma), [x], tol=1e-11)
        ys, zs = analytic_saddle(x, rho, sigma)
        np.testing.assert_allclose(sd.y_star, ys, atol=1e-8)
        np.testing.assert_allclose(sd.z_star, zs, atol=1e-8)


def test_phi_and_grad_examples():
    pr = PenaltyReg(1.0, 1.0)
    assert eval_phi(quad, pr, [1.0], tol=1e-12) == pytest.approx(-5.0 / 13.0, abs=1e-9)
    np.testing.assert_allclose(grad_phi(quad, pr, [1.0], tol=1e-12), [-10.0 / 13.0], atol=1e-9)


def test_residual_monotone_under_certified_step():
    # with beta below the lemma bound the fixed-point residual never increases
    rng = np.random.default_rng(11)
    for _ in range(10):
        pr = PenaltyReg(rng.uniform(0.3, 4.0), rng.uniform(0.1, 1.5))
        beta = 0.9 * lemma_step_bound(quad, pr)
        x = rng.normal(size=1)
        u = rng.normal(scale=3.0, size=2)
        prev = np.inf
        for _ in range(300):
            u_next = u - beta * operator_T(quad, pr, x, u)
            res = np.linalg.norm(u - u_next) / beta
            assert res <= prev * (1 + 1e-12) + 1e-12
            prev = res
            u = u_next


def test_warm_start_reconverges_immediately():
    pr = PenaltyReg(3.0, 0.5)
    sd1 = solve_saddle(quad, pr, [2.0], tol=1e-11)
    sd2 = solve_saddle(quad, pr, [2.0], tol=1e-11, u0=sd1.u)
    assert sd2.iterations <= 3
    assert sd2.converged


def test_solve_saddle_respects_constraints():
    prob = synthetic_problem(3).problem
    sd = solve_saddle(prob, PenaltyReg(5.0, 0.2), np.full(3, 2.0), tol=1e-9)
    assert prob.set_Y.contains(sd.y_star)
    assert prob.set_Y.contains(sd.z_star)


def test_solve_saddle_max_iter_exhaustion():
    with pytest.raises(SaddleConvergenceError) as ei:
        solve_saddle(quad, PenaltyReg(1.0, 1.0), [1.0], tol=1e-14, max_iter=3)
    err = ei.value
    assert err.saddle.iterations == 3
    assert not err.saddle.converged
    assert np.isfinite(err.residual)


def test_solve_saddle_argument_validation():
    pr = PenaltyReg(1.0, 1.0)
    with pytest.raises(ParameterOverflowError):
        solve_saddle(quad, pr, [1.0], beta=0.0)
    with pytest.raises(ContractViolation):
        solve_saddle(quad, pr, [1.0, 2.0])
    with pytest.raises(ContractViolation):
        solve_saddle(quad, pr, [1.0], u0=[1.0, 2.0, 3.0])


def test_solver_deterministic():
    pr = PenaltyReg(2.0, 0.3)
    a = solve_saddle(quad, pr, [1.3], tol=1e-10)
    b = solve_saddle(quad, pr, [1.3], tol=1e-10)
    np.testing.assert_array_equal(a.u, b.u)
    assert a.iterations == b.iterations


def test_minimax_interchange():
    # min_z max_y psi equals max_y min_z psi on the testbed (unique saddle);
    # psi is an exact quadratic in each block, so three-point fits recover
    # the inner optimum exactly
    from sipba.smoothing import eval_psi

    def inner_max_y(pr, x, z):
        ys = np.array([-1.0, 0.0, 1.0])
        c = np.polyfit(ys, [eval_psi(quad, pr, x, [y], z) for y in ys], 2)
        yopt = -c[1] / (2 * c[0])
        return float(np.polyval(c, yopt))

    def inner_min_z(pr, x, y):
        zs = np.array([-1.0, 0.0, 1.0])
        c = np.polyfit(zs, [eval_psi(quad, pr, x, y, [z]) for z in zs], 2)
        zopt = -c[1] / (2 * c[0])
        return float(np.polyval(c, zopt))

    rng = np.random.default_rng(9)
    for _ in range(10):
        pr = PenaltyReg(rng.uniform(0.5, 4.0), rng.uniform(0.2, 1.5))
        x = np.array([rng.normal()])
        zs = np.array([-1.0, 0.0, 1.0])
        cz = np.polyfit(zs, [inner_max_y(pr, x, [z]) for z in zs], 2)
        min_max = float(np.polyval(cz, -cz[1] / (2 * cz[0])))
        ys = np.array([-1.0, 0.0, 1.0])
        cy = np.polyfit(ys, [inner_min_z(pr, x, [y]) for y in ys], 2)
        max_min = float(np.polyval(cy, -cy[1] / (2 * cy[0])))
        assert min_max == pytest.approx(max_min, abs=1e-8)
        assert eval_phi(quad, pr, x, tol=1e-11) == pytest.approx(min_max, abs=1e-8)
