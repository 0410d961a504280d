"""Saddle-point oracle for the smoothed value function.

phi_{rho,sigma}(x) and its gradient are defined through the unique saddle
(y*, z*) of psi(x, ., .) over Y x Y. The oracle finds it by iterating the
projected fixed-point map

    u  <-  Proj_{Y x Y}(u - beta * T(x, u)),      u = (y, z) stacked,

and reports the step-scaled fixed-point residual

    r(u) = ||u - Proj(u - beta*T(x,u))|| / beta,

which reduces to ||T(x, u)|| away from active constraints and is therefore
essentially step-size invariant there.

Step size. The certified contraction step (see lemma_step_bound) scales like
sigma/(rho*lip_f)^2, which underflows any usable range once rho is large;
worst-case Lipschitz constants over the whole domain are far larger than the
curvature the iteration actually sees. The default here instead estimates
the local Lipschitz constant of T(x, .) by power iteration on finite
differences (first-order access only, deterministic start) and takes
beta = 1/(2*L_est), with a stall safeguard that halves beta if the residual
stops improving. Callers can pass an explicit beta to pin the behavior,
e.g. a lemma_step_bound value when exercising the certified contraction.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolation,
    ParameterOverflowError,
    SaddleConvergenceError,
)
from .smoothing import direction_x, eval_psi, operator_T

_POWER_SEED = 0x51B8A


@dataclass(frozen=True)
class SaddlePoint:
    """Oracle output: the saddle estimate and how it was reached."""

    y_star: np.ndarray
    z_star: np.ndarray
    residual: float
    iterations: int
    beta: float
    converged: bool

    @property
    def u(self):
        return np.concatenate((self.y_star, self.z_star))


def lemma_step_bound(problem, pr):
    """Largest certified contraction step: min(sigma, mu) / (lip_F + rho*lip_f + 2*sigma)^2.

    Any fixed step strictly below this bound contracts ||u - u*||^2 by the
    factor (1 - min(sigma, mu)*beta) per projected iteration. Undefined for
    problems with mu = 0 (assumption violation recorded on the problem).
    """
    if problem.mu <= 0:
        raise ContractViolation(
            "certified step bound needs mu > 0; this problem records mu=0 (%s)"
            % (problem.assumption_note,)
        )
    sig_bar = min(pr.sigma, problem.mu)
    lip = problem.lip_F + pr.rho * problem.lip_f + 2.0 * pr.sigma
    # lip * lip, not lip**2: pow raises OverflowError instead of giving inf
    bound = sig_bar / (lip * lip)
    if not (bound > 0 and np.isfinite(bound)):
        raise ParameterOverflowError("certified step bound underflowed (rho too large)")
    return bound


def default_start(problem):
    """Default oracle start: projection of the zero vector onto Y, duplicated."""
    y0 = problem.set_Y.project(np.zeros(problem.n_y))
    return np.concatenate((y0, y0))


def estimate_T_lipschitz(problem, pr, x, u0, iters=30, rel_eps=1e-6):
    """Power-iteration estimate of the local Lipschitz constant of T(x, .).

    The differences are exact for operators affine in u (every benchmark
    here), so the estimate lands between the extreme singular values of the
    Jacobian; solve_saddle's stall safeguard covers any underestimate.
    Fixed-seed start vector, so repeated calls are bit-identical.
    """
    rng = np.random.Generator(np.random.Philox(_POWER_SEED))
    v = rng.standard_normal(u0.size)
    v /= max(float(np.linalg.norm(v)), 1e-300)
    eps = rel_eps * (1.0 + float(np.linalg.norm(u0)))
    t0 = operator_T(problem, pr, x, u0)
    est = 0.0
    for _ in range(iters):
        w = (operator_T(problem, pr, x, u0 + eps * v) - t0) / eps
        nw = float(np.linalg.norm(w))
        if not np.isfinite(nw) or nw == 0.0:
            break
        est = nw
        v = w / nw
    return max(est, pr.sigma, 1e-12)


def solve_saddle(problem, pr, x, tol=1e-10, max_iter=10**6, u0=None, beta=None):
    """Find the saddle of psi(x, ., .) over Y x Y by projected fixed-point steps.

    Parameters
    ----------
    tol : float
        Stop once the step-scaled fixed-point residual is <= tol.
    u0 : array, optional
        Warm start, stacked (y, z). Defaults to the projected zero vector.
    beta : float, optional
        Explicit step size. Default: 1/(2 * estimated local Lipschitz of T).

    Raises
    ------
    SaddleConvergenceError
        If max_iter is exhausted; carries the last residual and iterate.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (problem.n_x,):
        raise ContractViolation("x has wrong shape")
    if u0 is None:
        u = default_start(problem)
    else:
        u = np.atleast_1d(np.asarray(u0, dtype=float)).copy()
        if u.shape != (2 * problem.n_y,):
            raise ContractViolation("u0 must stack (y, z)")
    if beta is None:
        beta = 1.0 / (2.0 * estimate_T_lipschitz(problem, pr, x, u))
    beta = float(beta)
    if not (beta > 0 and np.isfinite(beta)):
        raise ParameterOverflowError("oracle step size underflowed: beta=%r" % beta)

    set_Y = problem.set_Y
    n_y = problem.n_y

    def proj_pair(w):
        return np.concatenate((set_Y.project(w[:n_y]), set_Y.project(w[n_y:])))

    best = np.inf
    since_best = 0
    halvings = 0
    res = np.inf
    for it in range(1, max_iter + 1):
        t = operator_T(problem, pr, x, u)
        u_next = proj_pair(u - beta * t)
        res = float(np.linalg.norm(u - u_next)) / beta
        if not np.isfinite(res):
            # the step overshot badly; back off and retry from the same point
            halvings += 1
            if halvings > 60:
                raise SaddleConvergenceError(
                    "oracle diverged even after step backoff",
                    residual=res,
                    saddle=_pack(u, res, it, beta, False, n_y),
                )
            beta *= 0.5
            best, since_best = np.inf, 0
            continue
        if res <= tol:
            return _pack(u_next, res, it, beta, True, n_y)
        u = u_next
        # stall safeguard: no residual improvement over a long window means
        # the fixed step is too aggressive for this instance
        if res < 0.9999 * best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best >= 200:
                halvings += 1
                if halvings > 60:
                    break
                beta *= 0.5
                best, since_best = np.inf, 0
    raise SaddleConvergenceError(
        "saddle oracle hit max_iter=%d with residual %.3e (tol %.3e)"
        % (max_iter, res, tol),
        residual=res,
        saddle=_pack(u, res, max_iter, beta, False, n_y),
    )


def _pack(u, res, it, beta, ok, n_y):
    return SaddlePoint(
        y_star=u[:n_y].copy(),
        z_star=u[n_y:].copy(),
        residual=res,
        iterations=it,
        beta=beta,
        converged=ok,
    )


def eval_phi(problem, pr, x, tol=1e-10, max_iter=10**6, u0=None, beta=None):
    """Smoothed value phi_{rho,sigma}(x) = psi(x, y*, z*) at the oracle saddle."""
    sp = solve_saddle(problem, pr, x, tol=tol, max_iter=max_iter, u0=u0, beta=beta)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return eval_psi(problem, pr, x, sp.y_star, sp.z_star)


def grad_phi(problem, pr, x, tol=1e-10, max_iter=10**6, u0=None, beta=None):
    """Gradient of phi_{rho,sigma} at x: direction_x at the oracle saddle.

    Valid because the saddle is unique, so the value function inherits the
    partial x-gradient of psi at (y*, z*).
    """
    sp = solve_saddle(problem, pr, x, tol=tol, max_iter=max_iter, u0=u0, beta=beta)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return direction_x(problem, pr, x, sp.y_star, sp.z_star)
