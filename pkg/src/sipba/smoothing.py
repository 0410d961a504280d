"""Penalty-regularized smoothing of the pessimistic value function.

For penalty weight rho > 0 and regularization weight sigma > 0 define

    psi(x, y, z) = F(x,y) - rho*(f(x,y) - f(x,z)) + (sigma/2)*||z||^2 - sigma*<y, z>.

The smoothed value function is phi_{rho,sigma}(x) = min_z max_y psi(x, y, z)
over Y x Y. psi is strongly concave in y (modulus mu, inherited from F when
the standing assumptions hold) and strongly convex in z (modulus sigma), so
the saddle point is unique and the min and max interchange.

The partial gradients of psi are exposed as first-class direction
operations so the single-loop solver, the saddle oracle, and the tests all
share one implementation:

    direction_y = grad_y psi     (ascent direction for y)
    direction_z = grad_z psi     (descent direction for z)
    direction_x(x, y', z')  = grad_x F(x,y') - rho*(grad_x f(x,y') - grad_x f(x,z'))

direction_x evaluated at the exact saddle (y*, z*) is the gradient of
phi_{rho,sigma} at x.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class PenaltyReg:
    """Penalty/regularization weight pair (rho, sigma), both positive."""

    rho: float
    sigma: float

    def __post_init__(self):
        if not (self.rho > 0 and np.isfinite(self.rho)):
            raise ContractViolation("rho must be positive and finite")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ContractViolation("sigma must be positive and finite")


def _check_xy(problem, x, y, z=None):
    if np.shape(x) != (problem.n_x,):
        raise ContractViolation("x has wrong shape")
    if np.shape(y) != (problem.n_y,):
        raise ContractViolation("y has wrong shape")
    if z is not None and np.shape(z) != (problem.n_y,):
        raise ContractViolation("z has wrong shape")


def eval_psi(problem, pr, x, y, z):
    """Value of the regularized objective psi at (x, y, z)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    _check_xy(problem, x, y, z)
    val = (
        problem.F(x, y)
        - pr.rho * (problem.f(x, y) - problem.f(x, z))
        + 0.5 * pr.sigma * float(np.dot(z, z))
        - pr.sigma * float(np.dot(y, z))
    )
    return float(val)


def direction_y(problem, pr, x, y, z):
    # grad_y psi = grad_y F - rho*grad_y f - sigma*z
    return problem.grad_F_y(x, y) - pr.rho * problem.grad_f_y(x, y) - pr.sigma * z


def direction_z(problem, pr, x, y, z):
    # grad_z psi = rho*grad_y f(x, z) + sigma*(z - y)
    return pr.rho * problem.grad_f_y(x, z) + pr.sigma * (z - y)


def direction_x(problem, pr, x, y_next, z_next):
    # gradient of psi in x at frozen (y', z'); equals grad phi_{rho,sigma}
    # when (y', z') is the exact saddle
    return problem.grad_F_x(x, y_next) - pr.rho * (
        problem.grad_f_x(x, y_next) - problem.grad_f_x(x, z_next)
    )


def split_u(problem, u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (2 * problem.n_y,):
        raise ContractViolation(
            "u must stack (y, z) into shape (%d,)" % (2 * problem.n_y)
        )
    return u[: problem.n_y], u[problem.n_y :]


def operator_T(problem, pr, x, u):
    """Saddle operator T(x, u) = (-grad_y psi, grad_z psi) on stacked u=(y,z).

    T is strongly monotone in u with modulus min over blocks
    (mu on the y block, sigma on the z block) and Lipschitz with constant
    at most max(lip_F + rho*lip_f + sigma, rho*lip_f + 2*sigma).
    Its unique zero (with projections, its fixed point) is the saddle of psi.
    """
    y, z = split_u(problem, u)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_xy(problem, x, y, z)
    return np.concatenate(
        (-direction_y(problem, pr, x, y, z), direction_z(problem, pr, x, y, z))
    )
