"""Convergence diagnostics measured against the saddle oracle.

These quantities instrument a run without influencing it: distance of the
inner pair to the exact saddle (tracking error), the projected-gradient
stationarity residual of the smoothed value function, a relative error to a
known optimum, a merit value combining value gap and tracking error, and the
two-sided sandwich between the smoothed and the exact value function.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ContractViolation
from .saddle import eval_phi, grad_phi, solve_saddle
from .smoothing import PenaltyReg


def relative_error(x, y, x_star, y_star, x0, y0):
    """(||x-x*||^2 + ||y-y*||^2) / (||x0-x*||^2 + ||y0-y*||^2).

    Translation-invariant. Raises if the initialization coincides with the
    optimum (zero denominator).
    """
    x, y = np.atleast_1d(x), np.atleast_1d(y)
    x0, y0 = np.atleast_1d(x0), np.atleast_1d(y0)
    xs, ys = np.atleast_1d(x_star), np.atleast_1d(y_star)
    den = float(np.dot(x0 - xs, x0 - xs) + np.dot(y0 - ys, y0 - ys))
    if den == 0.0:
        raise ContractViolation(
            "relative error undefined: initialization equals the optimum"
        )
    num = float(np.dot(x - xs, x - xs) + np.dot(y - ys, y - ys))
    return num / den


def tracking_error(problem, pr, x, y, z, oracle_tol=1e-8, **oracle_kw):
    """Distance ||(y, z) - (y*, z*)|| to the oracle saddle at (x, rho, sigma)."""
    sd = solve_saddle(problem, pr, x, tol=oracle_tol, **oracle_kw)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return float(np.linalg.norm(np.concatenate((y, z)) - sd.u))


def stationarity_residual(problem, pr, x, alpha, oracle_tol=1e-8, **oracle_kw):
    """||x - Proj_X(x - alpha*grad phi_{rho,sigma}(x))|| / alpha."""
    if not (alpha > 0 and np.isfinite(alpha)):
        raise ContractViolation("alpha must be positive and finite")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = grad_phi(problem, pr, x, tol=oracle_tol, **oracle_kw)
    moved = problem.set_X.project(x - alpha * g)
    return float(np.linalg.norm(x - moved)) / alpha


def merit_value(k, s, t, phi_gap, tracking_err):
    """V_k = k^(-s) * phi_gap + k^(-t) * tracking_err^2.

    phi_gap is phi_k(x^k) minus an empirical lower bound on phi, so V_k is
    nonnegative whenever the bound really is a lower bound.
    """
    if k != int(k) or k < 1:
        raise ContractViolation("k must be an integer >= 1")
    k = float(k)
    return k ** (-s) * phi_gap + k ** (-t) * tracking_err**2


@dataclass(frozen=True)
class MeritCoefficients:
    """Exponent pair (s, t) of the merit weights a_k = k^-s, b_k = k^-t."""

    s: float
    t: float

    @classmethod
    def from_schedule(cls, sp):
        return cls(s=sp.s, t=sp.t_exp)

    def a(self, k):
        return float(k) ** (-self.s)

    def b(self, k):
        return float(k) ** (-self.t)

    def value(self, k, phi_gap, tracking_err):
        return merit_value(k, self.s, self.t, phi_gap, tracking_err)


def lipschitz_phi_bound(lip_F, lip_f, rho, mu, sigma):
    """Upper bound on the gradient Lipschitz constant of phi_{rho,sigma}.

    With c = lip_F + 2*rho*lip_f and sig_bar = min(sigma, mu):
    c * (c + sig_bar) / sig_bar. The saddle map itself is (c / sig_bar)-
    Lipschitz in x, which is where the leading factor comes from.
    """
    if not (mu > 0 and sigma > 0):
        raise ContractViolation("lipschitz_phi_bound needs mu > 0 and sigma > 0")
    sig_bar = min(sigma, mu)
    c = lip_F + 2.0 * rho * lip_f
    return c * (c + sig_bar) / sig_bar


@dataclass
class DiagnosticsRecord:
    """One instrumented snapshot of a run at iteration k."""

    k: int
    phi_k: float
    eps_rel: Optional[float]
    tracking_err: float
    stat_residual: float
    merit: float
    elapsed_s: float


@dataclass
class SandwichRecord:
    rho: float
    sigma: float
    phi_smoothed: float
    phi_exact: float
    gap: float
    lower_slack: float  # phi_smoothed - (phi_exact - sigma/2 ||y*||^2); >= 0 when the bound holds


@dataclass
class SandwichReport:
    records: List[SandwichRecord]
    lower_bounds_ok: bool
    max_lower_violation: float
    diagonal_gaps: List[float]
    diagonal_monotone: bool

    def __str__(self):
        lines = ["%8s %10s %14s %14s %12s" % ("rho", "sigma", "phi_smoothed",
                                              "phi_exact", "gap")]
        for r in self.records:
            lines.append("%8.1e %10.1e %14.6e %14.6e %12.3e"
                         % (r.rho, r.sigma, r.phi_smoothed, r.phi_exact, r.gap))
        lines.append("lower bounds ok: %s   diagonal monotone: %s"
                     % (self.lower_bounds_ok, self.diagonal_monotone))
        return "\n".join(lines)


def sandwich_check(problem_cf, x, rho_list, sigma_list, oracle_tol=1e-8,
                   slack=None, diag_slack=1e-8, **oracle_kw):
    """Evaluate the smoothed-vs-exact value sandwich on a (rho, sigma) grid.

    problem_cf must expose .problem plus closed_form_phi(x) and
    closed_form_y_star(x). For every grid cell the lower bound

        phi_{rho,sigma}(x) >= phi(x) - (sigma/2) * ||y*(x)||^2 - slack

    is checked (slack defaults to max(1e-8, 10*oracle_tol)); along the
    diagonal (rho_list[i], sigma_list[i]) the absolute gap must be
    nonincreasing within diag_slack. The asymptotic upper bound
    phi_{rho,sigma} <= phi + eps is what the shrinking gaps witness.
    """
    if slack is None:
        slack = max(1e-8, 10.0 * oracle_tol)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    prob = problem_cf.problem
    phi_exact = float(problem_cf.closed_form_phi(x))
    ystar = np.atleast_1d(problem_cf.closed_form_y_star(x))
    ynorm2 = float(np.dot(ystar, ystar))

    values = {}
    records = []
    worst = 0.0
    for rho in rho_list:
        for sig in sigma_list:
            pr = PenaltyReg(rho, sig)
            val = eval_phi(prob, pr, x, tol=oracle_tol, **oracle_kw)
            lower_slack = val - (phi_exact - 0.5 * sig * ynorm2)
            records.append(SandwichRecord(
                rho=rho, sigma=sig, phi_smoothed=val, phi_exact=phi_exact,
                gap=val - phi_exact, lower_slack=lower_slack,
            ))
            values[(rho, sig)] = val
            worst = min(worst, lower_slack)

    diag_gaps = []
    n_diag = min(len(rho_list), len(sigma_list))
    for i in range(n_diag):
        diag_gaps.append(abs(values[(rho_list[i], sigma_list[i])] - phi_exact))
    monotone = all(
        diag_gaps[i + 1] <= diag_gaps[i] + diag_slack
        for i in range(len(diag_gaps) - 1)
    )
    return SandwichReport(
        records=records,
        lower_bounds_ok=(worst >= -slack),
        max_lower_violation=max(0.0, -worst),
        diagonal_gaps=diag_gaps,
        diagonal_monotone=monotone,
    )
