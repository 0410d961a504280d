"""Single-loop solver and the double-loop reference it is measured against.

One iteration of the single-loop method, from state (x, y, z) at counter k
with scheduled parameters (alpha_k, beta_k, rho_k, sigma_k):

    y+ = Proj_Y(y + beta_k * direction_y(x, y, z))
    z+ = Proj_Y(z - beta_k * direction_z(x, y, z))
    x+ = Proj_X(x - alpha_k * direction_x(x, y+, z+))

Exactly three gradient-pair evaluations per step (six partial-gradient
calls), no inner loop. The schedules

    alpha_k = alpha0 * k^(-s)
    beta_k  = beta0  * k^(-(2p+q))
    sigma_k = sigma0 * k^(-q)
    rho_k   = min(rho0 * k^p, rho_cap)

follow the decreasing-step regime 0 < s < 1/2, 0 < p, q < 1, s >= 8(p+q);
parameter choices outside the regime are allowed and only warned about.
"""

import time
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import ContractViolation, DivergenceError, SaddleConvergenceError
from .smoothing import PenaltyReg, direction_x, direction_y, direction_z
from .saddle import solve_saddle


@dataclass(frozen=True)
class ScheduleParams:
    """Step-size and penalty schedule coefficients.

    t_exp is the merit-weight exponent; defaults to 4p + 5q when omitted.
    """

    alpha0: float
    beta0: float
    rho0: float
    sigma0: float
    p: float
    q: float
    s: float
    t_exp: Optional[float] = None
    rho_cap: float = 1e12

    def __post_init__(self):
        for name in ("alpha0", "beta0", "rho0", "sigma0", "rho_cap"):
            v = getattr(self, name)
            if not (v > 0 and np.isfinite(v)):
                raise ContractViolation("%s must be positive and finite" % name)
        for name in ("p", "q", "s"):
            v = getattr(self, name)
            if v < 0 or not np.isfinite(v):
                raise ContractViolation("%s must be finite and >= 0" % name)
        if self.t_exp is None:
            object.__setattr__(self, "t_exp", 4.0 * self.p + 5.0 * self.q)
        if not (0 < self.p < 1) or not (0 < self.q < 1) or not (0 < self.s < 0.5):
            warnings.warn(
                "schedule exponents outside the guaranteed regime "
                "(0<p<1, 0<q<1, 0<s<1/2)",
                stacklevel=2,
            )
        elif self.s < 8.0 * (self.p + self.q):
            warnings.warn(
                "s=%g < 8(p+q)=%g: outside the guaranteed-rate regime"
                % (self.s, 8.0 * (self.p + self.q)),
                stacklevel=2,
            )

    @classmethod
    def guideline(cls, alpha0, beta0, sigma0, p=0.01, q=0.01, rho0=10.0, **kw):
        """Guideline construction: s is forced to 8(p+q)."""
        return cls(
            alpha0=alpha0, beta0=beta0, rho0=rho0, sigma0=sigma0,
            p=p, q=q, s=8.0 * (p + q), **kw,
        )


class Params(NamedTuple):
    alpha: float
    beta: float
    rho: float
    sigma: float


def params_at(sp, k):
    """Scheduled (alpha_k, beta_k, rho_k, sigma_k); the counter starts at 1."""
    if k != int(k) or k < 1:
        raise ContractViolation("iteration counter k must be an integer >= 1")
    k = float(k)
    return Params(
        alpha=sp.alpha0 * k ** (-sp.s),
        beta=sp.beta0 * k ** (-(2.0 * sp.p + sp.q)),
        rho=min(sp.rho0 * k**sp.p, sp.rho_cap),
        sigma=sp.sigma0 * k ** (-sp.q),
    )


@dataclass(frozen=True)
class IterateState:
    """Solver state after k-1 completed steps; all blocks feasible."""

    k: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray


def initial_state(problem, x0, y0, z0=None):
    """Build a feasible starting state (projecting once). z defaults to y."""
    x = problem.set_X.project(np.atleast_1d(np.asarray(x0, dtype=float)))
    y = problem.set_Y.project(np.atleast_1d(np.asarray(y0, dtype=float)))
    z = y.copy() if z0 is None else problem.set_Y.project(
        np.atleast_1d(np.asarray(z0, dtype=float))
    )
    return IterateState(k=1, x=x, y=y, z=z)


def sipba_step(problem, sp, state):
    """One single-loop iteration; returns the state at counter k+1."""
    pars = params_at(sp, state.k)
    pr = PenaltyReg(pars.rho, pars.sigma)
    x, y, z = state.x, state.y, state.z
    dy = direction_y(problem, pr, x, y, z)
    dz = direction_z(problem, pr, x, y, z)
    y1 = problem.set_Y.project(y + pars.beta * dy)
    z1 = problem.set_Y.project(z - pars.beta * dz)
    dx = direction_x(problem, pr, x, y1, z1)
    x1 = problem.set_X.project(x - pars.alpha * dx)
    if not (np.isfinite(x1).all() and np.isfinite(y1).all() and np.isfinite(z1).all()):
        raise DivergenceError(
            "non-finite iterate at k=%d" % state.k, state=state
        )
    return IterateState(k=state.k + 1, x=x1, y=y1, z=z1)


@dataclass
class RunResult:
    state: IterateState
    iterations: int
    stop_reason: str
    step_seconds: float
    target_iteration: Optional[int] = None
    target_seconds: Optional[float] = None


def run(problem, sp, init, max_iter, target=None, stop_at_target=False,
        callback=None, callback_stride=100):
    """Drive sipba_step for max_iter iterations.

    target : callable(state) -> bool, optional
        Checked after every step, outside the timed region. The first hit
        records (iteration, stepping seconds); the run stops there only if
        stop_at_target is set.
    callback : callable(state, elapsed_seconds), optional
        Invoked every callback_stride completed steps and after the final
        step; excluded from the stepping clock.

    Timing counts the stepping work only, so diagnostics (oracle calls in
    callbacks, target checks) do not pollute time-to-target measurements.
    """
    if max_iter < 0:
        raise ContractViolation("max_iter must be >= 0")
    state = init
    elapsed = 0.0
    result = RunResult(state=state, iterations=0, stop_reason="max_iter",
                       step_seconds=0.0)
    last_emitted = 0
    for _ in range(max_iter):
        t0 = time.perf_counter()
        state = sipba_step(problem, sp, state)
        elapsed += time.perf_counter() - t0
        done = state.k - 1  # completed steps
        if target is not None and result.target_iteration is None and target(state):
            result.target_iteration = done
            result.target_seconds = elapsed
            if stop_at_target:
                result.stop_reason = "target"
                if callback is not None:
                    callback(state, elapsed)
                    last_emitted = done
                break
        if callback is not None and done % callback_stride == 0:
            callback(state, elapsed)
            last_emitted = done
    done = state.k - 1
    if callback is not None and done != last_emitted and done > 0:
        callback(state, elapsed)
    result.state = state
    result.iterations = done
    result.step_seconds = elapsed
    return result


@dataclass
class BaselineResult:
    x: np.ndarray
    saddle: object
    outer_iterations: int
    inner_iterations: int
    inner_failures: int
    step_seconds: float
    stop_reason: str = "max_iter"
    target_iteration: Optional[int] = None
    target_seconds: Optional[float] = None


def run_double_loop_baseline(problem, sp, x0, outer_iter, inner_tol=1e-8,
                             inner_max_iter=10**6, inner_beta=None, u0=None,
                             target=None, stop_at_target=False, callback=None):
    """Reference double-loop method: solve the saddle, then step x.

    Each outer iteration k solves the saddle at (rho_k, sigma_k) to
    inner_tol (warm-started from the previous saddle) and applies
    x <- Proj_X(x - alpha_k * direction_x(x, y*, z*)). Inner convergence
    failures are recorded and the outer loop continues with the last
    saddle iterate. Returns cumulative inner-iteration counts so gradient
    budgets can be compared against the single-loop method.
    """
    x = problem.set_X.project(np.atleast_1d(np.asarray(x0, dtype=float)))
    u = u0
    sp_last = None
    inner_total = 0
    failures = 0
    elapsed = 0.0
    out = BaselineResult(x=x, saddle=None, outer_iterations=0,
                         inner_iterations=0, inner_failures=0, step_seconds=0.0)
    for k in range(1, outer_iter + 1):
        pars = params_at(sp, k)
        pr = PenaltyReg(pars.rho, pars.sigma)
        t0 = time.perf_counter()
        try:
            sd = solve_saddle(problem, pr, x, tol=inner_tol,
                              max_iter=inner_max_iter, u0=u, beta=inner_beta)
        except SaddleConvergenceError as err:
            sd = err.saddle
            failures += 1
        inner_total += sd.iterations
        g = direction_x(problem, pr, x, sd.y_star, sd.z_star)
        x = problem.set_X.project(x - pars.alpha * g)
        elapsed += time.perf_counter() - t0
        u = sd.u
        sp_last = sd
        if target is not None and out.target_iteration is None and target(k, x, sd):
            out.target_iteration = k
            out.target_seconds = elapsed
            if stop_at_target:
                out.stop_reason = "target"
                out.outer_iterations = k
                break
        if callback is not None:
            callback(k, x, sd, inner_total, elapsed)
        out.outer_iterations = k
    out.x = x
    out.saddle = sp_last
    out.inner_iterations = inner_total
    out.inner_failures = failures
    out.step_seconds = elapsed
    return out


class GradEvalCounter:
    """Counts calls to the four partial-gradient callables of a problem."""

    def __init__(self):
        self.count = 0

    def _wrap(self, fn):
        def wrapped(x, y):
            self.count += 1
            return fn(x, y)

        return wrapped


def with_gradient_counter(problem):
    """Return (problem copy whose gradient calls are counted, the counter)."""
    c = GradEvalCounter()
    counted = replace(
        problem,
        grad_F_x=c._wrap(problem.grad_F_x),
        grad_F_y=c._wrap(problem.grad_F_y),
        grad_f_x=c._wrap(problem.grad_f_x),
        grad_f_y=c._wrap(problem.grad_f_y),
    )
    return counted, c
