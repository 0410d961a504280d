"""Problem containers and projection operators.

A pessimistic bilevel problem

    min_{x in X}  max_{y in S(x)}  F(x, y),
    S(x) = argmin_{y' in Y} f(x, y'),

is described to the solver through a :class:`BilevelProblem`: plain callables
for the two objectives and their four partial gradients, plus projectable
descriptions of X and Y. The library never differentiates anything itself;
callers supply analytic gradients and can validate them with
:func:`check_gradients`.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractViolation


def _as_vector(v, dim, name):
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape != (dim,):
        raise ContractViolation(
            "%s must have shape (%d,), got %s" % (name, dim, arr.shape)
        )
    return arr


class ProjectableSet:
    """A closed convex set with a cheap Euclidean projection."""

    dim: int = 0

    def project(self, v):
        raise NotImplementedError

    def contains(self, v, tol=1e-10):
        v = _as_vector(v, self.dim, "v")
        return bool(
            np.linalg.norm(self.project(v) - v)
            <= tol * max(1.0, float(np.linalg.norm(v)))
        )


class FullSpace(ProjectableSet):
    """All of R^dim; projection is the identity."""

    def __init__(self, dim):
        if int(dim) < 1:
            raise ContractViolation("dim must be >= 1")
        self.dim = int(dim)

    def project(self, v):
        return _as_vector(v, self.dim, "v").copy()

    def __repr__(self):
        return "FullSpace(%d)" % self.dim


class Box(ProjectableSet):
    """Axis-aligned box. Bounds may be -inf/+inf for unbounded coordinates.

    Parameters
    ----------
    lower, upper : array_like
        Per-coordinate bounds, broadcastable to a common shape. Must satisfy
        lower <= upper everywhere.
    """

    def __init__(self, lower, upper):
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        lo, hi = np.broadcast_arrays(lo, hi)
        if lo.ndim != 1:
            raise ContractViolation("box bounds must be one-dimensional")
        if np.any(lo > hi):
            raise ContractViolation("box has lower > upper in some coordinate")
        self.lower = lo.copy()
        self.upper = hi.copy()
        self.dim = lo.shape[0]

    def project(self, v):
        v = _as_vector(v, self.dim, "v")
        return np.clip(v, self.lower, self.upper)

    def __repr__(self):
        return "Box(dim=%d)" % self.dim


class Ball(ProjectableSet):
    """Euclidean ball of given center and radius."""

    def __init__(self, center, radius):
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if not np.isfinite(c).all():
            raise ContractViolation("ball center must be finite")
        r = float(radius)
        if not (r > 0 and np.isfinite(r)):
            raise ContractViolation("ball radius must be positive and finite")
        self.center = c.copy()
        self.radius = r
        self.dim = c.shape[0]

    def project(self, v):
        v = _as_vector(v, self.dim, "v")
        d = v - self.center
        nd = float(np.linalg.norm(d))
        if nd <= self.radius:
            return v.copy()
        return self.center + (self.radius / nd) * d

    def __repr__(self):
        return "Ball(dim=%d, radius=%g)" % (self.dim, self.radius)


def project(set_, v):
    """Euclidean projection of v onto set_ (idempotent, nonexpansive)."""
    return set_.project(v)


@dataclass(frozen=True)
class BilevelProblem:
    """Immutable description of one pessimistic bilevel instance.

    F and f map (x, y) to a float; the four gradient callables return arrays
    of the matching dimension. Caller obligations, not checked here: the
    callables are pure and deterministic, f(x, .) attains its minimum on Y
    for every feasible x, and the supplied Lipschitz constants are valid on
    X times the region of Y the iterates visit.

    mu is the strong-concavity modulus of F(x, .). Instances that violate
    that assumption record mu=0 together with a human-readable
    ``assumption_note``; bounds that consume min(sigma, mu) refuse to run
    on them.
    """

    n_x: int
    n_y: int
    F: Callable
    f: Callable
    grad_F_x: Callable
    grad_F_y: Callable
    grad_f_x: Callable
    grad_f_y: Callable
    set_X: ProjectableSet
    set_Y: ProjectableSet
    mu: float
    lip_F: float
    lip_f: float
    assumption_note: Optional[str] = None
    name: str = field(default="problem")

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ContractViolation("n_x and n_y must be >= 1")
        if self.set_X.dim != self.n_x:
            raise ContractViolation("set_X dimension does not match n_x")
        if self.set_Y.dim != self.n_y:
            raise ContractViolation("set_Y dimension does not match n_y")
        if self.mu < 0 or not np.isfinite(self.mu):
            raise ContractViolation("mu must be finite and >= 0")
        if self.mu == 0 and self.assumption_note is None:
            raise ContractViolation(
                "mu=0 requires an assumption_note explaining the violation"
            )
        if not (self.lip_F > 0 and self.lip_f > 0):
            raise ContractViolation("Lipschitz constants must be positive")


def _sample_interior(s, rng, window=3.0):
    # Draw a point well inside s. Infinite box faces fall back to a finite
    # window next to the finite face (or around 0 if both faces are infinite).
    if isinstance(s, Box):
        lo, hi = s.lower, s.upper
        out = np.empty(s.dim)
        for i in range(s.dim):
            l, h = lo[i], hi[i]
            if np.isfinite(l) and np.isfinite(h):
                span = h - l
                out[i] = rng.uniform(l + 0.05 * span, h - 0.05 * span) if span > 0 else l
            elif np.isfinite(l):
                out[i] = rng.uniform(l + 1e-3, l + window)
            elif np.isfinite(h):
                out[i] = rng.uniform(h - window, h - 1e-3)
            else:
                out[i] = rng.uniform(-window, window)
        return out
    if isinstance(s, Ball):
        d = rng.standard_normal(s.dim)
        d /= max(np.linalg.norm(d), 1e-300)
        return s.center + d * s.radius * rng.uniform(0.0, 0.9)
    return rng.uniform(-window, window, s.dim)


def _central_diff(fun, v, i, h):
    vp = v.copy()
    vm = v.copy()
    vp[i] += h
    vm[i] -= h
    return (fun(vp) - fun(vm)) / (2.0 * h)


@dataclass
class GradientCheckReport:
    """Worst relative finite-difference error per supplied gradient."""

    errors: dict
    n_points: int
    fd_step: float

    @property
    def max_error(self):
        return max(self.errors.values())

    def passed(self, threshold):
        return self.max_error <= threshold

    def __str__(self):
        lines = ["gradient check over %d points (h=%g):" % (self.n_points, self.fd_step)]
        for k in sorted(self.errors):
            lines.append("  %-9s max rel err %.3e" % (k, self.errors[k]))
        return "\n".join(lines)


def check_gradients(problem, n_points=20, fd_step=1e-6, rng=None):
    """Compare the four supplied gradients against central differences.

    Points are sampled inside X and Y. Returns a
    :class:`GradientCheckReport`; the relative error for gradient g at a
    point is ||g - g_fd|| / max(||g_fd||, 1e-12).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    worst = {"grad_F_x": 0.0, "grad_F_y": 0.0, "grad_f_x": 0.0, "grad_f_y": 0.0}
    for _ in range(n_points):
        x = _sample_interior(problem.set_X, rng)
        y = _sample_interior(problem.set_Y, rng)
        pairs = [
            ("grad_F_x", problem.grad_F_x(x, y), lambda v: problem.F(v, y), x),
            ("grad_F_y", problem.grad_F_y(x, y), lambda v: problem.F(x, v), y),
            ("grad_f_x", problem.grad_f_x(x, y), lambda v: problem.f(v, y), x),
            ("grad_f_y", problem.grad_f_y(x, y), lambda v: problem.f(x, v), y),
        ]
        for key, g, fun, at in pairs:
            g = np.asarray(g, dtype=float)
            fd = np.array([_central_diff(fun, at, i, fd_step) for i in range(at.size)])
            err = np.linalg.norm(g - fd) / max(float(np.linalg.norm(fd)), 1e-12)
            if err > worst[key]:
                worst[key] = float(err)
    return GradientCheckReport(errors=worst, n_points=n_points, fd_step=fd_step)
