"""Benchmark problem families with known structure.

Three families:

* quadratic_testbed: scalar F = -(y-x)^2, f = (y-x)^2, everything
  unconstrained. The saddle of the regularized objective solves a 2x2
  linear system (analytic_saddle), which makes it the ground truth for
  oracle and contraction tests.
* synthetic_problem: the n-dimensional family with closed-form pessimistic
  value function and known optimum (e/2, e/(2*sqrt(n))).
* hyper-representation: pessimistic linear representation learning on
  synthetic regression splits; no strong concavity (mu recorded as 0).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .problem import BilevelProblem, Box, FullSpace


# ---------------------------------------------------------------------------
# quadratic testbed


def quadratic_testbed():
    """Scalar unconstrained instance used as ground truth in tests.

    F(x,y) = -(y-x)^2 and f(x,y) = (y-x)^2, so S(x) = {x}, phi(x) = 0 for
    every x, mu = 2, and both Lipschitz constants (as consumed by the
    operator bounds) equal 2.
    """
    def F(x, y):
        d = y[0] - x[0]
        return -d * d

    def f(x, y):
        d = y[0] - x[0]
        return d * d

    return BilevelProblem(
        n_x=1, n_y=1, F=F, f=f,
        grad_F_x=lambda x, y: 2.0 * (y - x),
        grad_F_y=lambda x, y: -2.0 * (y - x),
        grad_f_x=lambda x, y: -2.0 * (y - x),
        grad_f_y=lambda x, y: 2.0 * (y - x),
        set_X=FullSpace(1), set_Y=FullSpace(1),
        mu=2.0, lip_F=2.0, lip_f=2.0,
        name="quadratic-testbed",
    )


def analytic_saddle(x, rho, sigma):
    """Exact saddle of the regularized testbed objective at scalar x.

    Stationarity of psi in (y, z) is the linear system

        2(1+rho) y + sigma z          = 2(1+rho) x
        -sigma   y + (2 rho + sigma) z = 2 rho x

    Returns (y_star, z_star) as shape-(1,) arrays. As sigma -> 0 both
    tend to x, the exact lower-level response.
    """
    x = float(np.atleast_1d(np.asarray(x, dtype=float))[0])
    A = np.array([[2.0 * (1.0 + rho), sigma], [-sigma, 2.0 * rho + sigma]])
    b = np.array([2.0 * (1.0 + rho) * x, 2.0 * rho * x])
    y, z = np.linalg.solve(A, b)
    return np.array([y]), np.array([z])


# ---------------------------------------------------------------------------
# synthetic family with closed-form value function


def closed_form_y_star(n, x):
    """Pessimistic lower-level response y*(x) of the synthetic family."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    e = np.ones(n)
    nx = float(np.linalg.norm(x))
    if nx > math.sqrt(n) / 2.0:
        return (nx / n) * e
    return e / (2.0 * math.sqrt(n))


def closed_form_phi(n, x):
    """Exact pessimistic value phi(x) = (1/n)||x-e||^2 - ||y*(x)-e||^2."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    e = np.ones(n)
    ys = closed_form_y_star(n, x)
    return float(np.dot(x - e, x - e) / n - np.dot(ys - e, ys - e))


@dataclass(frozen=True)
class SyntheticProblem:
    """Synthetic instance bundle: the problem plus its known solution."""

    n: int
    problem: BilevelProblem
    x_star: np.ndarray
    y_star: np.ndarray

    def closed_form_phi(self, x):
        return closed_form_phi(self.n, x)

    def closed_form_y_star(self, x):
        return closed_form_y_star(self.n, x)

    def sample_init(self, rng):
        """Random start: x ~ U[0.1,10]^n, y ~ U[1/(2 sqrt n), 10]^n, z = y."""
        x0 = rng.uniform(0.1, 10.0, self.n)
        y0 = rng.uniform(1.0 / (2.0 * math.sqrt(self.n)), 10.0, self.n)
        return x0, y0, y0.copy()


def synthetic_problem(n):
    """The n-dimensional closed-form family; needs n >= 2.

    F(x,y) = (1/n)||x-e||^2 - ||y-e||^2 over X = [0.1, 10]^n,
    f(x,y) = (<e,y> - ||x||)^2 over Y = [1/(2 sqrt n), inf)^n.
    Unique optimum (e/2, e/(2 sqrt n)) with value sqrt(n) - n.

    lip_f is an analytic bound on the joint Hessian of f over
    X x (Y cut at 3 sqrt(n)): the xx block is bounded by
    2 + 2*max|<e,y>-||x||| / min||x||  <=  2 + (3n^1.5 + 10 sqrt n)/(0.05 sqrt n)
    = 60n + 202 (using min ||x|| = 0.1 sqrt n), the yy block by 2n, the
    cross block by 2 sqrt n; a symmetric block matrix is bounded by
    max(diag norms) + offdiag norm.
    """
    if n < 2:
        raise ContractViolation("synthetic family needs n >= 2")
    e = np.ones(n)
    rootn = math.sqrt(n)

    def F(x, y):
        dx = x - e
        dy = y - e
        return float(np.dot(dx, dx) / n - np.dot(dy, dy))

    def f(x, y):
        r = float(np.dot(e, y)) - float(np.linalg.norm(x))
        return r * r

    def grad_F_x(x, y):
        return (2.0 / n) * (x - e)

    def grad_F_y(x, y):
        return -2.0 * (y - e)

    def grad_f_x(x, y):
        nx = float(np.linalg.norm(x))
        r = float(np.dot(e, y)) - nx
        return (-2.0 * r / nx) * x

    def grad_f_y(x, y):
        r = float(np.dot(e, y)) - float(np.linalg.norm(x))
        return (2.0 * r) * e

    lip_f = 60.0 * n + 202.0 + 2.0 * rootn
    prob = BilevelProblem(
        n_x=n, n_y=n, F=F, f=f,
        grad_F_x=grad_F_x, grad_F_y=grad_F_y,
        grad_f_x=grad_f_x, grad_f_y=grad_f_y,
        set_X=Box(np.full(n, 0.1), np.full(n, 10.0)),
        set_Y=Box(np.full(n, 1.0 / (2.0 * rootn)), np.full(n, np.inf)),
        mu=2.0, lip_F=2.0, lip_f=lip_f,
        name="synthetic-n%d" % n,
    )
    return SyntheticProblem(
        n=n, problem=prob, x_star=e / 2.0, y_star=e / (2.0 * rootn)
    )


# ---------------------------------------------------------------------------
# hyper-representation on synthetic regression data


@dataclass(frozen=True)
class HyperRepData:
    """Synthetic regression splits for pessimistic representation learning.

    Targets are generated noise-free as y = X^T H_real w_real; Gaussian
    noise of scale noise_a is then added to the validation/training inputs
    and targets. The test split stays clean.
    """

    H_real: np.ndarray   # (n_feat, p_dim)
    w_real: np.ndarray   # (p_dim,)
    X_val: np.ndarray    # (n_feat, m1)
    y_val: np.ndarray    # (m1,)
    X_train: np.ndarray  # (n_feat, m2)
    y_train: np.ndarray  # (m2,)
    X_test: np.ndarray   # (n_feat, m_test)
    y_test: np.ndarray   # (m_test,)
    noise_a: float
    seed: int

    @property
    def n_feat(self):
        return self.H_real.shape[0]

    @property
    def p_dim(self):
        return self.H_real.shape[1]


def generate_hyper_rep(n_feat, p_dim, m1, m2, m_test, noise_a, seed):
    """Draw one HyperRepData instance (all base entries standard normal)."""
    if min(n_feat, p_dim, m1, m2, m_test) < 1:
        raise ContractViolation("all hyper-representation dimensions must be >= 1")
    if noise_a < 0:
        raise ContractViolation("noise_a must be >= 0")
    rng = np.random.Generator(np.random.Philox(seed))
    H_real = rng.standard_normal((n_feat, p_dim))
    w_real = rng.standard_normal(p_dim)
    X_val = rng.standard_normal((n_feat, m1))
    X_train = rng.standard_normal((n_feat, m2))
    X_test = rng.standard_normal((n_feat, m_test))
    g = H_real @ w_real
    y_val = X_val.T @ g
    y_train = X_train.T @ g
    y_test = X_test.T @ g
    # noise drawn unconditionally so a=0 reproduces the clean stream exactly
    X_val = X_val + noise_a * rng.standard_normal(X_val.shape)
    X_train = X_train + noise_a * rng.standard_normal(X_train.shape)
    y_val = y_val + noise_a * rng.standard_normal(m1)
    y_train = y_train + noise_a * rng.standard_normal(m2)
    return HyperRepData(
        H_real=H_real, w_real=w_real, X_val=X_val, y_val=y_val,
        X_train=X_train, y_train=y_train, X_test=X_test, y_test=y_test,
        noise_a=float(noise_a), seed=int(seed),
    )


def save_hyper_rep(data, path):
    np.savez(
        path,
        H_real=data.H_real, w_real=data.w_real,
        X_val=data.X_val, y_val=data.y_val,
        X_train=data.X_train, y_train=data.y_train,
        X_test=data.X_test, y_test=data.y_test,
        noise_a=np.array(data.noise_a), seed=np.array(data.seed),
    )


def load_hyper_rep(path):
    with np.load(path) as d:
        return HyperRepData(
            H_real=d["H_real"], w_real=d["w_real"],
            X_val=d["X_val"], y_val=d["y_val"],
            X_train=d["X_train"], y_train=d["y_train"],
            X_test=d["X_test"], y_test=d["y_test"],
            noise_a=float(d["noise_a"]), seed=int(d["seed"]),
        )


def hyper_rep_problem(data):
    """Bilevel instance: x is the flattened map H, y the regression head w.

    Upper objective: mean squared validation error of X_val^T H w;
    lower objective: the same on the training split. Both are convex in w,
    so the strong-concavity assumption fails; mu is recorded as 0 with an
    assumption note and certified step bounds refuse the instance. The
    penalty term restores concavity in practice once rho exceeds the
    validation/training curvature ratio.

    Gradients (r = X^T H w - y): grad_w = (2/m) H^T X r,
    grad_H = (2/m) X r w^T.
    """
    n, p = data.n_feat, data.p_dim
    m1 = data.y_val.shape[0]
    m2 = data.y_train.shape[0]
    Xv, yv = data.X_val, data.y_val
    Xt, yt = data.X_train, data.y_train

    def F(x, w):
        r = Xv.T @ x.reshape(n, p) @ w - yv
        return float(np.dot(r, r) / m1)

    def f(x, w):
        r = Xt.T @ x.reshape(n, p) @ w - yt
        return float(np.dot(r, r) / m2)

    def grad_F_x(x, w):
        H = x.reshape(n, p)
        r = Xv.T @ H @ w - yv
        return ((2.0 / m1) * np.outer(Xv @ r, w)).ravel()

    def grad_F_y(x, w):
        H = x.reshape(n, p)
        r = Xv.T @ H @ w - yv
        return (2.0 / m1) * (H.T @ (Xv @ r))

    def grad_f_x(x, w):
        H = x.reshape(n, p)
        r = Xt.T @ H @ w - yt
        return ((2.0 / m2) * np.outer(Xt @ r, w)).ravel()

    def grad_f_y(x, w):
        H = x.reshape(n, p)
        r = Xt.T @ H @ w - yt
        return (2.0 / m2) * (H.T @ (Xt @ r))

    # local smoothness estimates over ||H|| and ||w|| up to 3x the data scale;
    # recorded for completeness, certified bounds never run here (mu = 0)
    radius = 3.0 * max(np.linalg.norm(data.H_real), np.linalg.norm(data.w_real), 1.0)
    s_val = float(np.linalg.norm(Xv, 2)) ** 2
    s_trn = float(np.linalg.norm(Xt, 2)) ** 2
    lip_F = (2.0 / m1) * s_val * (1.0 + 2.0 * radius**2)
    lip_f = (2.0 / m2) * s_trn * (1.0 + 2.0 * radius**2)

    return BilevelProblem(
        n_x=n * p, n_y=p, F=F, f=f,
        grad_F_x=grad_F_x, grad_F_y=grad_F_y,
        grad_f_x=grad_f_x, grad_f_y=grad_f_y,
        set_X=FullSpace(n * p), set_Y=FullSpace(p),
        mu=0.0, lip_F=lip_F, lip_f=lip_f,
        assumption_note="upper objective is convex (not strongly concave) in w",
        name="hyper-rep-n%d-p%d-a%g" % (n, p, data.noise_a),
    )


def hyper_rep_test_loss(data, x, w):
    """Mean squared error of the learned (H, w) on the clean test split."""
    H = np.asarray(x, dtype=float).reshape(data.n_feat, data.p_dim)
    r = data.X_test.T @ H @ np.asarray(w, dtype=float) - data.y_test
    return float(np.dot(r, r) / data.y_test.shape[0])


def hyper_rep_init(data, rng):
    """Random start for a hyper-representation run: H, w standard normal."""
    x0 = rng.standard_normal(data.n_feat * data.p_dim)
    y0 = rng.standard_normal(data.p_dim)
    return x0, y0, y0.copy()
