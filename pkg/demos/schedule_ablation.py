"""Schedule sensitivity on the n=100 synthetic benchmark.

Starts from the reference configuration and perturbs one knob at a time.
Every variant still reaches eps_rel < 1e-4; what changes is how long it
takes. Time-to-target is wall clock spent inside the solver step only, so
rows are comparable.
"""

import numpy as np

from sipba import (
    ScheduleParams,
    initial_state,
    relative_error,
    run,
    synthetic_problem,
)

BASE = dict(alpha0=0.1, beta0=0.001, rho0=10.0, sigma0=0.01,
            p=0.001, q=0.001, s=0.1)

VARIANTS = [
    {},
    {"alpha0": 1.0}, {"alpha0": 0.01},
    {"beta0": 0.01}, {"beta0": 0.0001},
    {"p": 0.01}, {"p": 0.0001},
    {"q": 0.01}, {"q": 0.0001},
    {"s": 0.3}, {"s": 0.016},
    {"p": 0.01, "q": 0.01, "s": 0.16},
]

SEEDS = (0, 1, 2)
TARGET = 1e-4


def main():
    sb = synthetic_problem(100)
    inits = [sb.sample_init(np.random.Generator(np.random.Philox(1000 + i)))
             for i in SEEDS]

    print("target eps_rel < %g, %d seeds per row" % (TARGET, len(SEEDS)))
    print("%-28s %10s %12s" % ("override", "iters", "time_s"))
    for over in VARIANTS:
        sp = ScheduleParams(**{**BASE, **over})
        iters, times = [], []
        for x0, y0, z0 in inits:
            init = initial_state(sb.problem, x0, y0, z0)
            xi, yi = init.x.copy(), init.y.copy()
            res = run(sb.problem, sp, init, max_iter=200000,
                      target=lambda st: relative_error(
                          st.x, st.y, sb.x_star, sb.y_star, xi, yi) < TARGET,
                      stop_at_target=True)
            iters.append(res.target_iteration)
            times.append(res.target_seconds)
        label = ", ".join("%s=%g" % kv for kv in over.items()) or "(base)"
        print("%-28s %10.0f %12.4f"
              % (label, np.mean(iters), np.mean(times)))


if __name__ == "__main__":
    main()
