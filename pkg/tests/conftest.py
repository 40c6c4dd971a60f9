import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ctv.norms import EXPERIMENT_NORMS, INF

settings.register_profile(
    "ctv", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ctv"))

NORM_IDS = [str(s) for s in EXPERIMENT_NORMS]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=EXPERIMENT_NORMS, ids=NORM_IDS)
def norm(request):
    return request.param


def random_grad(rng, n=4, m=2, c=3, scale=3.0):
    return scale * rng.standard_normal((n, m, c))


def cvx_norm(Y, spec):
    """cvxpy expression for the collaborative norm of a list of (M, C) variables."""
    import cvxpy as cp

    def red(p, exprs):
        v = cp.hstack(exprs) if len(exprs) > 1 else exprs[0]
        return cp.norm(v, "inf" if p == INF else p) if len(exprs) > 1 else cp.abs(v)

    if spec.family == "schatten":
        p, q = spec.exponents
        per_pixel = [cp.normNuc(y) if p == 1 else cp.sigma_max(y) if p == INF else cp.norm(y, "fro") for y in Y]
        return red(q, per_pixel)
    N = len(Y)
    M, C = Y[0].shape
    E = np.empty((N, M, C), dtype=object)
    for i in range(N):
        for j in range(M):
            for k in range(C):
                E[i, j, k] = Y[i][j, k]
    inner, middle, outer = spec.axes
    T = E.transpose(outer, middle, inner)
    p, q, r = spec.exponents
    return red(r, [red(q, [red(p, list(T[a, b])) for b in range(T.shape[1])]) for a in range(T.shape[0])])


def cvx_prox(A, tau, spec):
    """Reference prox from a conic solver."""
    import cvxpy as cp

    Y = [cp.Variable(A.shape[1:]) for _ in range(A.shape[0])]
    fit = sum(cp.sum_squares(y - a) for y, a in zip(Y, A))
    prob = cp.Problem(cp.Minimize(0.5 * fit + tau * cvx_norm(Y, spec)))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return np.stack([y.value for y in Y]), prob.value


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
