"""Primal-dual hybrid gradient solver for ``min_u G(u) + ||K u||``."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError, DivergenceError
from . import _fast
from .norms import eval_norm
from .operators import GradientOperator, operator_norm_bound
from .prox import prox_collab


@dataclass(frozen=True)
class SolverConfig:
    """Step sizes and stopping rule.

    ``tau * sigma * op_norm**2 <= 1`` is checked at construction. The
    defaults, ``tau = sigma = 1/sqrt(8)``, suit the forward-difference gradient.
    """

    tau: float = 1 / math.sqrt(8.0)
    sigma: float = 1 / math.sqrt(8.0)
    max_iters: int = 1000
    tol: float = 1e-5
    record_energy: bool = False
    op_norm: float = math.sqrt(8.0)
    trace_path: str = None

    def __post_init__(self):
        if not (self.tau > 0 and self.sigma > 0):
            raise ContractError("step sizes must be positive")
        if self.max_iters < 1:
            raise ContractError("max_iters must be at least 1")
        if self.tau * self.sigma * self.op_norm**2 > 1 + 1e-12:
            raise ContractError(
                f"tau*sigma*||K||^2 = {self.tau * self.sigma * self.op_norm ** 2:.6g} exceeds 1"
            )

    @classmethod
    def for_operator(cls, K, **kwargs):
        """Balanced steps ``tau = sigma = 1/||K||`` for the operator `K`."""
        L = operator_norm_bound(K)
        kwargs.setdefault("tau", 1.0 / L)
        kwargs.setdefault("sigma", 1.0 / L)
        return cls(op_norm=L, **kwargs)


@dataclass
class SolverState:
    """Iterates of the saddle-point iteration and per-iteration diagnostics."""

    u: np.ndarray
    u_bar: np.ndarray
    g: np.ndarray
    q: np.ndarray
    iteration: int = 0
    primal_history: list = field(default_factory=list)
    dual_history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)
    converged: bool = False

    @property
    def primal_residual(self):
        return self.primal_history[-1] if self.primal_history else math.nan

    @property
    def dual_residual(self):
        return self.dual_history[-1] if self.dual_history else math.nan


def _average(x, n_entries):
    return float(np.abs(x).sum()) / n_entries


def residuals(prev, next, K, tau, sigma):
    """Average magnitude of the primal and dual residuals between two states.

    ``P = (u_n - u_{n+1})/tau - K^T (q_n - q_{n+1})`` and
    ``D = (q_n - q_{n+1})/sigma - K (u_n - u_{n+1})``, both summed in absolute
    value and divided by the number of image entries (pixels times channels).
    """
    du = prev.u - next.u
    dq = prev.q - next.q
    P = du / tau - K.adjoint(dq)
    D = dq / sigma - K(du)
    n = du.size
    return _average(P, n), _average(D, n)


def _use_fast(K, spec, u0, use_fast):
    if use_fast is False or not _fast.AVAILABLE:
        return False
    ok = isinstance(K, GradientOperator) and np.ndim(u0) == 3 and _fast.prox_code(spec) is not None
    if use_fast and not ok:
        raise ContractError("compiled kernels need the gradient operator and a supported norm")
    return ok


def pdhg_solve(fidelity_prox, K, spec, config, u0, energy=None, use_fast=None):
    """Run PDHG on ``G(u) + ||K u||_spec``.

    Parameters
    ----------
    fidelity_prox : callable
        ``fidelity_prox(v, tau)`` returns ``prox_{tau G}(v)``.
    K : operator
        Callable with an ``adjoint`` method.
    spec : NormSpec
    config : SolverConfig
    u0 : ndarray, shape (height, width, C)
        Starting point; ``g`` starts at ``K u0`` and ``q`` at zero.
    energy : callable, optional
        ``energy(u)`` returning ``G(u)``; needed when ``config.record_energy``.
    use_fast : bool, optional
        Use the compiled kernels. By default they are used whenever numba is
        installed and `K` is the image gradient.

    Returns
    -------
    u : ndarray
    state : SolverState
    """
    tau, sigma = config.tau, config.sigma
    u = np.array(u0, dtype=np.float64)
    fast = _use_fast(K, spec, u, use_fast)
    if fast:
        code, inner_is_col = _fast.prox_code(spec)
    Ku = K(u)
    q = np.zeros_like(Ku)
    KTq = np.zeros_like(u)
    state = SolverState(u=u, u_bar=u.copy(), g=Ku.copy(), q=q)
    n = u.size
    writer = None
    trace = open(config.trace_path, "w", newline="") if config.trace_path else None
    try:
        if trace:
            writer = csv.writer(trace)
            writer.writerow(["iteration", "primal_residual", "dual_residual", "energy"])
        for it in range(1, config.max_iters + 1):
            u1 = fidelity_prox(u - tau * KTq, tau)
            if fast:
                u1 = np.ascontiguousarray(u1, dtype=np.float64)
                q1, g, sd = _fast.dual_update(u, u1, q, sigma, code, inner_is_col)
                KTq1, sp = _fast.primal_residual(q1, KTq, u, u1, tau)
                rp, rd = sp / n, sd / n
                Ku1 = None
            else:
                Ku1 = K(u1)
                Ku_bar = 2.0 * Ku1 - Ku
                g = prox_collab(Ku_bar + q / sigma, 1.0 / sigma, spec)
                q1 = q + sigma * (Ku_bar - g)
                KTq1 = K.adjoint(q1)
                P = (u - u1) / tau - (KTq - KTq1)
                D = (q - q1) / sigma - (Ku - Ku1)
                rp, rd = _average(P, n), _average(D, n)
            if not (math.isfinite(rp) and math.isfinite(rd)):
                raise DivergenceError(it)
            u_bar = 2.0 * u1 - u
            u, Ku, q, KTq = u1, Ku1, q1, KTq1
            state.u, state.u_bar, state.g, state.q = u, u_bar, g, q
            state.iteration = it
            state.primal_history.append(rp)
            state.dual_history.append(rd)
            e = math.nan
            if config.record_energy:
                if energy is None:
                    raise ContractError("record_energy needs an energy callable")
                e = energy(u) + eval_norm(K(u), spec)
                state.energy_history.append(e)
            if writer:
                writer.writerow([it, repr(rp), repr(rd), repr(e)])
            if rp < config.tol and rd < config.tol:
                state.converged = True
                break
    finally:
        if trace:
            trace.close()
    return u, state
