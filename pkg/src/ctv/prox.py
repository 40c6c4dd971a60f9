"""Proximal operators of collaborative norms and the ball projections behind them.

All operators act on ``(N, M, C)`` tensors and decouple over pixels, so every
helper works on batches of small per-pixel blocks.
"""

import numpy as np

from .exceptions import ContractError, UnsupportedNormError
from .norms import INF, _gram_eig2, dual_witness, eval_norm, lp
from .tensors import as_grad


def l1_threshold(v, radius):
    """Simplex threshold along the last axis of a nonnegative batch.

    Returns ``theta >= 0`` with ``sum(max(v - theta, 0)) == radius`` where the
    vector lies outside the l1 ball of that radius, and 0 otherwise. Uses
    ``theta = max_k (S_k - radius) / k`` over the sorted partial sums ``S_k``.
    """
    v = np.asarray(v, dtype=np.float64)
    radius = np.asarray(radius, dtype=np.float64)
    s = -np.sort(-v, axis=-1)
    cs = np.cumsum(s, axis=-1)
    k = np.arange(1, v.shape[-1] + 1, dtype=np.float64)
    theta = np.max((cs - radius[..., None]) / k, axis=-1)
    return np.maximum(theta, 0.0)


def project_l1_ball(v, radius=1.0):
    """Euclidean projection of a nonnegative vector onto ``{w : sum(w) <= radius}``.

    Works along the last axis, so batches of vectors are projected at once.
    """
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ContractError("project_l1_ball expects nonnegative entries")
    if np.any(np.asarray(radius) <= 0):
        raise ContractError("radius must be positive")
    theta = l1_threshold(v, radius)
    return np.maximum(v - theta[..., None], 0.0)


def project_l11_ball(V, radius=1.0):
    """Projection of nonnegative matrices onto the l^{1,1} ball (entry sum).

    The last two axes hold the matrix.
    """
    V = np.asarray(V, dtype=np.float64)
    flat = V.reshape(V.shape[:-2] + (-1,))
    return project_l1_ball(flat, radius).reshape(V.shape)


def project_l21_ball(V, radius=1.0):
    """Projection onto ``{W : sum_j ||W[j, :]||_2 <= radius}``.

    Rows are rescaled so that the vector of row norms is projected onto the
    l1 ball. Zero rows stay zero. The last two axes hold the matrix.
    """
    V = np.asarray(V, dtype=np.float64)
    if np.any(np.asarray(radius) <= 0):
        raise ContractError("radius must be positive")
    norms = np.sqrt(np.square(V).sum(axis=-1))
    theta = l1_threshold(norms, radius)
    new = np.maximum(norms - theta[..., None], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > 0, new / norms, 0.0)
    return V * scale[..., None]


def _linf2_levels(V, radius, max_iter=100):
    """Row clipping levels for the prox of ``radius * sqrt(sum_j ||V_j||_inf^2)``.

    The prox clips row ``j`` at ``t_j = s * h_j(s)`` with
    ``h_j(s) = max_k S_jk / (1 + k s)`` (``S_jk`` the sum of the k largest
    magnitudes in row j) and ``s`` the root of ``||h(s)||_2 = radius``.
    ``1 / ||h(s)||_2`` is concave and increasing, so Newton's method started
    at ``s = 0`` approaches the root monotonically from the left.

    Returns the levels (shape ``V.shape[:-1]``) and a mask of blocks that are
    already inside the dual ball (prox is zero there).
    """
    batch = V.shape[:-2]
    V = V.reshape((-1,) + V.shape[-2:])
    a = np.abs(V)
    S = np.cumsum(-np.sort(-a, axis=-1), axis=-1)
    k = np.arange(1, a.shape[-1] + 1, dtype=np.float64)
    radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), batch).reshape(-1)
    dual = np.sqrt(np.square(S[..., -1]).sum(axis=-1))
    inside = dual <= radius
    s = np.zeros(V.shape[:-2])
    target = 1.0 / radius
    active = ~inside
    for _ in range(max_iter):
        if not active.any():
            break
        Sa = S[active]
        sa = s[active][:, None, None]
        vals = Sa / (1.0 + k * sa)
        idx = np.argmax(vals, axis=-1)[..., None]
        h = np.take_along_axis(vals, idx, axis=-1)[..., 0]
        kk = k[idx[..., 0]]
        dh = -kk * h / (1.0 + kk * sa[..., 0])
        g = np.sqrt(np.square(h).sum(axis=-1))
        dg = (h * dh).sum(axis=-1) / g
        F = 1.0 / g
        dF = -dg / (g * g)
        step = (target[active] - F) / dF
        s_new = sa[:, 0, 0] + np.maximum(step, 0.0)
        done = ~(step > 1e-15 * np.maximum(s_new, 1e-300))
        s[active] = s_new
        still = active.copy()
        still[active] = ~done
        active = still
    vals = S / (1.0 + k * s[..., None, None])
    t = s[..., None] * vals.max(axis=-1)
    return t.reshape(batch + t.shape[-1:]), inside.reshape(batch)


def project_l12_ball(V, radius=1.0):
    """Projection onto ``{W : sqrt(sum_j ||W[j, :]||_1^2) <= radius}``.

    This is the dual ball of ``sqrt(sum_j ||W[j, :]||_inf^2)``; the projection
    soft-thresholds each row at its own level. The last two axes hold the
    matrix; entries may have any sign.
    """
    V = np.asarray(V, dtype=np.float64)
    if np.any(np.asarray(radius) <= 0):
        raise ContractError("radius must be positive")
    t, inside = _linf2_levels(V, radius)
    P = np.sign(V) * np.maximum(np.abs(V) - t[..., None], 0.0)
    return np.where(inside[..., None, None], V, P)


def dual_prox_l1(y, tau):
    """Outer-norm subproblem for ``g = l1``: clip at 1."""
    return np.minimum(y, 1.0)


def dual_prox_l2(y, tau):
    """Outer-norm subproblem for ``g = l2``: projection onto the unit l2 ball."""
    n = np.sqrt(np.square(y).sum(axis=-1, keepdims=True))
    return y / np.maximum(n, 1.0)


def dual_prox_linf(y, tau):
    """Outer-norm subproblem for ``g = l_inf``: projection onto the unit l1 ball."""
    return project_l1_ball(y, 1.0)


def prox_inner_l2(u, tau, outer_prox_dual):
    """Prox of ``g(f(u))`` where ``f`` takes Euclidean norms of the rows of `u`.

    Parameters
    ----------
    u : ndarray, shape (..., n, m)
    tau : float
    outer_prox_dual : callable
        ``outer_prox_dual(y, tau)`` returns ``argmin_w 0.5 ||w - y||^2 + g*(w) / tau``
        along the last axis, for ``y = f(u) / tau``.

    Returns
    -------
    ndarray
        Every row rescaled to norm ``max(||u_i|| - tau * v_i, 0)``.
    """
    u = np.asarray(u, dtype=np.float64)
    norms = np.sqrt(np.square(u).sum(axis=-1))
    v = outer_prox_dual(norms / tau, tau)
    new = np.maximum(norms - tau * v, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > 0, new / norms, 0.0)
    return u * scale[..., None]


def prox_lp(x, tau, p):
    """Prox of ``tau * ||.||_p`` along the last axis."""
    x = np.asarray(x, dtype=np.float64)
    if p == 1:
        return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    if p == 2:
        n = np.sqrt(np.square(x).sum(axis=-1, keepdims=True))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(n > tau, x * (1.0 - tau / n), 0.0)
    theta = l1_threshold(np.abs(x), tau)
    return np.sign(x) * np.minimum(np.abs(x), theta[..., None])


def _schatten_rows(A, tau, p):
    """Schatten prox of every ``A[i]`` (``M x C``), channels-last layout.

    Two-row blocks use the closed-form Gram eigen-decomposition: the prox is
    ``W A[i]`` with ``W = V diag(shat / s) V^T``; zero singular values map to
    zero (pseudo-inverse).
    """
    n, m, c = A.shape
    if min(m, c) == 1:
        return prox_lp(A.reshape(n, -1), tau, 2).reshape(A.shape)
    if m != 2:
        U, s, Vh = np.linalg.svd(A, full_matrices=False)
        return np.einsum("nij,nj,njk->nik", U, prox_lp(s, tau, p), Vh)
    lam_max, lam_min, cs, sn = _gram_eig2(A)
    s = np.sqrt(np.stack([lam_max, lam_min], axis=1))
    shat = prox_lp(s, tau, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(s > 0, shat / s, 0.0)
    f1, f2 = f[:, 0], f[:, 1]
    w11 = f1 * cs * cs + f2 * sn * sn
    w22 = f1 * sn * sn + f2 * cs * cs
    w12 = (f1 - f2) * cs * sn
    r1, r2 = A[:, 0, :], A[:, 1, :]
    out = np.empty_like(A)
    out[:, 0, :] = w11[:, None] * r1 + w12[:, None] * r2
    out[:, 1, :] = w12[:, None] * r1 + w22[:, None] * r2
    return out


def prox_schatten(B, tau, p):
    """Prox of ``tau * ||.||_{S^p}`` for a ``C x M`` matrix (or a batch of them).

    Singular values are replaced by their l^p prox, singular vectors kept.
    """
    if p not in (1, 2, INF):
        raise UnsupportedNormError(f"Schatten exponent {p} not supported")
    B = np.asarray(B, dtype=np.float64)
    single = B.ndim == 2
    batch = B[None] if single else B.reshape((-1,) + B.shape[-2:])
    out = _schatten_rows(np.ascontiguousarray(batch.transpose(0, 2, 1)), tau, p).transpose(0, 2, 1)
    return out[0] if single else out.reshape(B.shape)


def _blocks(A, spec):
    """Per-pixel blocks in (pixel, middle, inner) order, with the inverse transpose."""
    inner, middle, outer = spec.axes
    perm = (outer, middle, inner)
    return A.transpose(perm), np.argsort(perm)


def _check_tau(tau):
    if not np.all(np.asarray(tau) > 0):
        raise ContractError(f"step weight must be positive, got {tau}")


def prox_collab(A, tau, spec):
    """Proximal operator of ``tau * ||.||`` for a collaborative norm.

    Implemented for norms whose outer reduction is l1 over pixels with inner
    pair (p, q) in {(1,1), (2,1), (2,2), (inf,1), (inf,2), (inf,inf), (2,inf)}
    in either (col, der) order, and for ``(S^1, l^1)`` and ``(S^inf, l^1)``.
    """
    A = as_grad(A)
    _check_tau(tau)
    if spec.family == "schatten":
        p, q = spec.exponents
        if q != 1 or p not in (1, INF):
            raise UnsupportedNormError(f"no closed-form prox for {spec}")
        return _schatten_rows(A, tau, p)
    p, q, r = spec.exponents
    if r != 1 or spec.ordering[2] != "pix":
        raise UnsupportedNormError(f"no closed-form prox for {spec}")
    T, inv = _blocks(A, spec)
    if (p, q) == (1, 1):
        return np.sign(A) * np.maximum(np.abs(A) - tau, 0.0)
    if (p, q) == (2, 1):
        out = prox_lp(T, tau, 2)
    elif (p, q) == (2, 2):
        out = prox_lp(T.reshape(T.shape[0], -1), tau, 2).reshape(T.shape)
    elif (p, q) == (INF, 1):
        out = prox_lp(T, tau, INF)
    elif (p, q) == (INF, INF):
        out = prox_lp(T.reshape(T.shape[0], -1), tau, INF).reshape(T.shape)
    elif (p, q) == (INF, 2):
        t, inside = _linf2_levels(T, tau)
        out = np.sign(T) * np.minimum(np.abs(T), t[..., None])
        out[inside] = 0.0
    elif (p, q) == (2, INF):
        out = prox_inner_l2(T, tau, dual_prox_linf)
    else:
        raise UnsupportedNormError(f"no closed-form prox for {spec}")
    return np.ascontiguousarray(out.transpose(inv))


def project_dual_ball(A, spec, radius=1.0):
    """Projection onto ``{B : ||B||_* <= radius}`` for the dual of `spec`.

    Available for the same norms as :func:`prox_collab`.
    """
    A = as_grad(A)
    _check_tau(radius)
    if spec.family == "schatten":
        p, q = spec.exponents
        if q != 1 or p not in (1, INF):
            raise UnsupportedNormError(f"no dual-ball projection for {spec}")
        U, s, Vh = np.linalg.svd(A, full_matrices=False)
        if p == 1:
            s_proj = np.minimum(s, radius)
        else:
            s_proj = project_l1_ball(s, radius)
        return np.einsum("nij,nj,njk->nik", U, s_proj, Vh)
    p, q, r = spec.exponents
    if r != 1 or spec.ordering[2] != "pix":
        raise UnsupportedNormError(f"no dual-ball projection for {spec}")
    T, inv = _blocks(A, spec)
    sign, mag = np.sign(T), np.abs(T)
    if (p, q) == (1, 1):
        return np.clip(A, -radius, radius)
    if (p, q) == (2, 1):
        n = np.sqrt(np.square(T).sum(axis=-1, keepdims=True))
        out = T / np.maximum(n / radius, 1.0)
    elif (p, q) == (2, 2):
        n = np.sqrt(np.square(T).sum(axis=(1, 2), keepdims=True))
        out = T / np.maximum(n / radius, 1.0)
    elif (p, q) == (INF, 1):
        out = sign * project_l1_ball(mag, radius)
    elif (p, q) == (INF, INF):
        out = sign * project_l11_ball(mag, radius)
    elif (p, q) == (INF, 2):
        out = project_l12_ball(T, radius)
    elif (p, q) == (2, INF):
        out = project_l21_ball(T, radius)
    else:
        raise UnsupportedNormError(f"no dual-ball projection for {spec}")
    return np.ascontiguousarray(out.transpose(inv))


def prox_objective(Y, A, tau, spec):
    """``0.5 ||Y - A||^2 + tau ||Y||``."""
    return 0.5 * float(np.square(Y - A).sum()) + tau * eval_norm(Y, spec)


def prox_oracle(A, tau, spec, iters=20000, step=1.0, schedule="1/t"):
    """Reference prox by subgradient descent (tests only; small tensors).

    Steps are ``step / t`` by default, the classical choice for the
    1-strongly convex prox objective; ``schedule="1/sqrt(t)"`` gives
    ``step / sqrt(t)``. The best iterate seen is returned. Intended accuracy
    is about 1e-4 in objective value.
    """
    A = as_grad(A)
    if tau == 0:
        return A.copy()
    if schedule not in ("1/t", "1/sqrt(t)"):
        raise ContractError(f"unknown step schedule {schedule!r}")
    Y = A.copy()
    best, best_val = Y.copy(), prox_objective(Y, A, tau, spec)
    for t in range(1, iters + 1):
        g = Y - A
        if np.any(Y):
            g = g + tau * dual_witness(Y, spec)
        Y = Y - (step / (t if schedule == "1/t" else np.sqrt(t))) * g
        val = prox_objective(Y, A, tau, spec)
        if val < best_val:
            best, best_val = Y.copy(), val
    return best


__all__ = [
    "dual_prox_l1",
    "dual_prox_l2",
    "dual_prox_linf",
    "l1_threshold",
    "lp",
    "project_dual_ball",
    "project_l11_ball",
    "project_l12_ball",
    "project_l1_ball",
    "project_l21_ball",
    "prox_collab",
    "prox_inner_l2",
    "prox_lp",
    "prox_objective",
    "prox_oracle",
    "prox_schatten",
]
