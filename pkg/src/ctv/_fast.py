"""Compiled per-pixel kernels for the PDHG inner loop (optional, needs numba).

The numpy implementation in :mod:`ctv.prox` and :mod:`ctv.solver` is the
reference; these kernels fuse the gradient, the collaborative prox and the
dual update into a single pass over the pixels for the two-derivative case.
"""

import os
from functools import lru_cache

import numpy as np

from .norms import INF

try:
    if os.environ.get("CTV_NO_NUMBA"):
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - exercised when numba is absent
    njit = None

AVAILABLE = njit is not None

_CODES = {(1, 1): 0, (2, 1): 1, (2, 2): 2, (INF, 1): 3, (INF, INF): 4, (INF, 2): 5, (2, INF): 6}


def prox_code(spec):
    """``(code, inner_is_col)`` for the compiled prox, or None if unsupported."""
    if spec.family == "schatten":
        p, q = spec.exponents
        if q != 1 or p not in (1, INF):
            return None
        return (7 if p == 1 else 8), True
    p, q, r = spec.exponents
    if r != 1 or spec.ordering[2] != "pix" or (p, q) not in _CODES:
        return None
    return _CODES[(p, q)], spec.ordering[0] == "col"


if AVAILABLE:

    @njit(cache=True, inline="always")
    def _threshold(x, n, radius, buf):
        # simplex threshold of x[:n] >= 0 for the l1 ball of the given radius;
        # max over k of (S_k - radius)/k, evaluated at the end of every tie
        # group (entries >= x[i]) so that no sorting or branching is needed
        theta = 0.0
        for i in range(n):
            xi = x[i]
            cnt = 0.0
            sm = 0.0
            for j in range(n):
                w = 1.0 if x[j] >= xi else 0.0
                cnt += w
                sm += w * x[j]
            theta = max(theta, (sm - radius) / cnt)
        return theta

    @njit(cache=True, inline="always")
    def _linf2(B, G, L, tau, S, h, kk):
        # prox of tau * sqrt(sum_g ||B[g]||_inf^2) in place; S[g, i] holds the
        # sum of the entries of row g not smaller than |B[g, i]|, kk the count
        dual = 0.0
        cnt = kk
        for g in range(G):
            row = 0.0
            for i in range(L):
                ai = abs(B[g, i])
                c = 0.0
                sm = 0.0
                for j in range(L):
                    aj = abs(B[g, j])
                    w = 1.0 if aj >= ai else 0.0
                    c += w
                    sm += w * aj
                S[g, i] = sm
                cnt[g, i] = c
                row += ai
            dual += row * row
        if np.sqrt(dual) <= tau:
            for g in range(G):
                for i in range(L):
                    B[g, i] = 0.0
            return
        s = 0.0
        target = 1.0 / tau
        for _ in range(100):
            gg = 0.0
            dg = 0.0
            for g in range(G):
                best = 0.0
                bk = 1.0
                for i in range(L):
                    val = S[g, i] / (1.0 + cnt[g, i] * s)
                    if val > best:
                        best = val
                        bk = cnt[g, i]
                gg += best * best
                dg -= bk * best * best / (1.0 + bk * s)
            gn = np.sqrt(gg)
            dg /= gn
            F = 1.0 / gn
            dF = -dg / (gn * gn)
            step = max((target - F) / dF, 0.0)
            s = s + step
            if not step > 1e-15 * max(s, 1e-300):
                break
        for g in range(G):
            best = 0.0
            for i in range(L):
                best = max(best, S[g, i] / (1.0 + cnt[g, i] * s))
            t = s * best
            for i in range(L):
                B[g, i] = min(max(B[g, i], -t), t)

    @njit(cache=True, inline="always")
    def _prox_block(B, G, L, tau, code, buf, x, S, h, kk):
        if code == 0:
            for g in range(G):
                for i in range(L):
                    v = B[g, i]
                    B[g, i] = np.copysign(max(abs(v) - tau, 0.0), v)
        elif code == 1:
            for g in range(G):
                n = 0.0
                for i in range(L):
                    n += B[g, i] ** 2
                n = np.sqrt(n)
                f = max(1.0 - tau / max(n, tau), 0.0)
                for i in range(L):
                    B[g, i] *= f
        elif code == 2:
            n = 0.0
            for g in range(G):
                for i in range(L):
                    n += B[g, i] ** 2
            n = np.sqrt(n)
            f = max(1.0 - tau / max(n, tau), 0.0)
            for g in range(G):
                for i in range(L):
                    B[g, i] *= f
        elif code == 3:
            for g in range(G):
                for i in range(L):
                    x[i] = abs(B[g, i])
                t = _threshold(x, L, tau, buf)
                for i in range(L):
                    B[g, i] = min(max(B[g, i], -t), t)
        elif code == 4:
            for g in range(G):
                for i in range(L):
                    x[g * L + i] = abs(B[g, i])
            t = _threshold(x, G * L, tau, buf)
            for g in range(G):
                for i in range(L):
                    B[g, i] = min(max(B[g, i], -t), t)
        elif code == 5:
            _linf2(B, G, L, tau, S, h, kk)
        elif code == 6:
            for g in range(G):
                n = 0.0
                for i in range(L):
                    n += B[g, i] ** 2
                x[g] = np.sqrt(n)
                h[g] = x[g]
            t = _threshold(x, G, tau, buf)
            for g in range(G):
                n = h[g]
                f = min(n, t) / n if n > 0 else 0.0
                for i in range(L):
                    B[g, i] *= f
        else:
            _schatten(B, L, tau, code, buf, x)

    @njit(cache=True, inline="always")
    def _schatten(B, L, tau, code, buf, x):
        a = 0.0
        c = 0.0
        b = 0.0
        for i in range(L):
            a += B[0, i] ** 2
            c += B[1, i] ** 2
            b += B[0, i] * B[1, i]
        lam_max = 0.5 * (a + c) + np.hypot(0.5 * (a - c), b)
        det = 0.0
        for i in range(L):
            for j in range(i + 1, L):
                det += (B[0, i] * B[1, j] - B[0, j] * B[1, i]) ** 2
        lam_min = det / lam_max if lam_max > 0 else 0.0
        if lam_min > lam_max:
            lam_min = lam_max
        theta = 0.5 * np.arctan2(2.0 * b, a - c)
        cs = np.cos(theta)
        sn = np.sin(theta)
        s1 = np.sqrt(lam_max)
        s2 = np.sqrt(lam_min)
        if code == 7:
            t1 = max(s1 - tau, 0.0)
            t2 = max(s2 - tau, 0.0)
        else:
            x[0] = s1
            x[1] = s2
            t = _threshold(x, 2, tau, buf)
            t1 = min(s1, t)
            t2 = min(s2, t)
        f1 = t1 / s1 if s1 > 0 else 0.0
        f2 = t2 / s2 if s2 > 0 else 0.0
        w11 = f1 * cs * cs + f2 * sn * sn
        w22 = f1 * sn * sn + f2 * cs * cs
        w12 = (f1 - f2) * cs * sn
        for i in range(L):
            r1 = B[0, i]
            r2 = B[1, i]
            B[0, i] = w11 * r1 + w12 * r2
            B[1, i] = w12 * r1 + w22 * r2

    @njit(cache=True, inline="always")
    def _dual_update_impl(u, u1, q, sigma, CODE, ROWS):
        H, W, C = u.shape
        q1 = np.empty_like(q)
        gout = np.empty_like(q)
        tau = 1.0 / sigma
        blk = np.empty((2, C))
        dK = np.empty((2, C))
        if ROWS:
            G, L = 2, C
        else:
            G, L = C, 2
        B = np.empty((G, L))
        m = max(2 * C, 2)
        buf = np.empty(m)
        x = np.empty(m)
        S = np.empty((G, L))
        h = np.empty(G)
        kk = np.empty((G, L))
        total = 0.0
        for r in range(H):
            for c in range(W):
                n = r * W + c
                for k in range(C):
                    a0 = 0.0
                    b0 = 0.0
                    a1 = 0.0
                    b1 = 0.0
                    if c < W - 1:
                        a0 = u[r, c + 1, k] - u[r, c, k]
                        b0 = u1[r, c + 1, k] - u1[r, c, k]
                    if r < H - 1:
                        a1 = u[r + 1, c, k] - u[r, c, k]
                        b1 = u1[r + 1, c, k] - u1[r, c, k]
                    blk[0, k] = 2.0 * b0 - a0
                    blk[1, k] = 2.0 * b1 - a1
                    dK[0, k] = a0 - b0
                    dK[1, k] = a1 - b1
                for j in range(2):
                    for k in range(C):
                        if ROWS:
                            B[j, k] = blk[j, k] + q[n, j, k] * tau
                        else:
                            B[k, j] = blk[j, k] + q[n, j, k] * tau
                _prox_block(B, G, L, tau, CODE, buf, x, S, h, kk)
                for j in range(2):
                    for k in range(C):
                        gv = B[j, k] if ROWS else B[k, j]
                        gout[n, j, k] = gv
                        q1[n, j, k] = q[n, j, k] + sigma * (blk[j, k] - gv)
                        total += abs(gv - blk[j, k] - dK[j, k])
        return q1, gout, total

    @njit(cache=True, inline="always")
    def _prox_batch_impl(A, tau, CODE, ROWS):
        N, M, C = A.shape
        if ROWS:
            G, L = M, C
        else:
            G, L = C, M
        out = np.empty_like(A)
        B = np.empty((G, L))
        m = max(M * C, 2)
        buf = np.empty(m)
        x = np.empty(m)
        S = np.empty((G, L))
        h = np.empty(G)
        kk = np.empty((G, L))
        for n in range(N):
            for j in range(M):
                for k in range(C):
                    if ROWS:
                        B[j, k] = A[n, j, k]
                    else:
                        B[k, j] = A[n, j, k]
            _prox_block(B, G, L, tau, CODE, buf, x, S, h, kk)
            for j in range(M):
                for k in range(C):
                    out[n, j, k] = B[j, k] if ROWS else B[k, j]
        return out

    @njit(cache=True)
    def _dual_update_generic(u, u1, q, sigma, code, rows):
        return _dual_update_impl(u, u1, q, sigma, code, rows)

    @njit(cache=True)
    def _prox_batch_generic(A, tau, code, rows):
        return _prox_batch_impl(A, tau, code, rows)

    @lru_cache(maxsize=None)
    def kernels(code, rows):
        """Kernels specialized to one prox; the constants let dead branches fold.

        Closures cannot be cached on disk, so each costs a few seconds of
        compilation per process. That pays off only on large images.
        """
        CODE = code
        ROWS = rows

        @njit
        def dual_update(u, u1, q, sigma):
            return _dual_update_impl(u, u1, q, sigma, CODE, ROWS)

        @njit
        def prox_batch(A, tau):
            return _prox_batch_impl(A, tau, CODE, ROWS)

        return dual_update, prox_batch

    # entries above which the specialized kernels are compiled
    SPECIALIZE_SIZE = 200_000

    def dual_update(u, u1, q, sigma, code, inner_is_col):
        """Fused ``K u_bar``, collaborative prox and dual ascent.

        Returns ``q1``, ``g`` and the summed absolute dual residual.
        """
        rows = bool(inner_is_col or code >= 7)
        if u.size >= SPECIALIZE_SIZE:
            return kernels(code, rows)[0](u, u1, q, sigma)
        return _dual_update_generic(u, u1, q, sigma, code, rows)

    @njit(cache=True)
    def primal_residual(q1, KTq, u, u1, tau):
        """``K^T q1`` and the summed absolute primal residual."""
        H, W, C = u.shape
        out = np.zeros((H, W, C))
        total = 0.0
        for r in range(H):
            for c in range(W):
                n = r * W + c
                for k in range(C):
                    v = 0.0
                    if c < W - 1:
                        v -= q1[n, 0, k]
                    if c > 0:
                        v += q1[n - 1, 0, k]
                    if r < H - 1:
                        v -= q1[n, 1, k]
                    if r > 0:
                        v += q1[n - W, 1, k]
                    out[r, c, k] = v
                    total += abs((u[r, c, k] - u1[r, c, k]) / tau - (KTq[r, c, k] - v))
        return out, total

    def prox_block_batch(A, tau, spec):
        """Compiled prox on an ``(N, 2, C)`` tensor (used to cross-check kernels)."""
        A = np.ascontiguousarray(A, dtype=np.float64)
        if A.ndim != 3 or A.shape[1] != 2:
            raise ValueError("compiled prox needs an (N, 2, C) tensor")
        code, inner_is_col = prox_code(spec)
        return _prox_batch_generic(A, float(tau), code, bool(inner_is_col or code >= 7))
