"""Collaborative norms on ``(N, M, C)`` gradient tensors.

A collaborative norm applies one norm along each tensor dimension in a fixed
order. Two families are supported:

* mixed norms ``l^{p,q,r}(a, b, c)``: ``l^p`` along dimension ``a`` first,
  then ``l^q`` along ``b``, then ``l^r`` along ``c``;
* Schatten norms ``(S^p, l^q)``: the Schatten-p norm of every per-pixel
  derivative-by-channel matrix, followed by ``l^q`` over pixels.

Exponents are restricted to 1, 2 and infinity.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .tensors import COL, DER, PIX, as_grad, inner_product

INF = np.inf
LABELS = {"pix": PIX, "der": DER, "col": COL}
DEFAULT_ORDERING = ("col", "der", "pix")
_CONJUGATE = {1: INF, 2: 2, INF: 1}
_TOKENS = {"1": 1, "2": 2, "inf": INF, "∞": INF}


def conjugate_exponent(p):
    """Hölder conjugate of 1, 2 or infinity."""
    return _CONJUGATE[p]


def _exponent(value):
    if isinstance(value, str):
        try:
            return _TOKENS[value.strip().lower()]
        except KeyError:
            raise ContractError(f"unknown exponent token {value!r}") from None
    if value in (1, 2):
        return int(value)
    if value == INF:
        return INF
    raise ContractError(f"exponent must be 1, 2 or inf, got {value!r}")


def _token(p):
    return "inf" if p == INF else str(p)


@dataclass(frozen=True)
class NormSpec:
    """Identifies a collaborative norm.

    Parameters
    ----------
    family : {"lpqr", "schatten"}
    exponents : tuple
        ``(p, q, r)`` for mixed norms, ``(p, q)`` for ``(S^p, l^q)``.
    ordering : tuple of str
        Dimension labels ``"col"``, ``"der"``, ``"pix"``, innermost first.
        Schatten norms always use ``("col", "der", "pix")``.
    """

    family: str
    exponents: tuple
    ordering: tuple = DEFAULT_ORDERING

    def __post_init__(self):
        if self.family not in ("lpqr", "schatten"):
            raise ContractError(f"unknown norm family {self.family!r}")
        exps = tuple(_exponent(e) for e in self.exponents)
        expected = 3 if self.family == "lpqr" else 2
        if len(exps) != expected:
            raise ContractError(f"{self.family} needs {expected} exponents, got {len(exps)}")
        ordering = tuple(self.ordering)
        if sorted(ordering) != sorted(LABELS):
            raise ContractError(f"ordering must permute col, der, pix; got {ordering}")
        if self.family == "schatten" and ordering[2] != "pix":
            raise ContractError("Schatten norms act on the (col, der) matrix of each pixel")
        if self.family == "schatten":
            ordering = DEFAULT_ORDERING
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "ordering", ordering)

    @classmethod
    def lpqr(cls, p, q, r, ordering=DEFAULT_ORDERING):
        if isinstance(ordering, str):
            ordering = tuple(s.strip() for s in ordering.split(","))
        return cls("lpqr", (p, q, r), ordering)

    @classmethod
    def schatten(cls, p, q=1):
        return cls("schatten", (p, q))

    @classmethod
    def parse(cls, text):
        """Parse ``"linf,1,1:col,der,pix"`` or ``"s1,l1"`` style strings."""
        text = text.strip().replace(" ", "")
        head, _, tail = text.partition(":")
        parts = head.split(",")
        ordering = tuple(tail.split(",")) if tail else DEFAULT_ORDERING
        if parts[0][:1].lower() == "s":
            if len(parts) != 2 or parts[1][:1].lower() != "l":
                raise ContractError(f"cannot parse Schatten norm {text!r}")
            return cls("schatten", (parts[0][1:], parts[1][1:]), ordering)
        if parts[0][:1].lower() == "l" and len(parts) == 3:
            return cls("lpqr", (parts[0][1:], parts[1], parts[2]), ordering)
        raise ContractError(f"cannot parse norm {text!r}")

    def __str__(self):
        if self.family == "schatten":
            p, q = self.exponents
            return f"s{_token(p)},l{_token(q)}"
        p, q, r = self.exponents
        return f"l{_token(p)},{_token(q)},{_token(r)}:{','.join(self.ordering)}"

    @property
    def axes(self):
        """Tensor axes in reduction order, innermost first."""
        return tuple(LABELS[label] for label in self.ordering)


def dual_spec(spec):
    """Spec of the dual norm: every exponent replaced by its conjugate."""
    return NormSpec(spec.family, tuple(_CONJUGATE[p] for p in spec.exponents), spec.ordering)


def lp(x, p, axis=-1):
    """Vector l^p norm of `x` along `axis` (p in {1, 2, inf})."""
    if p == 1:
        return np.abs(x).sum(axis=axis)
    if p == 2:
        return np.sqrt(np.square(x).sum(axis=axis))
    return np.abs(x).max(axis=axis)


def _nested(A, spec):
    """Transpose `A` to (outer, middle, inner) axis order."""
    inner, middle, outer = spec.axes
    return A.transpose(outer, middle, inner)


def singular_values(A):
    """Singular values of every ``A[i]`` (``M x C``), sorted descending.

    For two-row (or two-column) blocks the 2x2 Gram matrix is diagonalised in
    closed form; the smaller eigenvalue comes from the Gram determinant via
    the Binet-Cauchy sum of squared 2x2 minors, which avoids cancellation.
    """
    A = as_grad(A)
    n, m, c = A.shape
    if min(m, c) == 1:
        return np.sqrt(np.square(A).sum(axis=(1, 2)))[:, None]
    if min(m, c) != 2:
        return np.linalg.svd(A, compute_uv=False)
    R = A if m == 2 else A.transpose(0, 2, 1)
    lam_max, lam_min, _, _ = _gram_eig2(R)
    return np.sqrt(np.stack([lam_max, lam_min], axis=1))


def _gram_eig2(R):
    """Eigen-decomposition of ``R[i] @ R[i].T`` for ``R`` of shape (N, 2, K).

    Returns the larger and smaller eigenvalue and ``cos``/``sin`` of the angle
    of the leading eigenvector.
    """
    r1, r2 = R[:, 0, :], R[:, 1, :]
    a = np.square(r1).sum(axis=1)
    c = np.square(r2).sum(axis=1)
    b = (r1 * r2).sum(axis=1)
    half_diff = 0.5 * (a - c)
    lam_max = 0.5 * (a + c) + np.hypot(half_diff, b)
    k = R.shape[2]
    det = np.zeros_like(a)
    for i in range(k):
        for j in range(i + 1, k):
            det += np.square(r1[:, i] * r2[:, j] - r1[:, j] * r2[:, i])
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_min = np.where(lam_max > 0, det / lam_max, 0.0)
    lam_min = np.minimum(lam_min, lam_max)
    theta = 0.5 * np.arctan2(2.0 * b, a - c)
    return lam_max, lam_min, np.cos(theta), np.sin(theta)


def pixel_norms(A, spec):
    """Per-pixel inner norms ``||A[i, :, :]||`` when pixels are outermost."""
    A = as_grad(A)
    if spec.family == "schatten":
        return lp(singular_values(A), spec.exponents[0], axis=1)
    if spec.ordering[2] != "pix":
        raise ContractError(f"{spec} is not pixel-separable")
    p, q, _ = spec.exponents
    T = _nested(A, spec)
    return lp(lp(T, p, axis=2), q, axis=1)


def eval_norm(A, spec):
    """Evaluate the collaborative norm of `A`."""
    A = as_grad(A)
    if spec.family == "schatten":
        return float(lp(pixel_norms(A, spec), spec.exponents[1], axis=0))
    p, q, r = spec.exponents
    T = _nested(A, spec)
    return float(lp(lp(lp(T, p, axis=2), q, axis=1), r, axis=0))


def lp_witness(x, p):
    """Dual witness along the last axis: ``<x, w> = ||x||_p``, ``||w||_p* <= 1``.

    The l^inf witness puts the sign of the largest entry at its position,
    breaking ties by lowest index.
    """
    x = np.asarray(x, dtype=np.float64)
    if p == 1:
        return np.sign(x)
    if p == 2:
        n = np.sqrt(np.square(x).sum(axis=-1, keepdims=True))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(n > 0, x / n, 0.0)
    idx = np.argmax(np.abs(x), axis=-1)[..., None]
    w = np.zeros_like(x)
    np.put_along_axis(w, idx, np.sign(np.take_along_axis(x, idx, axis=-1)), axis=-1)
    return w


def dual_witness(A, spec):
    """A tensor `B` in the dual unit ball with ``<A, B> = ||A||``.

    Built by composing per-dimension witnesses: the outer-norm witness of the
    block norms scales each block's own witness.
    """
    A = as_grad(A)
    if not np.any(A):
        raise ContractError("dual witness is undefined for the zero tensor")
    if spec.family == "schatten":
        p, q = spec.exponents
        U, s, Vh = np.linalg.svd(A, full_matrices=False)
        W = np.einsum("nij,nj,njk->nik", U, lp_witness(s, p), Vh)
        z = lp_witness(lp(s, p, axis=1), q)
        return z[:, None, None] * W
    p, q, r = spec.exponents
    T = _nested(A, spec)
    inner = lp(T, p, axis=2)
    middle = lp(inner, q, axis=1)
    B = lp_witness(middle, r)[:, None, None] * lp_witness(inner, q)[:, :, None] * lp_witness(T, p)
    inv = np.argsort([spec.axes[2], spec.axes[1], spec.axes[0]])
    return np.ascontiguousarray(B.transpose(inv))


def check_subdifferential_membership(z, A, spec, tol=1e-10):
    """Whether `z` lies in the subdifferential of the norm at `A`.

    True iff the dual norm of `z` is at most ``1 + tol`` and ``<z, A>``
    matches the norm of `A` within ``tol * max(1, ||A||)``.
    """
    z = as_grad(z)
    A = as_grad(A)
    if z.shape != A.shape:
        raise ContractError(f"shape mismatch: {z.shape} vs {A.shape}")
    value = eval_norm(A, spec)
    if eval_norm(z, dual_spec(spec)) > 1.0 + tol:
        return False
    return abs(inner_product(z, A) - value) <= tol * max(1.0, value)


# Norms with a closed-form proximal operator, as used in the experiments.
L111 = NormSpec.lpqr(1, 1, 1)
L211 = NormSpec.lpqr(2, 1, 1)
L221 = NormSpec.lpqr(2, 2, 1)
LINF11 = NormSpec.lpqr(INF, 1, 1)
LINF21 = NormSpec.lpqr(INF, 2, 1)
LINFINF1 = NormSpec.lpqr(INF, INF, 1)
L2INF1 = NormSpec.lpqr(2, INF, 1, ("der", "col", "pix"))
S1L1 = NormSpec.schatten(1, 1)
SINFL1 = NormSpec.schatten(INF, 1)

EXPERIMENT_NORMS = (L111, L211, L221, LINF11, LINF21, LINFINF1, L2INF1, S1L1, SINFL1)

# Every local vectorial TV listed in the survey table, for norm evaluation.
CATALOG = {
    "anisotropic-channelwise": NormSpec.lpqr(1, 1, 1, ("der", "pix", "col")),
    "channelwise": NormSpec.lpqr(2, 1, 1, ("der", "pix", "col")),
    "global-l2": NormSpec.lpqr(2, 1, 2, ("der", "pix", "col")),
    "global-l2-anisotropic": NormSpec.lpqr(1, 1, 2, ("der", "pix", "col")),
    "frobenius": NormSpec.lpqr(2, 2, 1, ("der", "col", "pix")),
    "anisotropic-color-l2": NormSpec.lpqr(2, 1, 1, ("col", "der", "pix")),
    "l1-then-l2": NormSpec.lpqr(1, 2, 1, ("der", "col", "pix")),
    "strong-coupling": NormSpec.lpqr(INF, 1, 1, ("col", "der", "pix")),
    "strong-coupling-l1-der": NormSpec.lpqr(1, INF, 1, ("der", "col", "pix")),
    "isotropic-strong": NormSpec.lpqr(INF, 2, 1, ("col", "der", "pix")),
    "isotropic-max-channel": NormSpec.lpqr(2, INF, 1, ("der", "col", "pix")),
    "supremum": NormSpec.lpqr(INF, INF, 1, ("col", "der", "pix")),
    "nuclear": NormSpec.schatten(1, 1),
    "schatten-2": NormSpec.schatten(2, 1),
    "spectral": NormSpec.schatten(INF, 1),
}
