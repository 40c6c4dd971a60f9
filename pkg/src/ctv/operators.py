"""Linear operators: forward-difference gradient, FFT blur and color transforms."""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import ContractError
from .tensors import as_grad, as_image


def gradient(u):
    """Forward differences with Neumann boundary.

    Parameters
    ----------
    u : ndarray, shape (height, width, C)

    Returns
    -------
    ndarray, shape (height * width, 2, C)
        ``[:, 0]`` horizontal differences (0 in the last column), ``[:, 1]``
        vertical differences (0 in the last row).
    """
    u = as_image(u)
    h, w, c = u.shape
    out = np.zeros((h, w, 2, c))
    out[:, :-1, 0] = u[:, 1:] - u[:, :-1]
    out[:-1, :, 1] = u[1:] - u[:-1]
    return out.reshape(h * w, 2, c)


def gradient_adjoint(p, shape):
    """Adjoint of :func:`gradient` (negative discrete divergence).

    Parameters
    ----------
    p : ndarray, shape (height * width, 2, C)
    shape : tuple
        ``(height, width)`` of the image grid.
    """
    p = as_grad(p)
    h, w = shape[:2]
    if p.shape[0] != h * w or p.shape[1] != 2:
        raise ContractError(f"tensor of shape {p.shape} does not match grid {h}x{w}")
    px = p[:, 0].reshape(h, w, -1)
    py = p[:, 1].reshape(h, w, -1)
    out = np.zeros((h, w, p.shape[2]))
    out[:, :-1] -= px[:, :-1]
    out[:, 1:] += px[:, :-1]
    out[:-1] -= py[:-1]
    out[1:] += py[:-1]
    return out


@dataclass(frozen=True)
class GradientOperator:
    """The pair ``(K, K^T)`` for the forward-difference gradient on a fixed grid."""

    shape: tuple

    def __call__(self, u):
        return gradient(u)

    def adjoint(self, p):
        return gradient_adjoint(p, self.shape)

    @property
    def norm(self):
        return operator_norm_bound(self)


@dataclass(frozen=True)
class IdentityOperator:
    """Identity map on images, viewed as a one-derivative tensor."""

    shape: tuple

    def __call__(self, u):
        u = as_image(u)
        return u.reshape(-1, 1, u.shape[2]).copy()

    def adjoint(self, p):
        p = as_grad(p)
        return p.reshape(self.shape[0], self.shape[1], p.shape[2]).copy()

    @property
    def norm(self):
        return 1.0


def operator_norm_bound(op):
    """Upper bound on the operator norm used to set PDHG steps.

    ``sqrt(8)`` for the forward-difference gradient, 1 for the identity.
    Other operators fall back to :func:`power_iteration`.
    """
    if isinstance(op, GradientOperator):
        return math.sqrt(8.0)
    if isinstance(op, IdentityOperator):
        return 1.0
    return power_iteration(op, op.shape)


def power_iteration(op, shape, channels=1, iters=200, seed=0):
    """Estimate ``||K||`` by power iteration on ``K^T K``."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((shape[0], shape[1], channels))
    u /= np.linalg.norm(u)
    est = 0.0
    for _ in range(iters):
        v = op.adjoint(op(u))
        est = np.linalg.norm(v)
        if est == 0:
            return 0.0
        u = v / est
    return math.sqrt(est)


@dataclass(frozen=True)
class BlurKernel:
    """Normalized, centered convolution kernel on a ``(2s+1) x (2s+1)`` grid."""

    taps: np.ndarray = field(repr=False)
    sigma: float = 0.0

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1] or taps.shape[0] % 2 == 0:
            raise ContractError("kernel taps must be a square odd-sized grid")
        if abs(taps.sum() - 1.0) > 1e-12:
            raise ContractError("kernel taps must sum to 1")
        object.__setattr__(self, "taps", taps)

    @property
    def radius(self):
        return self.taps.shape[0] // 2

    @classmethod
    def gaussian(cls, sigma):
        """Gaussian truncated at radius ``ceil(3 sigma)`` and renormalized."""
        if sigma < 0:
            raise ContractError("sigma must be nonnegative")
        if sigma == 0:
            return cls.identity()
        r = int(math.ceil(3 * sigma))
        x = np.arange(-r, r + 1)
        g = np.exp(-(x**2) / (2.0 * sigma**2))
        taps = np.outer(g, g)
        return cls(taps / taps.sum(), float(sigma))

    @classmethod
    def identity(cls):
        return cls(np.ones((1, 1)), 0.0)


def _kernel_key(kernel):
    return kernel.taps.tobytes(), kernel.taps.shape


@lru_cache(maxsize=16)
def _transfer(key, shape):
    raw, kshape = key
    taps = np.frombuffer(raw).reshape(kshape)
    h, w = shape
    r = kshape[0] // 2
    if 2 * r + 1 > min(h, w):
        raise ContractError(f"kernel of radius {r} too large for a {h}x{w} image")
    pad = np.zeros((h, w))
    pad[: 2 * r + 1, : 2 * r + 1] = taps
    pad = np.roll(pad, (-r, -r), axis=(0, 1))
    return np.fft.rfft2(pad)


def transfer_function(kernel, shape):
    """Real-FFT transform of the kernel centered at the origin of a ``shape`` grid."""
    return _transfer(_kernel_key(kernel), tuple(shape[:2]))


def apply_blur(u, kernel):
    """Channelwise circular convolution ``phi * u`` via the FFT."""
    u = as_image(u)
    H = transfer_function(kernel, u.shape)
    U = np.fft.rfft2(u, axes=(0, 1))
    return np.fft.irfft2(U * H[..., None], s=u.shape[:2], axes=(0, 1))


def apply_blur_adjoint(u, kernel):
    """Correlation with the kernel, the adjoint of :func:`apply_blur`."""
    u = as_image(u)
    H = transfer_function(kernel, u.shape)
    U = np.fft.rfft2(u, axes=(0, 1))
    return np.fft.irfft2(U * np.conj(H)[..., None], s=u.shape[:2], axes=(0, 1))


def prox_deblur_fidelity(u, f, kernel, tau_lambda):
    """Prox of ``(lambda/2) ||phi * u - f||^2`` with step ``tau``.

    Solved in the frequency domain:
    ``F^-1[(F(u) + tl conj(F(phi)) F(f)) / (1 + tl |F(phi)|^2)]``.
    """
    u = as_image(u)
    f = as_image(f)
    H = transfer_function(kernel, u.shape)[..., None]
    U = np.fft.rfft2(u, axes=(0, 1))
    Fh = np.fft.rfft2(f, axes=(0, 1))
    out = (U + tau_lambda * np.conj(H) * Fh) / (1.0 + tau_lambda * np.abs(H) ** 2)
    return np.fft.irfft2(out, s=u.shape[:2], axes=(0, 1))


def circular_convolve_direct(u, taps):
    """Spatial-domain circular convolution (slow; reference for tests)."""
    u = as_image(u)
    r = taps.shape[0] // 2
    out = np.zeros_like(u)
    for a in range(-r, r + 1):
        for b in range(-r, r + 1):
            out += taps[a + r, b + r] * np.roll(u, (a, b), axis=(0, 1))
    return out


# sRGB primaries, D65 white
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE = _RGB_TO_XYZ.sum(axis=1)
_EPS = (6.0 / 29.0) ** 3


def _srgb_to_linear(c):
    return np.where(c <= 0.04045, c / 12.92, np.sign(c) * ((np.abs(c) + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c):
    return np.where(
        c <= 0.0031308, 12.92 * c, np.sign(c) * (1.055 * np.abs(c) ** (1 / 2.4) - 0.055)
    )


def _f(t):
    return np.where(t > _EPS, np.cbrt(t), t / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)


def _finv(t):
    return np.where(t > 6.0 / 29.0, t**3, 3 * (6.0 / 29.0) ** 2 * (t - 4.0 / 29.0))


def rgb_to_lab(u):
    """sRGB in [0, 255] to CIE L*a*b* (D65). Out-of-gamut values are not clamped."""
    u = as_image(u, channels=3)
    xyz = _srgb_to_linear(u / 255.0) @ _RGB_TO_XYZ.T
    fx, fy, fz = (_f(xyz[..., i] / _WHITE[i]) for i in range(3))
    return np.stack([116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)], axis=-1)


def lab_to_rgb(u):
    """CIE L*a*b* (D65) to sRGB in [0, 255]; inverse of :func:`rgb_to_lab`."""
    u = as_image(u, channels=3)
    fy = (u[..., 0] + 16) / 116
    fx = fy + u[..., 1] / 500
    fz = fy - u[..., 2] / 200
    xyz = np.stack([_finv(fx) * _WHITE[0], _finv(fy) * _WHITE[1], _finv(fz) * _WHITE[2]], axis=-1)
    return 255.0 * _linear_to_srgb(xyz @ _XYZ_TO_RGB.T)
