"""Fidelity terms, degradations and quality metrics for the four restoration tasks."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .operators import (
    BlurKernel,
    GradientOperator,
    apply_blur,
    lab_to_rgb,
    prox_deblur_fidelity,
    rgb_to_lab,
)
from .solver import SolverConfig, pdhg_solve
from .tensors import as_image

TASKS = ("denoise-l2", "denoise-l1", "deblur", "inpaint")
COLORSPACES = ("rgb", "lab")


@dataclass(frozen=True)
class ProblemSpec:
    """Observed data and fidelity term of a restoration problem.

    Parameters
    ----------
    kind : str
        One of ``denoise-l2``, ``denoise-l1``, ``deblur``, ``inpaint``.
    f : ndarray, shape (height, width, C)
        Observed image.
    lam : float
        Fidelity weight, ``>= 0``.
    colorspace : str
        ``rgb`` or ``lab``; with ``lab`` the solve runs on CIE L*a*b* values.
    kernel : BlurKernel, optional
        Required for ``deblur``.
    mask : ndarray of bool, shape (height, width), optional
        Known pixels (True). Required for ``inpaint``.
    """

    kind: str
    f: np.ndarray
    lam: float
    colorspace: str = "rgb"
    kernel: BlurKernel = None
    mask: np.ndarray = None

    def __post_init__(self):
        if self.kind not in TASKS:
            raise ContractError(f"unknown task {self.kind!r}")
        if self.colorspace not in COLORSPACES:
            raise ContractError(f"unknown colorspace {self.colorspace!r}")
        if not self.lam >= 0:
            raise ContractError("lambda must be nonnegative")
        object.__setattr__(self, "f", as_image(self.f))
        if (self.kind == "deblur") != (self.kernel is not None):
            raise ContractError("a blur kernel is required for deblur and only for deblur")
        if (self.kind == "inpaint") != (self.mask is not None):
            raise ContractError("a mask is required for inpaint and only for inpaint")
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != self.f.shape[:2]:
                raise ContractError(f"mask shape {mask.shape} does not match image {self.f.shape[:2]}")
            if not mask.any():
                raise ContractError("mask needs at least one known pixel")
            object.__setattr__(self, "mask", mask)


def prox_fidelity(spec, u, tau):
    """Closed-form prox of ``tau * G`` for the fidelity term of `spec`."""
    u = as_image(u)
    f, tl = spec.f, tau * spec.lam
    if u.shape != f.shape:
        raise ContractError(f"shape mismatch: {u.shape} vs {f.shape}")
    if spec.kind == "denoise-l2":
        return (u + tl * f) / (1.0 + tl)
    if spec.kind == "denoise-l1":
        d = u - f
        return f + np.sign(d) * np.maximum(np.abs(d) - tl, 0.0)
    if spec.kind == "deblur":
        return prox_deblur_fidelity(u, f, spec.kernel, tl)
    known = spec.mask[..., None]
    return np.where(known, (u + tl * f) / (1.0 + tl), u)


def fidelity_energy(spec, u):
    """Value of the fidelity term ``G(u)``."""
    u = as_image(u)
    d = u - spec.f
    if spec.kind == "denoise-l1":
        return spec.lam * float(np.abs(d).sum())
    if spec.kind == "deblur":
        d = apply_blur(u, spec.kernel) - spec.f
    elif spec.kind == "inpaint":
        d = d * spec.mask[..., None]
    return 0.5 * spec.lam * float(np.square(d).sum())


def initial_guess(spec):
    """Observed data, with zeros on unknown pixels for inpainting."""
    if spec.kind == "inpaint":
        return spec.f * spec.mask[..., None]
    return spec.f.copy()


def to_lab_problem(spec):
    """Same problem with the observed data converted to CIE L*a*b*."""
    return ProblemSpec(spec.kind, rgb_to_lab(spec.f), spec.lam, "lab", spec.kernel, spec.mask)


def solve(spec, norm, config=None, **solver_kwargs):
    """Restore ``spec.f`` with the collaborative norm `norm`.

    For ``colorspace == "lab"`` the data are converted before solving and the
    result converted back, so the returned image is always RGB.

    Returns
    -------
    u : ndarray
    state : SolverState
    """
    work = to_lab_problem(spec) if spec.colorspace == "lab" else spec
    K = GradientOperator(work.f.shape[:2])
    if config is None:
        config = SolverConfig.for_operator(K, **solver_kwargs)
    u, state = pdhg_solve(
        lambda v, tau: prox_fidelity(work, v, tau),
        K,
        norm,
        config,
        initial_guess(work),
        energy=lambda v: fidelity_energy(work, v),
    )
    if spec.colorspace == "lab":
        u = lab_to_rgb(u)
    return u, state


def _generator(seed):
    # Philox is counter-based, so streams are reproducible regardless of scheduling
    return np.random.Generator(np.random.Philox(seed))


def add_gaussian_noise(u, sigma_noise, seed=0):
    """Add i.i.d. ``N(0, sigma_noise^2)`` noise to every entry."""
    u = as_image(u)
    if sigma_noise < 0:
        raise ContractError("noise level must be nonnegative")
    if sigma_noise == 0:
        return u.copy()
    return u + sigma_noise * _generator(seed).standard_normal(u.shape)


def add_salt_pepper(u, alpha, seed=0):
    """Set ``floor(alpha N)`` distinct pixels to black or white in all channels.

    Half of the chosen pixels become 0 and half 255; an odd one out is black.
    """
    u = as_image(u)
    if not 0 <= alpha <= 1:
        raise ContractError(f"alpha must lie in [0, 1], got {alpha}")
    h, w, c = u.shape
    n = h * w
    k = int(math.floor(alpha * n))
    out = u.copy()
    if k == 0:
        return out
    idx = _generator(seed).choice(n, size=k, replace=False)
    flat = out.reshape(n, c)
    n_pepper = k - k // 2
    flat[idx[:n_pepper]] = 0.0
    flat[idx[n_pepper:]] = 255.0
    return out


def quantize(u):
    """Round to the nearest integer and clamp to [0, 255]."""
    return np.clip(np.rint(u), 0.0, 255.0)


def psnr(u, ref, quantized=True):
    """Peak signal-to-noise ratio in dB with peak 255.

    `u` is rounded and clamped to [0, 255] first unless ``quantized=False``.
    Returns ``inf`` for identical images.
    """
    u = as_image(u)
    ref = as_image(ref)
    if u.shape != ref.shape:
        raise ContractError(f"shape mismatch: {u.shape} vs {ref.shape}")
    if quantized:
        u = quantize(u)
    mse = float(np.mean(np.square(u - ref)))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def make_synthetic_wave_edge(size=96, amplitude=8.0, frequency=0.0625, ramp=0):
    """Gray image with a white square surrounded by a colored ripple.

    Each channel carries ``amplitude * w(d) * sin(2 pi frequency d + 2 pi k / 3)``
    with ``d`` the chessboard distance to the square and ``w`` a half-sine
    window over the band ``0 < d < size / 4``. The three phases sum to zero,
    so the ripple changes color but not the channel mean.

    With ``ramp > 0`` the luminance falls linearly from 255 at the square to
    the gray level 128 over `ramp` pixels. If the ramp is steep enough for
    every channel to stay monotone, the ripple costs nothing extra under a
    channel-by-channel TV, which is the case that separates the couplings.

    Returns
    -------
    ndarray, shape (size, size, 3)
    """
    if size < 8 or amplitude < 0 or frequency <= 0 or ramp < 0:
        raise ContractError("size >= 8, amplitude >= 0, frequency > 0 and ramp >= 0 required")
    lo, hi = size // 3, size - size // 3
    y, x = np.mgrid[:size, :size]
    dx = np.maximum(np.maximum(lo - x, x - (hi - 1)), 0)
    dy = np.maximum(np.maximum(lo - y, y - (hi - 1)), 0)
    d = np.maximum(dx, dy).astype(np.float64)
    if ramp > 0:
        lum = 128.0 + 127.0 * np.clip(1.0 - d / ramp, 0.0, 1.0)
    else:
        lum = np.where(d == 0, 255.0, 128.0)
    band = size / 4.0
    env = np.where(d < band, np.sin(np.pi * d / band), 0.0)
    u = np.empty((size, size, 3))
    for k in range(3):
        u[..., k] = lum + amplitude * env * np.sin(2 * np.pi * frequency * d + 2 * np.pi * k / 3)
    return u


def wave_edge_background(size=96):
    """Mask of the background (outside the square) of :func:`make_synthetic_wave_edge`."""
    lo, hi = size // 3, size - size // 3
    mask = np.ones((size, size), dtype=bool)
    mask[lo:hi, lo:hi] = False
    return mask


def chroma_variance(u, region=None):
    """Mean over pixels of the variance across channels.

    Zero exactly when every pixel in `region` is gray.
    """
    u = as_image(u)
    v = u.var(axis=2)
    if region is not None:
        v = v[np.asarray(region, dtype=bool)]
    return float(v.mean())


def grayscale(u):
    """Replace every channel by the channel mean."""
    u = as_image(u)
    return np.repeat(u.mean(axis=2, keepdims=True), u.shape[2], axis=2)
