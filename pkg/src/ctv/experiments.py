"""Benchmark setups: degraded observations and per-norm lambda searches.

Observations are rounded to 8-bit values, as if the degraded image had been
saved to disk before restoring it.
"""

import logging

import numpy as np

from .masks import scribble_mask
from .norms import EXPERIMENT_NORMS
from .operators import BlurKernel, apply_blur
from .problems import (
    ProblemSpec,
    add_gaussian_noise,
    add_salt_pepper,
    chroma_variance,
    make_synthetic_wave_edge,
    quantize,
    solve,
    wave_edge_background,
)
from .tuning import best_lambda

log = logging.getLogger(__name__)

# starting points of the lambda search per task
LAMBDA_START = {"denoise-l2": 0.03, "denoise-l1": 1.0, "deblur": 20.0, "inpaint": 50.0}


def gaussian_denoising(ref, sigma=30.0, seed=0):
    """Denoising problem with additive Gaussian noise."""
    return ProblemSpec("denoise-l2", quantize(add_gaussian_noise(ref, sigma, seed)), 0.0)


def impulse_denoising(ref, alpha=0.15, seed=0):
    """Denoising problem with salt-and-pepper noise and the l1 fidelity."""
    return ProblemSpec("denoise-l1", quantize(add_salt_pepper(ref, alpha, seed)), 0.0)


def deblurring(ref, blur_sigma=2.0, noise_sigma=0.5, seed=0):
    """Gaussian blur followed by a little Gaussian noise."""
    kernel = BlurKernel.gaussian(blur_sigma)
    f = quantize(add_gaussian_noise(apply_blur(ref, kernel), noise_sigma, seed))
    return ProblemSpec("deblur", f, 0.0, kernel=kernel)


def inpainting(ref, mask=None, seed=0, colorspace="rgb"):
    """Inpainting problem with a scribble mask (generated from `seed` if not given)."""
    if mask is None:
        mask = scribble_mask(ref.shape, seed=seed)
    return ProblemSpec("inpaint", quantize(ref) * mask[..., None], 0.0, colorspace, mask=mask)


def compare_norms(problem, ref, norms=EXPERIMENT_NORMS, lam0=None, **search):
    """Best-PSNR lambda search for each norm.

    Returns
    -------
    dict
        ``str(norm) -> LambdaSearch``.
    """
    if lam0 is None:
        lam0 = LAMBDA_START[problem.kind]
    out = {}
    for norm in norms:
        out[str(norm)] = best_lambda(problem, norm, ref, lam0=lam0, **search)
        lam, value = out[str(norm)].best
        log.info("%s: best lambda %.4g, PSNR %.2f dB", norm, lam, value)
    return out


def wave_edge_suppression(norms, lam=0.01, size=96, ramp=24, **solver_kwargs):
    """Fraction of the background chroma variance left after denoising.

    The synthetic wave-edge image is used as the observation itself.

    Returns
    -------
    dict
        ``str(norm) -> ratio`` of output to input chroma variance on the background.
    """
    f = make_synthetic_wave_edge(size=size, ramp=ramp)
    bg = wave_edge_background(size)
    before = chroma_variance(f, bg)
    out = {}
    for norm in norms:
        u, _ = solve(ProblemSpec("denoise-l2", f, lam), norm, **solver_kwargs)
        out[str(norm)] = chroma_variance(u, bg) / before
    return out


def best_values(searches):
    """``str(norm) -> best PSNR`` from :func:`compare_norms` output."""
    return {k: v.best[1] for k, v in searches.items()}


def ranking(values):
    """Norm names sorted by decreasing value."""
    return sorted(values, key=values.get, reverse=True)


def margin(values, name):
    """How far `name` is ahead of the best other entry (negative if behind)."""
    others = [v for k, v in values.items() if k != name]
    return values[name] - max(others) if others else np.inf
