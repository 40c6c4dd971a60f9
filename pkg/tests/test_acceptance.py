"""Acceptance suite: one PASS/FAIL line per criterion.

Criteria 1-6 are property checks that need no data and run in about two
minutes. Criteria 7-12 (marked ``slow``) restore Kodak images and take well
over an hour on one core; deselect them with ``-m "not slow"``.

Run on its own with ``python tests/test_acceptance.py`` or
``pytest tests/test_acceptance.py -v``; the PASS/FAIL lines are collected in
the terminal summary.
"""

import math
import sys

import numpy as np
import pytest
from scipy import ndimage

from ctv.experiments import (
    compare_norms,
    deblurring,
    gaussian_denoising,
    impulse_denoising,
    inpainting,
    margin,
    wave_edge_suppression,
)
from ctv.imageio import kodak_path, read_image
from ctv.norms import CATALOG, EXPERIMENT_NORMS, L111, L211, LINF11, LINF21, LINFINF1, NormSpec
from ctv.norms import dual_spec, dual_witness, eval_norm
from ctv.operators import BlurKernel, apply_blur, gradient, gradient_adjoint
from ctv.problems import ProblemSpec, fidelity_energy, solve
from ctv.prox import project_dual_ball, prox_collab, prox_objective, prox_oracle
from ctv.singular import SingularVectorRecipe, build_singular_vector, random_profile, random_recipe
from ctv.singular import verify_singular_vector
from ctv.solver import SolverConfig
from ctv.tensors import inner_product

from conftest import random_grad
from oracles import cvx_primal, subgradient_primal

REPORT = []

S1 = "s1,l1"
SINF = "sinf,l1"
L2INF1 = "l2,inf,1:der,col,pix"
NAMES = {
    "l1,1,1:col,der,pix": "l111",
    "l2,1,1:col,der,pix": "l211",
    "l2,2,1:col,der,pix": "l221",
    "linf,1,1:col,der,pix": "linf11",
    "linf,2,1:col,der,pix": "linf21",
    "linf,inf,1:col,der,pix": "linfinf1",
    L2INF1: "l2inf1",
    S1: "S1",
    SINF: "Sinf",
}

# reference PSNR values (dB) for the Kodak setups, keyed by norm string
DENOISE_L2 = {
    "linf,1,1:col,der,pix": 31.13, S1: 31.05, "l2,1,1:col,der,pix": 31.00, L2INF1: 30.97,
    "l2,2,1:col,der,pix": 30.92, "linf,2,1:col,der,pix": 30.91, "linf,inf,1:col,der,pix": 30.71,
    SINF: 30.46, "l1,1,1:col,der,pix": 30.14,
}
DENOISE_L1 = {
    "l1,1,1:col,der,pix": 26.40, "l2,1,1:col,der,pix": 29.33, "l2,2,1:col,der,pix": 28.77,
    "linf,1,1:col,der,pix": 31.67, "linf,2,1:col,der,pix": 28.62, "linf,inf,1:col,der,pix": 29.75,
    L2INF1: 30.50, S1: 30.86, SINF: 27.15,
}
DEBLUR = {
    "l1,1,1:col,der,pix": 32.16, "l2,1,1:col,der,pix": 32.56, "l2,2,1:col,der,pix": 32.76,
    "linf,1,1:col,der,pix": 32.59, "linf,2,1:col,der,pix": 32.71, "linf,inf,1:col,der,pix": 32.45,
    L2INF1: 32.67, S1: 32.77, SINF: 32.57,
}
ISOTROPIC = ["l2,2,1:col,der,pix", S1, SINF, L2INF1]
ANISOTROPIC = ["l1,1,1:col,der,pix", "l2,1,1:col,der,pix", "linf,1,1:col,der,pix"]
SEARCH = {"xatol": 0.05, "max_evals": 10}
# holes start at zero and fill by diffusion; about 3700 iterations reach tol 1e-5 on a 256x256 crop
INPAINT = SolverConfig(max_iters=10000)


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    REPORT.append(line)
    print(line)
    return ok


def finish(n, ok, detail):
    if not report(n, ok, detail):
        pytest.fail(detail, pytrace=False)


def fmt(values):
    return ", ".join(f"{NAMES.get(k, k)} {v:.2f}" for k, v in values.items())


def kodak_or_fail(n, index):
    path = kodak_path(index)
    if not path.exists():
        finish(n, False, f"{path.name} unavailable; run `ctv fetch-kodak` (criterion cannot be evaluated)")
    return read_image(path)


# property suite


def test_criterion_1_prox_oracle():
    rng = np.random.default_rng(101)
    worst_gap, worst_dual, worst_identity = -math.inf, 0.0, 0.0
    for spec in EXPERIMENT_NORMS:
        for _ in range(25):
            A = random_grad(rng, scale=1.0)
            tau = rng.uniform(0.1, 2.0)
            P = prox_collab(A, tau, spec)
            O = prox_oracle(A, tau, spec, iters=5000)
            worst_gap = max(worst_gap, prox_objective(P, A, tau, spec) - prox_objective(O, A, tau, spec))
            worst_dual = max(worst_dual, eval_norm(A - P, dual_spec(spec)) / tau - 1)
            identity = inner_product(A, P) - tau * eval_norm(P, spec) - np.square(P).sum()
            worst_identity = max(worst_identity, abs(identity) / max(1.0, np.square(A).sum()))
    ok = worst_gap <= 1e-4 and worst_dual <= 1e-8 and worst_identity <= 1e-6
    finish(1, ok, f"max objective excess over oracle {worst_gap:.2e} (<= 1e-4), dual-ball excess "
                  f"{worst_dual:.1e} (<= 1e-8), identity residual {worst_identity:.1e} (<= 1e-6)")


def test_criterion_2_moreau():
    rng = np.random.default_rng(102)
    worst = 0.0
    for spec in (LINF11, LINF21, LINFINF1):
        for _ in range(100):
            x = random_grad(rng, scale=rng.uniform(0.1, 10))
            tau = rng.uniform(0.05, 5.0)
            rebuilt = prox_collab(x, tau, spec) + tau * project_dual_ball(x / tau, spec)
            worst = max(worst, np.abs(rebuilt - x).max())
    finish(2, worst < 1e-10, f"max reconstruction residual {worst:.1e} (< 1e-10)")


def test_criterion_3_dual_witness():
    rng = np.random.default_rng(103)
    specs = list(EXPERIMENT_NORMS) + list(CATALOG.values())
    worst_rel, worst_ball = 0.0, 0.0
    for spec in specs:
        for _ in range(50):
            A = random_grad(rng, scale=rng.uniform(0.1, 10))
            B = dual_witness(A, spec)
            value = eval_norm(A, spec)
            worst_rel = max(worst_rel, abs(inner_product(A, B) - value) / value)
            worst_ball = max(worst_ball, eval_norm(B, dual_spec(spec)) - 1)
    ok = worst_rel <= 1e-10 and worst_ball <= 1e-12
    finish(3, ok, f"{len(specs)} norms, max relative pairing error {worst_rel:.1e} (<= 1e-10), "
                  f"max dual norm excess {worst_ball:.1e} (<= 1e-12)")


def test_criterion_4_adjoints():
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(50):
        h, w = (int(v) for v in rng.integers(1, 65, size=2))
        u = rng.standard_normal((h, w, 3))
        p = rng.standard_normal((h * w, 2, 3))
        worst = max(worst, abs(inner_product(gradient(u), p) - float(np.sum(u * gradient_adjoint(p, (h, w))))))
    u = rng.standard_normal((8, 8, 3))
    k = BlurKernel.gaussian(1.0)
    direct = np.stack([ndimage.convolve(u[..., c], k.taps, mode="wrap") for c in range(3)], axis=2)
    blur = np.abs(apply_blur(u, k) - direct).max()
    ok = worst < 1e-10 and blur < 1e-10
    finish(4, ok, f"gradient adjoint mismatch {worst:.1e}, FFT vs spatial blur {blur:.1e} (both < 1e-10)")


def test_criterion_5_singular_vectors():
    rng = np.random.default_rng(105)
    passed = {}
    for kind, spec in (("l111", L111), ("l211", L211), ("linf11", LINF11)):
        count = 0
        for _ in range(20):
            h, w = (int(v) for v in rng.integers(8, 65, size=2))
            u, z = build_singular_vector(random_recipe(kind, (h, w), rng))
            count += verify_singular_vector(u, z, spec, tol=1e-10)
        passed[kind] = count
    # coupled coefficients: singular for l211 only
    c = np.array([0.54, 0.2, -0.82])
    c = c / np.linalg.norm(c)
    r = SingularVectorRecipe("l211", random_profile(32, rng), random_profile(24, rng), c, c[::-1])
    u, z = build_singular_vector(r)
    coupled = [verify_singular_vector(u, z, s) for s in (L211, L111, LINF11)]
    # jumps at different places per channel: singular for l111 only
    px = np.zeros((3, 24))
    for k in range(3):
        up = np.linspace(0, 1, 2 ** (k + 1) + 1)[1:]
        head = np.concatenate([up, np.ones(2), np.linspace(1, -1, 5)[1:]])
        tail = np.linspace(-1, 0, 5)[1:]
        px[k] = np.concatenate([head, -np.ones(24 - head.size - tail.size), tail])
    py = np.stack([random_profile(16, rng).samples for _ in range(3)])
    r = SingularVectorRecipe("l111", px, py, np.array([1.0, -1.0, 1.0]), np.array([1.0, 1.0, -1.0]))
    u, z = build_singular_vector(r)
    split = [verify_singular_vector(u, z, s) for s in (L111, L211, LINF11)]
    ok = all(v == 20 for v in passed.values()) and coupled == [True, False, False] and split == [True, False, False]
    finish(5, ok, f"random recipes verified {passed} of 20 each; coupled recipe (l211, l111, linf11) -> "
                  f"{coupled}; per-channel recipe (l111, l211, linf11) -> {split}")


def test_criterion_6_solver():
    two = {}
    for lam, expected in ((4.0, (0.25, 0.75)), (1.0, (0.5, 0.5)), (3.0, (1 / 3, 2 / 3))):
        p = ProblemSpec("denoise-l2", np.array([[[0.0], [1.0]]]), lam)
        u, _ = solve(p, L111, max_iters=20000, tol=1e-12)
        two[lam] = np.abs(u.ravel() - expected).max()
    rng = np.random.default_rng(106)
    excess, diff = -math.inf, 0.0
    for spec in EXPERIMENT_NORMS:
        p = ProblemSpec("denoise-l2", rng.uniform(0, 1, (8, 8, 3)), 4.0)
        u, _ = solve(p, spec, max_iters=100000, tol=1e-10)
        e = fidelity_energy(p, u) + eval_norm(gradient(u), spec)
        excess = max(excess, e - subgradient_primal(p, spec, iters=5000)[1])
        diff = max(diff, abs(e - cvx_primal(p, spec)[1]))
    ok = max(two.values()) <= 1e-6 and excess <= 1e-6 and diff <= 1e-6
    finish(6, ok, f"two-pixel max error {max(two.values()):.1e}; 8x8 energy minus subgradient oracle "
                  f"{excess:.1e} (<= 1e-6), |energy - conic solver| {diff:.1e} (<= 1e-6)")


# Kodak reproduction


@pytest.mark.slow
def test_criterion_7_gaussian_denoising():
    ref = kodak_or_fail(7, 23)
    searches = compare_norms(gaussian_denoising(ref, 30.0, seed=0), ref, **SEARCH)
    values = {k: searches[k].best[1] for k in DENOISE_L2}
    off = {k: values[k] - DENOISE_L2[k] for k in values}
    within = all(abs(d) <= 0.3 for d in off.values())
    lead = margin(values, "linf,1,1:col,der,pix")
    order = values["linf,1,1:col,der,pix"] > values["l1,1,1:col,der,pix"] and lead >= -0.1
    lams = ", ".join(f"{NAMES[k]} {searches[k].best[0]:.4g}" for k in values)
    finish(7, within and order, f"PSNR {fmt(values)}; deviations {fmt(off)} (|.| <= 0.3: {within}); "
                                f"linf11 lead {lead:+.2f} dB (>= -0.1) and above l111: {order}; lambdas {lams}")


@pytest.mark.slow
def test_criterion_8_impulse_denoising():
    ref = kodak_or_fail(8, 5)
    searches = compare_norms(impulse_denoising(ref, 0.15, seed=0), ref, **SEARCH)
    values = {k: searches[k].best[1] for k in DENOISE_L1}
    lead = margin(values, "linf,1,1:col,der,pix")
    within = all(abs(values[k] - DENOISE_L1[k]) <= 0.5 for k in values)
    finish(8, lead >= 0.5 and within, f"PSNR {fmt(values)}; linf11 lead {lead:+.2f} dB (>= 0.5); "
                                      f"all within 0.5 dB of reference: {within}")


@pytest.mark.slow
def test_criterion_9_deblurring():
    ref = kodak_or_fail(9, 3)
    searches = compare_norms(deblurring(ref, 2.0, 0.5, seed=0), ref, **SEARCH)
    values = {k: searches[k].best[1] for k in DEBLUR}
    top = max(values.values())
    within = all(abs(values[k] - DEBLUR[k]) <= 0.3 for k in values)
    near = all(top - values[k] <= 0.1 for k in (S1, "l2,2,1:col,der,pix"))
    finish(9, within and near, f"PSNR {fmt(values)}; all within 0.3 dB: {within}; "
                               f"S1 and l221 within 0.1 dB of the maximum: {near}")


@pytest.mark.slow
def test_criterion_10_inpainting():
    ref = kodak_or_fail(10, 20)
    searches = compare_norms(inpainting(ref, seed=0), ref, norms=[NormSpec.parse(k) for k in ISOTROPIC + ANISOTROPIC],
                             config=INPAINT, **SEARCH)
    values = {k: searches[k].best[1] for k in ISOTROPIC + ANISOTROPIC}
    gap = min(values[i] for i in ISOTROPIC) - max(values[a] for a in ANISOTROPIC)
    finish(10, gap >= 0.5, f"PSNR {fmt(values)}; worst isotropic minus best anisotropic {gap:+.2f} dB (>= 0.5)")


def test_criterion_11_wave_edge():
    ratios = wave_edge_suppression([LINF11, L211, L111], lam=0.01)
    linf, l2, l1 = ratios[str(LINF11)], ratios[str(L211)], ratios[str(L111)]
    ok = linf < 0.05 and l1 > 0.5
    finish(11, ok, f"background chroma variance kept: linf11 {linf:.3f} (< 0.05), l211 {l2:.3f}, "
                   f"l111 {l1:.3f} (> 0.5)")


@pytest.mark.slow
def test_criterion_12_cielab():
    ref = kodak_or_fail(12, 20)
    spec = NormSpec.parse(L2INF1)
    rgb = compare_norms(inpainting(ref, seed=0), ref, norms=[spec], config=INPAINT, **SEARCH)
    lab = compare_norms(inpainting(ref, seed=0, colorspace="lab"), ref, norms=[spec], config=INPAINT, **SEARCH)
    rgb, lab = rgb[L2INF1].best[1], lab[L2INF1].best[1]
    finish(12, lab >= rgb - 0.1, f"l2inf1 inpainting PSNR RGB {rgb:.2f}, Lab {lab:.2f} (Lab >= RGB - 0.1)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", *sys.argv[1:]]))
