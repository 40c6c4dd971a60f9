"""Filling scribbled-over regions of a Kodak image.

A random scribble mask hides a few percent of the pixels. The hidden pixels
start at zero and are filled in by the total variation term alone; the known
pixels are held close to their values by a large fidelity weight. The same
problem is also solved in CIE L*a*b*, where lightness and chroma are coupled
differently.

Run with ``python demos/inpainting.py [--index 23] [--lam 50] [--out DIR]``.
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from ctv.experiments import inpainting
from ctv.imageio import kodak_path, read_image, write_image, write_mask
from ctv.masks import scribble_mask, unknown_fraction
from ctv.norms import L2INF1, LINF11, S1L1
from ctv.problems import psnr, solve

p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
p.add_argument("--index", type=int, default=23)
p.add_argument("--lam", type=float, default=50.0)
p.add_argument("--iters", type=int, default=10000, help="iteration cap; about 3700 reach tol 1e-5")
p.add_argument("--out", type=Path)
args = p.parse_args()

path = kodak_path(args.index)
if not path.exists():
    raise SystemExit(f"{path} is missing; run `ctv fetch-kodak` first")
full = read_image(path)
# strokes are sized for the full image, so draw the mask there and crop both
crop = np.s_[128:384, 256:512]
ref = full[crop]
problem = inpainting(ref, mask=scribble_mask(full.shape, seed=0)[crop])
print(f"{100 * unknown_fraction(problem.mask):.1f}% of the pixels hidden, input {psnr(problem.f, ref):.2f} dB")

results = {}
for norm in (L2INF1, S1L1, LINF11):
    u, _ = solve(replace(problem, lam=args.lam), norm, max_iters=args.iters)
    results[str(norm)] = u
    print(f"  rgb {str(norm):24s} {psnr(u, ref):6.2f} dB")

lab = replace(problem, lam=args.lam, colorspace="lab")
u, _ = solve(lab, L2INF1, max_iters=args.iters)
print(f"  lab {str(L2INF1):24s} {psnr(u, ref):6.2f} dB")

if args.out:
    args.out.mkdir(parents=True, exist_ok=True)
    write_mask(args.out / "mask.png", problem.mask)
    write_image(args.out / "observed.png", problem.f)
    for name, u in results.items():
        write_image(args.out / f"inpaint_{name.split(':')[0].replace(',', '')}.png", u)
