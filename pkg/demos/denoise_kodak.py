"""Gaussian denoising of a Kodak image with every collaborative norm.

Noise with standard deviation 30 (on the 0..255 scale) is added to the
image and rounded back to 8 bits. For each norm the fidelity weight is tuned
for the best PSNR against the clean image, then the norms are ranked.

By default a 128x128 crop is used so the demo finishes in a few minutes;
``--full`` processes the whole image (roughly an hour on one core).

Run with ``python demos/denoise_kodak.py [--index 23] [--full]``.
"""

import argparse
import logging

from ctv.experiments import best_values, compare_norms, gaussian_denoising, ranking
from ctv.imageio import kodak_path, read_image
from ctv.problems import psnr

p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
p.add_argument("--index", type=int, default=23, help="Kodak image number")
p.add_argument("--sigma", type=float, default=30.0)
p.add_argument("--full", action="store_true", help="use the whole image")
p.add_argument("-v", "--verbose", action="store_true")
args = p.parse_args()
logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

path = kodak_path(args.index)
if not path.exists():
    raise SystemExit(f"{path} is missing; run `ctv fetch-kodak` first")
ref = read_image(path)
if not args.full:
    ref = ref[192:320, 320:448]

problem = gaussian_denoising(ref, sigma=args.sigma)
print(f"noisy input: {psnr(problem.f, ref):.2f} dB")

values = best_values(compare_norms(problem, ref, xatol=0.05, max_evals=10))
for name in ranking(values):
    print(f"  {name:24s} {values[name]:6.2f} dB")
