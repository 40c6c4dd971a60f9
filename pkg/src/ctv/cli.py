"""Command-line interface.

Subcommands::

    ctv restore INPUT --task denoise-l2 --norm "linf,1,1:col,der,pix" --lambda 0.02 --out out.png
    ctv sweep INPUT --synthesize --noise-sigma 30 --norm "s1,l1" --lambda-grid 0.01,0.02 --report sweep.csv
    ctv fetch-kodak [DIR] [--offline]
    ctv scribble-mask --shape 512x768 --seed 3 --out mask.png

Every flag can also be given in a ``key = value`` config file (``--config``),
with keys spelled like the flags; command-line flags take precedence.

Exit codes: 0 success, 2 bad usage, 3 I/O error, 4 unsupported norm,
5 divergent solve, 6 incomplete dataset.
"""

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import KODAK_BASE_URL, fetch_kodak
from .exceptions import ContractError, DivergenceError, UnsupportedNormError
from .imageio import data_dir, read_image, read_mask, write_image, write_mask
from .masks import DEFAULT_STEPS, DEFAULT_STROKES, DEFAULT_WIDTH, scribble_mask, unknown_fraction
from .norms import NormSpec
from .operators import BlurKernel, apply_blur
from .problems import (
    ProblemSpec,
    add_gaussian_noise,
    add_salt_pepper,
    psnr,
    quantize,
    solve,
)
from .solver import SolverConfig

log = logging.getLogger("ctv")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NORM, EXIT_DIVERGED, EXIT_DATA = 0, 2, 3, 4, 5, 6
DEFAULT_NORM = "linf,1,1:col,der,pix"
CSV_HEADER = ["norm", "lambda", "psnr_db", "iterations", "primal_residual", "dual_residual", "seconds"]


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _problem_flags(p, many_norms=False):
    p.add_argument("input", nargs="?", help="observed image, or clean image with --synthesize")
    p.add_argument("--task", choices=["denoise-l2", "denoise-l1", "deblur", "inpaint"], default="denoise-l2")
    if many_norms:
        p.add_argument("--norm", action="append", help="repeat to sweep several norms")
    else:
        p.add_argument("--norm", default=DEFAULT_NORM, help='e.g. "linf,1,1:col,der,pix" or "s1,l1"')
    p.add_argument("--noise-sigma", type=float, default=0.0, help="Gaussian noise level")
    p.add_argument("--sp-alpha", type=float, default=0.0, help="salt-and-pepper fraction")
    p.add_argument("--blur-sigma", type=float, default=0.0, help="Gaussian blur kernel sigma")
    p.add_argument("--mask", help="mask image, white = known pixel")
    p.add_argument("--colorspace", choices=["rgb", "lab"], default="rgb")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ref", help="clean reference image for PSNR")
    p.add_argument(
        "--synthesize",
        action="store_true",
        help="treat INPUT as clean and generate the degraded data from it",
    )
    p.add_argument(
        "--float-observation",
        action="store_true",
        help="keep synthesized data in floating point instead of rounding to 8 bits",
    )
    p.add_argument("--config", help="key = value file with defaults for any flag")


def build_parser():
    parser = argparse.ArgumentParser(prog="ctv", description="Collaborative total variation restoration.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restore", help="run one restoration")
    _problem_flags(p)
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="fidelity weight")
    p.add_argument("--out", help="restored image (PNG or PPM)")
    p.add_argument("--report", help="metadata JSON (default: OUT with .json suffix)")

    p = sub.add_parser("sweep", help="PSNR over a grid of lambda values")
    _problem_flags(p, many_norms=True)
    p.add_argument("--lambda-grid", required=False, help="comma list, or geom:START:STOP:COUNT")
    p.add_argument("--report", help="CSV output (default: stdout)")
    p.add_argument("--out", help="directory for the restored images")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("fetch-kodak", help="download the 24 Kodak images")
    p.add_argument("target", nargs="?", help="directory (default: $CTV_DATA_DIR or data/kodak)")
    p.add_argument("--offline", action="store_true", help="only verify an existing directory")
    p.add_argument("--base-url", default=KODAK_BASE_URL)
    p.add_argument("--timeout", type=float, default=60.0)

    p = sub.add_parser("scribble-mask", help="write a random scribble mask")
    p.add_argument("--shape", default="512x768", help="HEIGHTxWIDTH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strokes", type=int, default=DEFAULT_STROKES)
    p.add_argument("--width", type=int, default=DEFAULT_WIDTH)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--out", required=True)
    return parser


def parse_args(argv=None):
    """Parse flags, filling unset ones from ``--config`` when given."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        appended = {}
        defaults = {}
        for key, raw in values.items():
            dest = "lam" if key == "lambda" else key
            if dest not in known:
                parser.error(f"unknown config key {key!r}")
            action = known[dest]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(action, argparse._AppendAction):
                # several values separated by ";" (norm strings contain commas)
                appended[dest] = [v.strip() for v in raw.split(";") if v.strip()]
            else:
                defaults[dest] = action.type(raw) if action.type else raw
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
        for dest, value in appended.items():
            if getattr(args, dest) is None:
                setattr(args, dest, value)
    return args


def parse_grid(text):
    """Lambda values from ``"0.01,0.02"`` or ``"geom:0.01:0.1:5"``; duplicates dropped."""
    if text.startswith("geom:"):
        _, a, b, n = text.split(":")
        values = np.geomspace(float(a), float(b), int(n)).tolist()
    else:
        values = [float(v) for v in text.split(",") if v.strip()]
    seen, out = set(), []
    for v in values:
        if v in seen:
            log.warning("duplicate lambda %g dropped from the grid", v)
            continue
        seen.add(v)
        out.append(v)
    return out


def prepare(args):
    """Observed data, reference image, mask and kernel for a run.

    Returns a dict with keys ``f``, ``ref``, ``mask``, ``kernel``, ``input_psnr``.
    """
    if not args.input:
        raise OSError("no input image given")
    clean = read_image(args.input)
    ref = read_image(args.ref) if args.ref else (clean if args.synthesize else None)
    kernel = BlurKernel.gaussian(args.blur_sigma) if args.task == "deblur" else None
    mask = None
    if args.task == "inpaint":
        if args.mask:
            mask = read_mask(args.mask)
        elif args.synthesize:
            mask = scribble_mask(clean.shape, seed=args.seed)
        else:
            raise OSError("inpainting needs --mask (or --synthesize for a scribble mask)")
    f = clean
    if args.synthesize:
        if args.task == "deblur":
            f = apply_blur(clean, kernel)
        if args.task == "denoise-l1" or args.sp_alpha > 0:
            f = add_salt_pepper(f, args.sp_alpha, seed=args.seed)
        if args.noise_sigma > 0:
            f = add_gaussian_noise(f, args.noise_sigma, seed=args.seed)
        if mask is not None:
            f = f * mask[..., None]
        if not args.float_observation:
            # degraded data are stored like any other 8-bit image
            f = quantize(f)
    input_psnr = psnr(f, ref) if ref is not None else None
    return {"f": f, "ref": ref, "mask": mask, "kernel": kernel, "input_psnr": input_psnr}


def run_one(args, data, norm, lam):
    """Solve one problem; returns the image and a result record."""
    problem = ProblemSpec(args.task, data["f"], lam, args.colorspace, data["kernel"], data["mask"])
    config = SolverConfig(max_iters=args.max_iters, tol=args.tol)
    t0 = time.perf_counter()
    u, state = solve(problem, norm, config)
    seconds = time.perf_counter() - t0
    ref = data["ref"]
    return u, {
        "norm": str(norm),
        "lambda": lam,
        "psnr_db": psnr(u, ref) if ref is not None else None,
        "psnr_float_db": psnr(u, ref, quantized=False) if ref is not None else None,
        "iterations": state.iteration,
        "converged": state.converged,
        "primal_residual": state.primal_residual,
        "dual_residual": state.dual_residual,
        "seconds": seconds,
    }


def parse_norm(text):
    """NormSpec from a CLI string; any parse failure counts as an unsupported norm."""
    try:
        return NormSpec.parse(text)
    except ContractError as exc:
        raise UnsupportedNormError(str(exc)) from None


def _config_record(args):
    skip = {"command", "verbose", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def cmd_restore(args):
    if args.lam is None:
        raise ContractError("--lambda is required")
    norm = parse_norm(args.norm)
    data = prepare(args)
    u, result = run_one(args, data, norm, args.lam)
    meta = {
        "version": __version__,
        "config": _config_record(args),
        "input_psnr_db": data["input_psnr"],
        "unknown_fraction": unknown_fraction(data["mask"]) if data["mask"] is not None else None,
        **result,
    }
    if args.out:
        write_image(args.out, u)
    report = args.report or (str(Path(args.out).with_suffix(".json")) if args.out else None)
    text = json.dumps({k: _json_safe(v) for k, v in meta.items()}, indent=1, default=str)
    if report:
        Path(report).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _sweep_job(payload):
    args, data, norm_text, lam = payload
    u, result = run_one(args, data, NormSpec.parse(norm_text), lam)
    return u, result


def cmd_sweep(args):
    if not args.lambda_grid:
        raise ContractError("--lambda-grid is required")
    norms = [parse_norm(t) for t in (args.norm or [DEFAULT_NORM])]
    grid = parse_grid(args.lambda_grid)
    data = prepare(args)
    if data["ref"] is None:
        raise ContractError("a sweep needs --ref or --synthesize")
    jobs = [(args, data, str(norm), lam) for norm in norms for lam in grid]
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    fh = open(args.report, "w", newline="") if args.report else sys.stdout
    rows = []
    try:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        if args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                results = list(pool.map(_sweep_job, jobs))
        else:
            results = map(_sweep_job, jobs)
        for (u, r), (_, _, norm_text, lam) in zip(results, jobs):
            writer.writerow([r[k] if not isinstance(r[k], float) else repr(r[k]) for k in CSV_HEADER])
            fh.flush()
            rows.append(r)
            if out_dir:
                tag = norm_text.replace(",", "-").replace(":", "_")
                write_image(out_dir / f"{tag}_lambda_{lam:g}.png", u)
    finally:
        if fh is not sys.stdout:
            fh.close()
    best = max(rows, key=lambda r: r["psnr_db"])
    print(
        f"best: norm={best['norm']} lambda={best['lambda']:g} psnr={best['psnr_db']:.2f} dB",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_fetch_kodak(args):
    target = Path(args.target) if args.target else data_dir()
    downloaded, missing = fetch_kodak(target, args.base_url, offline=args.offline, timeout=args.timeout)
    if downloaded:
        print(f"downloaded {len(downloaded)} file(s) into {target}")
    if missing:
        print("missing or invalid: " + " ".join(missing), file=sys.stderr)
        return EXIT_DATA
    print(f"{target}: all {24} Kodak images present")
    return EXIT_OK


def cmd_scribble_mask(args):
    try:
        h, w = (int(v) for v in args.shape.lower().split("x"))
    except ValueError:
        raise ContractError(f"bad --shape {args.shape!r}, expected HEIGHTxWIDTH")
    known = scribble_mask((h, w), args.seed, args.strokes, args.width, args.steps)
    write_mask(args.out, known)
    print(f"unknown fraction: {unknown_fraction(known):.4f}")
    return EXIT_OK


COMMANDS = {
    "restore": cmd_restore,
    "sweep": cmd_sweep,
    "fetch-kodak": cmd_fetch_kodak,
    "scribble-mask": cmd_scribble_mask,
}


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UnsupportedNormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NORM
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
