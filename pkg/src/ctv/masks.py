"""Random scribble masks for inpainting experiments."""

import numpy as np

from .exceptions import ContractError

DEFAULT_STROKES = 30
DEFAULT_WIDTH = 3
DEFAULT_STEPS = 300


def scribble_mask(shape, seed=0, strokes=DEFAULT_STROKES, width=DEFAULT_WIDTH, steps=DEFAULT_STEPS):
    """Boolean mask of known pixels with random-walk scribbles removed.

    Each stroke starts at a uniform position and takes `steps` unit steps
    with a slowly drifting heading; a disk of diameter `width` is stamped at
    every position. The result depends only on the arguments.

    Returns
    -------
    ndarray of bool, shape `shape`
        True where the pixel is known.
    """
    h, w = shape[:2]
    if h < 1 or w < 1 or strokes < 0 or width < 1 or steps < 1:
        raise ContractError("positive dimensions, width and steps required")
    rng = np.random.Generator(np.random.Philox(seed))
    unknown = np.zeros((h, w), dtype=bool)
    r = (width - 1) / 2.0
    off = np.arange(-int(np.ceil(r)), int(np.ceil(r)) + 1)
    dy, dx = np.meshgrid(off, off, indexing="ij")
    disk = dy**2 + dx**2 <= r * r + 0.25
    dy, dx = dy[disk], dx[disk]
    for _ in range(strokes):
        y, x = rng.uniform(0, h), rng.uniform(0, w)
        heading = rng.uniform(0, 2 * np.pi)
        turns = np.cumsum(rng.normal(0.0, 0.25, size=steps))
        ys = y + np.cumsum(np.sin(heading + turns))
        xs = x + np.cumsum(np.cos(heading + turns))
        cy = np.rint(ys).astype(int)[:, None] + dy[None, :]
        cx = np.rint(xs).astype(int)[:, None] + dx[None, :]
        ok = (cy >= 0) & (cy < h) & (cx >= 0) & (cx < w)
        unknown[cy[ok], cx[ok]] = True
    return ~unknown


def unknown_fraction(known):
    return float(1.0 - np.mean(known))
