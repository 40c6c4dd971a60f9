"""8-bit image files: PNG through Pillow, binary PPM (P6) without it."""

import os
from pathlib import Path

import numpy as np

from .problems import quantize
from .tensors import as_image

try:
    from PIL import Image
except ImportError:  # pragma: no cover
    Image = None


def _read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    pos += 1
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != b"P6" or maxval != 255:
        raise ValueError(f"{path}: only 8-bit binary PPM (P6) is supported")
    pix = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pix.reshape(h, w, 3).astype(np.float64)


def _write_ppm(path, arr):
    h, w, _ = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(arr.astype(np.uint8).tobytes())


def read_image(path):
    """Read an RGB image as a float64 ``(height, width, 3)`` array in [0, 255]."""
    path = Path(path)
    if path.suffix.lower() in (".ppm", ".pnm") or Image is None:
        return _read_ppm(path)
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64)


def write_image(path, u):
    """Round, clamp to [0, 255] and save as 8-bit RGB (PNG, or PPM by extension)."""
    u = as_image(u)
    if u.shape[2] == 1:
        u = np.repeat(u, 3, axis=2)
    arr = quantize(u).astype(np.uint8)
    path = Path(path)
    if path.suffix.lower() in (".ppm", ".pnm") or Image is None:
        _write_ppm(path, arr)
    else:
        Image.fromarray(arr, "RGB").save(path)


def read_mask(path):
    """Read a mask image; white (> 127) marks known pixels."""
    return read_image(path).mean(axis=2) > 127


def write_mask(path, known):
    """Save a boolean mask with known pixels white and unknown pixels black."""
    m = np.where(np.asarray(known, dtype=bool), 255.0, 0.0)
    write_image(path, np.repeat(m[..., None], 3, axis=2))


def data_dir():
    """Kodak directory: ``$CTV_DATA_DIR`` if set, else ``data/kodak`` of the checkout."""
    env = os.environ.get("CTV_DATA_DIR")
    if env:
        return Path(env)
    here = Path(__file__).resolve().parents[2] / "data" / "kodak"
    if here.is_dir():
        return here
    return Path.cwd() / "data" / "kodak"


def kodak_path(index, directory=None):
    """Path of Kodak image `index` (1..24), whether or not it exists."""
    return Path(directory or data_dir()) / f"kodim{int(index):02d}.png"
