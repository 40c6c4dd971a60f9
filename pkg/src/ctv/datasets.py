"""Download and verification of the Kodak test images."""

import json
import logging
import urllib.request
from pathlib import Path

log = logging.getLogger(__name__)

KODAK_BASE_URL = "http://r0k.us/graphics/kodak/kodak/"
KODAK_NAMES = tuple(f"kodim{i:02d}.png" for i in range(1, 25))
MANIFEST = "MANIFEST.json"
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def load_manifest(target):
    path = Path(target) / MANIFEST
    if path.exists():
        with open(path) as fh:
            return json.load(fh)
    return {}


def save_manifest(target, manifest):
    with open(Path(target) / MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def is_valid(path, expected_length=None):
    """File exists, starts with the PNG signature and has the recorded length."""
    path = Path(path)
    if not path.is_file():
        return False
    size = path.stat().st_size
    if expected_length is not None and size != expected_length:
        return False
    with open(path, "rb") as fh:
        return fh.read(8) == PNG_MAGIC


def _download(url, timeout):
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        data = resp.read()
        length = resp.headers.get("Content-Length")
    if length is not None and int(length) != len(data):
        raise OSError(f"{url}: got {len(data)} bytes, expected {length}")
    if not data.startswith(PNG_MAGIC):
        raise OSError(f"{url}: not a PNG file")
    return data


def fetch_kodak(target, base_url=KODAK_BASE_URL, offline=False, timeout=60, names=KODAK_NAMES):
    """Make sure all Kodak images are present and intact in `target`.

    Files whose length disagrees with the manifest are downloaded again.
    With ``offline=True`` nothing is downloaded and the directory is only
    checked.

    Returns
    -------
    downloaded : list of str
    missing : list of str
        Files still absent or invalid afterwards.
    """
    target = Path(target)
    target.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(target)
    downloaded, missing = [], []
    for name in names:
        path = target / name
        if is_valid(path, manifest.get(name)):
            manifest.setdefault(name, path.stat().st_size)
            continue
        if offline:
            missing.append(name)
            continue
        url = base_url.rstrip("/") + "/" + name
        try:
            data = _download(url, timeout)
        except (OSError, ValueError) as exc:
            log.warning("download failed: %s", exc)
            missing.append(name)
            continue
        tmp = path.with_suffix(".part")
        tmp.write_bytes(data)
        tmp.replace(path)
        manifest[name] = len(data)
        downloaded.append(name)
    save_manifest(target, manifest)
    return downloaded, missing
