"""Array conventions for images and gradient tensors.

Images are ``(height, width, C)`` float arrays. Flattened row-major they give
the ``(N, C)`` pixel-by-channel matrix with pixel index
``n = row * width + column``. Gradient tensors are ``(N, M, C)`` arrays:
pixel, derivative, channel.
"""

import numpy as np

from .exceptions import ContractError

PIX, DER, COL = 0, 1, 2


def as_image(u, channels=None):
    """Validate and return `u` as a float64 ``(height, width, C)`` array.

    A 2-D array is treated as a single-channel image.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 2:
        u = u[:, :, None]
    if u.ndim != 3 or min(u.shape) < 1:
        raise ContractError(f"image must have shape (height, width, C), got {u.shape}")
    if channels is not None and u.shape[2] != channels:
        raise ContractError(f"expected {channels} channels, got {u.shape[2]}")
    return u


def as_grad(A):
    """Validate and return `A` as a float64 ``(N, M, C)`` array."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 3 or min(A.shape) < 1:
        raise ContractError(f"gradient tensor must have shape (N, M, C), got {A.shape}")
    return A


def pixels(u):
    """Return the ``(N, C)`` view of an image."""
    u = as_image(u)
    return u.reshape(-1, u.shape[2])


def zeros_grad(n_pixels, n_derivatives=2, channels=3):
    return np.zeros((n_pixels, n_derivatives, channels))


def slice_pixel(A, i):
    """Return the ``M x C`` view ``A[i, :, :]``.

    Writes into the returned matrix are visible in `A`.
    """
    A = np.asarray(A)
    if A.ndim != 3:
        raise ContractError(f"gradient tensor must be 3-D, got shape {A.shape}")
    n = A.shape[0]
    if not isinstance(i, (int, np.integer)) or not 0 <= i < n:
        raise ContractError(f"pixel index {i!r} out of range [0, {n})")
    return A[i]


def inner_product(A, B):
    """Euclidean inner product ``sum_ijk A_ijk * B_ijk``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ContractError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.dot(A.ravel(), B.ravel()))
