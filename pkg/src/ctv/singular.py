"""Singular vectors of the anisotropic collaborative TV functionals.

A singular vector here is an image ``u = D^T z`` with ``z`` in the
subdifferential of ``||.||`` at ``D u``, so that ``u`` lies in ``dJ(u)`` for
``J(u) = ||D u||``. The dual variable is built from piecewise linear profiles
``l`` with values in [-1, 1] whose slope changes only where ``|l| = 1``:

* horizontal part ``z[:, 0, k] = c1_k * l1_k(column)``
* vertical part ``z[:, 1, k] = c2_k * l2_k(row)``

For the forward-difference operator, ``D D^T l(i) = 2 l(i) - l(i-1) - l(i+1)``
with ``l(-1) = l(n-1) = 0``, so profiles are stored with their last sample
equal to 0 and read as paths that start and end at 0.
"""

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, RecipeError
from .norms import L111, L211, LINF11, NormSpec, check_subdifferential_membership
from .operators import gradient, gradient_adjoint

KINDS = {"l111": L111, "l211": L211, "linf11": LINF11}


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    """Samples ``l(0), ..., l(n-1)`` of a profile, ``l(n-1) = 0``."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1 or s.size < 2:
            raise RecipeError("a profile needs at least two samples")
        object.__setattr__(self, "samples", s)

    @property
    def extended(self):
        """Samples with the virtual zero at index -1 prepended and l(n-1) set to 0."""
        return np.concatenate([[0.0], self.samples[:-1], [0.0]])

    def slopes(self):
        """``s_i = l(i) - l(i-1)`` for ``i = 0 .. n-1`` on the extended path."""
        return np.diff(self.extended)

    def breakpoints(self):
        """Indices ``i`` in ``0 .. n-2`` where ``s_i != s_{i+1}``."""
        s = self.slopes()
        return np.flatnonzero(s[:-1] != s[1:])

    def lemma_holds(self):
        """At every slope change, ``l(i) == sign(s_i - s_{i+1})`` exactly."""
        s = self.slopes()
        idx = self.breakpoints()
        return bool(np.all(self.samples[idx] == np.sign(s[idx] - s[idx + 1])))

    def validate(self):
        if np.any(np.abs(self.samples) > 1):
            raise RecipeError("profile values must lie in [-1, 1]")
        if self.samples[-1] != 0:
            raise RecipeError("the last profile sample must be 0")
        idx = self.breakpoints()
        if np.any(np.abs(self.samples[idx]) != 1):
            raise RecipeError("slope may change only where |l| = 1")
        return self


def random_profile(n, rng, max_knots=4):
    """Random profile of length `n` that satisfies the slope condition exactly.

    The path starts and ends at 0 and visits knots at +-1. Ramps have
    power-of-two lengths, so every sample is a dyadic rational and slopes
    are computed without rounding; plateaus at +-1 absorb the rest.
    """
    if n < 2:
        raise RecipeError("profiles need n >= 2")
    for _ in range(1000):
        k = int(rng.integers(1, max_knots + 1))
        signs = [int(rng.choice([-1, 1]))]
        for _ in range(k - 1):
            signs.append(int(rng.choice([-1, 1])))
        cap = max(0, int(np.log2(max(n // (2 * k + 1), 1))))
        ramps = [2 ** int(rng.integers(0, cap + 1))]
        for a, b in zip(signs, signs[1:]):
            ramps.append(2 ** int(rng.integers(0, cap + 1)) if a != b else 0)
        ramps.append(2 ** int(rng.integers(0, cap + 1)))
        rest = n - sum(ramps)
        if rest < 0:
            continue
        # same-sign neighbours need a plateau of at least one step between them
        need = [1 if a == b else 0 for a, b in zip(signs, signs[1:])]
        rest -= sum(need)
        if rest < 0:
            continue
        cuts = np.sort(rng.integers(0, rest + 1, size=k - 1)) if k > 1 else np.array([], int)
        plateaus = np.diff(np.concatenate([[0], cuts, [rest]])).astype(int)
        path = [0.0]
        value = 0.0
        for i, target in enumerate(signs):
            length = ramps[i]
            if i > 0 and need[i - 1]:
                length = need[i - 1]
            step = (target - value) / length
            path.extend(value + step * t for t in range(1, length + 1))
            value = float(target)
            path.extend([value] * int(plateaus[i]))
        step = -value / ramps[-1]
        path.extend(value + step * t for t in range(1, ramps[-1] + 1))
        # path covers indices -1 .. n-1
        samples = np.array(path[1:])
        assert samples.size == n
        return PiecewiseLinearProfile(samples).validate()
    raise RecipeError(f"could not build a profile of length {n}")


def _as_profiles(p, channels, shared):
    if isinstance(p, PiecewiseLinearProfile):
        p = p.samples
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 1:
        return np.tile(arr, (channels, 1))
    if shared and not np.all(arr == arr[0]):
        raise RecipeError("this norm needs the same profile in every channel")
    if arr.shape[0] != channels:
        raise RecipeError(f"expected {channels} channel profiles, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class SingularVectorRecipe:
    """Ingredients of a singular vector.

    Parameters
    ----------
    norm : str
        ``l111``, ``l211`` or ``linf11``.
    profile_x, profile_y : array_like
        Horizontal (length width) and vertical (length height) profiles,
        either shared (1-D) or one row per channel (``l111`` only).
    c1, c2 : array_like
        Per-channel coefficients of the two parts.
    """

    norm: str
    profile_x: np.ndarray
    profile_y: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    def __post_init__(self):
        if self.norm not in KINDS:
            raise RecipeError(f"unknown recipe norm {self.norm!r}")
        for name in ("profile_x", "profile_y", "c1", "c2"):
            v = getattr(self, name)
            if isinstance(v, PiecewiseLinearProfile):
                v = v.samples
            object.__setattr__(self, name, np.asarray(v, dtype=np.float64))

    @property
    def channels(self):
        return self.c1.size

    @property
    def spec(self):
        return KINDS[self.norm]

    def validate(self, tol=1e-12):
        c1, c2 = self.c1, self.c2
        if c1.shape != c2.shape or c1.ndim != 1:
            raise RecipeError("c1 and c2 must be vectors of equal length")
        shared = self.norm != "l111"
        for p in (self.profile_x, self.profile_y):
            for row in _as_profiles(p, self.channels, shared):
                PiecewiseLinearProfile(row).validate()
        if self.norm in ("l111", "linf11"):
            for c in (c1, c2):
                if not np.all(np.isin(c, (-1.0, 0.0, 1.0))):
                    raise RecipeError("coefficients must lie in {0, 1, -1}")
        else:
            for c in (c1, c2):
                n = np.linalg.norm(c)
                if n != 0 and abs(n - 1) > tol:
                    raise RecipeError(f"coefficient vector has l2 norm {n:.6g}, expected 1")
        return self

    def weights(self, c):
        """Per-channel factors multiplying the profile."""
        if self.norm == "linf11":
            nnz = np.count_nonzero(c)
            return c / nnz if nnz else np.zeros_like(c)
        return c

    def to_dict(self):
        return {
            "norm": self.norm,
            "profile_x": self.profile_x.tolist(),
            "profile_y": self.profile_y.tolist(),
            "c1": self.c1.tolist(),
            "c2": self.c2.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["norm"], d["profile_x"], d["profile_y"], d["c1"], d["c2"])


def build_singular_vector(recipe, grid=None):
    """Assemble ``z`` from the recipe and return ``(u, z)`` with ``u = D^T z``.

    Parameters
    ----------
    recipe : SingularVectorRecipe
    grid : tuple, optional
        ``(height, width)``; must agree with the profile lengths.

    Returns
    -------
    u : ndarray, shape (height, width, C)
    z : ndarray, shape (height * width, 2, C)
    """
    recipe.validate()
    C = recipe.channels
    shared = recipe.norm != "l111"
    lx = _as_profiles(recipe.profile_x, C, shared)
    ly = _as_profiles(recipe.profile_y, C, shared)
    h, w = ly.shape[1], lx.shape[1]
    if grid is not None and tuple(grid[:2]) != (h, w):
        raise RecipeError(f"profiles describe a {h}x{w} grid, not {grid[0]}x{grid[1]}")
    a1, a2 = recipe.weights(recipe.c1), recipe.weights(recipe.c2)
    z = np.zeros((h, w, 2, C))
    z[:, :, 0, :] = (a1[:, None] * lx).T[None, :, :]
    z[:, :, 1, :] = (a2[:, None] * ly).T[:, None, :]
    z = z.reshape(h * w, 2, C)
    return gradient_adjoint(z, (h, w)), z


def verify_singular_vector(u, z, spec, tol=1e-10):
    """Check ``z`` is a subgradient of ``||.||`` at ``D u`` and ``u = D^T z``.

    Returns the membership result; raises ContractError when ``u`` is not
    ``D^T z`` to within 1e-12 (relative to the size of ``u``).
    """
    if isinstance(spec, str):
        spec = KINDS.get(spec) or NormSpec.parse(spec)
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 2:
        u = u[:, :, None]
    back = gradient_adjoint(z, u.shape[:2])
    if np.max(np.abs(back - u), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(u), initial=0.0)):
        raise ContractError("u is not D^T z")
    return check_subdifferential_membership(z, gradient(u), spec, tol)


def random_recipe(norm, grid, rng, channels=3):
    """Random valid recipe for `norm` on a ``(height, width)`` grid."""
    h, w = grid
    if norm == "l111":
        px = np.stack([random_profile(w, rng).samples for _ in range(channels)])
        py = np.stack([random_profile(h, rng).samples for _ in range(channels)])
        c1, c2 = (rng.choice([-1.0, 1.0], size=channels) for _ in range(2))
    elif norm == "l211":
        px, py = random_profile(w, rng).samples, random_profile(h, rng).samples
        c1, c2 = (v / np.linalg.norm(v) for v in rng.standard_normal((2, channels)))
    elif norm == "linf11":
        px, py = random_profile(w, rng).samples, random_profile(h, rng).samples
        c1, c2 = rng.choice([-1.0, 0.0, 1.0], size=(2, channels))
    else:
        raise RecipeError(f"unknown recipe norm {norm!r}")
    return SingularVectorRecipe(norm, px, py, c1, c2).validate()


def export_fixture(path, recipe, grid=None):
    """Write a recipe and its ``(u, z)`` pair as JSON."""
    u, z = build_singular_vector(recipe, grid)
    with open(path, "w") as fh:
        json.dump(
            {"recipe": recipe.to_dict(), "shape": list(u.shape), "u": u.ravel().tolist(), "z": z.ravel().tolist()},
            fh,
        )


def load_fixture(path):
    """Read a fixture written by :func:`export_fixture`."""
    with open(path) as fh:
        d = json.load(fh)
    h, w, c = d["shape"]
    u = np.array(d["u"]).reshape(h, w, c)
    z = np.array(d["z"]).reshape(h * w, 2, c)
    return SingularVectorRecipe.from_dict(d["recipe"]), u, z
