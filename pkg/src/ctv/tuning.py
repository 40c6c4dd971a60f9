"""Choosing the fidelity weight by maximizing PSNR against a reference."""

import logging
import math
from dataclasses import dataclass, field, replace

from scipy.optimize import minimize_scalar

from .problems import psnr, solve

log = logging.getLogger(__name__)


@dataclass
class LambdaSearch:
    """Every evaluation of a search, keyed by lambda."""

    norm: str
    evaluations: dict = field(default_factory=dict)

    @property
    def best(self):
        """``(lam, psnr_db)`` of the best evaluation."""
        lam = max(self.evaluations, key=self.evaluations.get)
        return lam, self.evaluations[lam]


def best_lambda(problem, norm, ref, lam0=0.02, factor=2.0, xatol=0.03, max_evals=16, config=None):
    """Find the lambda with the highest PSNR of ``solve(problem, norm)``.

    A local maximum is first bracketed by stepping geometrically from `lam0`,
    then refined with bounded Brent search on ``log(lambda)``.

    Parameters
    ----------
    problem : ProblemSpec
        Its ``lam`` field is ignored.
    norm : NormSpec
    ref : ndarray
        Clean image for the PSNR.
    lam0, factor : float
        Starting point and step ratio of the bracketing phase.
    xatol : float
        Tolerance on ``log(lambda)``.
    max_evals : int
        Hard cap on the number of solves.

    Returns
    -------
    LambdaSearch
    """
    search = LambdaSearch(str(norm))

    def score(lam):
        lam = float(lam)
        if lam not in search.evaluations:
            if len(search.evaluations) >= max_evals:
                return -math.inf
            u, _ = solve(replace(problem, lam=lam), norm, config)
            search.evaluations[lam] = psnr(u, ref)
            log.info("%s lambda=%.5g psnr=%.3f", norm, lam, search.evaluations[lam])
        return search.evaluations[lam]

    lo, mid, hi = lam0 / factor, lam0, lam0 * factor
    s_lo, s_mid, s_hi = score(lo), score(mid), score(hi)
    while len(search.evaluations) < max_evals and not (s_mid >= s_lo and s_mid >= s_hi):
        if s_hi > s_mid:
            lo, mid, s_lo, s_mid = mid, hi, s_mid, s_hi
            hi = mid * factor
            s_hi = score(hi)
        else:
            hi, mid, s_hi, s_mid = mid, lo, s_mid, s_lo
            lo = mid / factor
            s_lo = score(lo)
    remaining = max_evals - len(search.evaluations)
    if remaining > 0:
        minimize_scalar(
            lambda t: -score(math.exp(t)),
            bounds=(math.log(lo), math.log(hi)),
            method="bounded",
            options={"xatol": xatol, "maxiter": remaining},
        )
    return search
