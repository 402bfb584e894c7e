"""Semiclassical check on the R^2 radial example.

In the weight-m sector (m = alpha/hbar) the operator -hbar^2 Lap + V(|y|^2)
reduces, with u = sqrt(r) f, to the half-line problem

    -hbar^2 u'' + [V(r^2) + (alpha^2 - hbar^2/4) / r^2] u = lambda u.

Its lowest eigenvalue approaches c_alpha = min_r V(r^2) + alpha^2/r^2 as
hbar -> 0.  The -hbar^2/4 term is exact for the reduction and O(hbar^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .forward import minimize_total
from .polytope import make_orthant
from .potential import separable

__all__ = [
    "RadialProblem",
    "effective_potential",
    "radial_potential",
    "c_alpha",
    "sturm_count",
    "lowest_tridiagonal_eigenvalue",
    "lowest_eigenvalue",
    "semiclassical_limit_check",
]

MIN_NPTS = 100
EIG_TOL = 1e-12


@dataclass(frozen=True)
class RadialProblem:
    """V1d is given by ascending polynomial coefficients in s = r^2."""

    v1d: tuple
    alpha: float
    hbar: float
    r_max: Optional[float] = None
    npts: int = 4000

    def __post_init__(self):
        c = tuple(float(v) for v in self.v1d)
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "v1d", c)
        if len(c) < 2 or c[-1] <= 0:
            raise ValueError("V1d must grow at infinity (degree >= 1, positive leading coefficient)")
        if self.alpha <= 0 or self.hbar <= 0:
            raise ValueError("alpha and hbar must be positive")
        m = self.alpha / self.hbar
        if abs(m - round(m)) > 1e-12 * max(1.0, m):
            raise ValueError(f"alpha/hbar = {m!r} is not an integer")
        if self.npts < MIN_NPTS:
            raise ValueError(f"npts must be at least {MIN_NPTS}")

    @property
    def m(self) -> int:
        return int(round(self.alpha / self.hbar))


def _v1d(coeffs, s):
    return npoly.polyval(s, np.asarray(coeffs, dtype=float))


def radial_potential(v1d, alpha: float, hbar: float, r):
    """V1d(r^2) + (alpha^2 - hbar^2/4) / r^2 without the RadialProblem checks."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    return _v1d(v1d, r**2) + (alpha**2 - hbar**2 / 4) / r**2


def effective_potential(prob: RadialProblem, r):
    return radial_potential(prob.v1d, prob.alpha, prob.hbar, r)


def c_alpha(v1d: Sequence[float], alpha: float) -> tuple[float, float]:
    """min over r of V1d(r^2) + alpha^2/r^2, returned as (c_alpha, r_min).

    In s = r^2 this is min_s V1d(s) + alpha^2/s, the forward problem on the
    half-line whose kinetic term 1/2 a^2/s matches alpha^2/s at a = sqrt(2) alpha.
    """
    V = separable([v1d])
    r = minimize_total(make_orthant(1), V, [math.sqrt(2.0) * alpha])
    if not r.converged:
        raise RuntimeError(f"c_alpha minimization failed: {r.status.value}")
    return r.g_value, math.sqrt(float(r.x_star[0]))


def _default_r_max(prob: RadialProblem, c: float, r_min: float) -> float:
    r = max(r_min, 1e-3)
    while _v1d(prob.v1d, r * r) + prob.alpha**2 / (r * r) < 8.0 * c:
        r *= 1.05
    return r


def sturm_count(diag: np.ndarray, off2: Sequence[float], lam: float) -> int:
    """Number of eigenvalues below ``lam`` of the symmetric tridiagonal matrix.

    ``off2`` holds the squared off-diagonal entries.
    """
    count = 0
    q = 1.0
    tiny = 1e-300
    for i, d in enumerate(diag):
        q = d - lam - (off2[i - 1] / q if i else 0.0)
        if q == 0.0:
            q = -tiny
        if q < 0.0:
            count += 1
    return count


def lowest_tridiagonal_eigenvalue(diag, off, tol: float = EIG_TOL) -> float:
    """Smallest eigenvalue by Sturm-sequence bisection to ``tol`` absolute."""
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    d = diag.tolist()
    off2 = (off * off).tolist()
    absoff = np.abs(off)
    radius = np.zeros(len(diag))
    radius[:-1] += absoff
    radius[1:] += absoff
    lo = float(np.min(diag - radius))
    hi = float(np.min(diag + radius))
    while sturm_count(d, off2, hi) < 1:
        hi += max(1.0, hi - lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if sturm_count(d, off2, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def lowest_eigenvalue(prob: RadialProblem) -> float:
    c, r_min = c_alpha(prob.v1d, prob.alpha)
    r_max = _default_r_max(prob, c, r_min) if prob.r_max is None else float(prob.r_max)
    if float(effective_potential(prob, r_max)) <= 3.0 * c:
        raise ValueError(f"r_max = {r_max} is too small: V_eff(r_max) <= 3 c_alpha")
    n = prob.npts
    h = r_max / (n + 1)
    r = h * np.arange(1, n + 1)
    k = prob.hbar**2 / h**2
    diag = 2.0 * k + effective_potential(prob, r)
    off = np.full(n - 1, -k)
    return lowest_tridiagonal_eigenvalue(diag, off)


def semiclassical_limit_check(v1d, alpha: float, hbar_list, npts: int = 4000,
                              r_max: Optional[float] = None) -> dict:
    """lambda_min(hbar) - c_alpha for each hbar and the least-squares slope in hbar."""
    c, _ = c_alpha(v1d, alpha)
    hbars = [float(h) for h in hbar_list]
    lams = [lowest_eigenvalue(RadialProblem(tuple(v1d), alpha, h, r_max, npts)) for h in hbars]
    gaps = [lam - c for lam in lams]
    slope = float(np.polyfit(hbars, gaps, 1)[0]) if len(hbars) > 1 else math.nan
    return {
        "c_alpha": c,
        "hbar": hbars,
        "lambda_min": lams,
        "gap": gaps,
        "gap_over_hbar": [g / h for g, h in zip(gaps, hbars)],
        "slope": slope,
    }
