"""The toric kinetic form W(x, alpha) = 1/2 sum_i <l_i, alpha>^2 / l_i(x).

All derivative blocks come from one pass over the facets.  The mixed block
is ``mixed_hess[j, k] = d^2 W / d alpha_j d x_k = (L^T A L)[j, k]`` with
``A_i = -<l_i, alpha> / l_i(x)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .polytope import DelzantPolytope, facet_values

__all__ = [
    "DomainError",
    "KineticEval",
    "ToricKinetic",
    "BilinearKinetic",
    "dl_alpha",
    "w_eval",
    "w_quadratic_mvp_check",
    "as_kinetic",
]


class DomainError(ValueError):
    """Point on or outside the polytope boundary."""

    def __init__(self, facet: int, value: float):
        super().__init__(f"facet {facet} violated: l_{facet}(x) = {value!r} <= 0")
        self.facet = facet
        self.value = value


@dataclass
class KineticEval:
    value: float
    grad_x: np.ndarray
    grad_alpha: np.ndarray
    hess_xx: np.ndarray
    mixed_hess: np.ndarray


def dl_alpha(P: DelzantPolytope, alpha) -> np.ndarray:
    """Pairings <l_i, alpha> for every facet."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (P.dim,):
        raise ValueError(f"weight must have dimension {P.dim}")
    return P.L @ alpha


def w_eval(P: DelzantPolytope, x, alpha) -> KineticEval:
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    s = facet_values(P, x)
    bad = np.flatnonzero(s <= 0.0)
    if bad.size:
        raise DomainError(int(bad[0]), float(s[bad[0]]))
    L = P.L
    a = dl_alpha(P, alpha)
    a_s = a / s
    a_s2 = a_s / s
    value = 0.5 * float(a @ a_s)
    grad_x = -0.5 * L.T @ (a_s * a_s)
    grad_alpha = L.T @ a_s
    hess_xx = L.T @ (L * (a_s * a_s / s)[:, None])
    mixed = L.T @ (L * (-a_s2)[:, None])
    return KineticEval(value, grad_x, grad_alpha, hess_xx, mixed)


def w_quadratic_mvp_check(P: DelzantPolytope, x, v, w) -> float:
    """Residual of the quadratic mean-value identity for g = grad_x W(x, .).

    g(v + w) - g(v) = Dg(v + w/2) w holds exactly because g is quadratic in
    the weight; Dg is the mixed block.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    g1 = w_eval(P, x, v + w).grad_x
    g0 = w_eval(P, x, v).grad_x
    mid = w_eval(P, x, v + 0.5 * w).mixed_hess
    return float(np.linalg.norm(g1 - g0 - mid @ w))


class ToricKinetic:
    """W on a Delzant polytope, in the interface the Newton solvers use."""

    def __init__(self, P: DelzantPolytope):
        self.polytope = P
        self.dim = P.dim

    def evaluate(self, x, alpha) -> KineticEval:
        return w_eval(self.polytope, x, alpha)

    def slack(self, x) -> np.ndarray:
        return facet_values(self.polytope, x)

    def step_limit(self, x, dx) -> float:
        """Largest t with x + t dx on the closed polytope."""
        s = self.slack(x)
        Ld = self.polytope.L @ dx
        neg = Ld < 0
        if not np.any(neg):
            return math.inf
        return float(np.min(-s[neg] / Ld[neg]))

    def contains(self, x) -> bool:
        return bool(np.all(self.slack(x) > 0.0))

    def default_start(self, alpha) -> np.ndarray:
        from .polytope import analytic_center, interior_point

        P = self.polytope
        if P.is_bounded():
            return analytic_center(P)
        if P.kind == "orthant":
            a = np.abs(np.asarray(alpha, dtype=float))
            return np.where(a > 0, a, 1.0)
        return interior_point(P)

    def fingerprint(self) -> str:
        return "toric:" + self.polytope.fingerprint()


class BilinearKinetic:
    """W(x, y) = sign * x.y, the classical Legendre generating function.

    The domain is all of R^n unless a polytope is supplied.
    """

    def __init__(self, dim: int, sign: float = -1.0, domain: Optional[DelzantPolytope] = None):
        if sign not in (-1.0, 1.0, -1, 1):
            raise ValueError("sign must be +1 or -1")
        if domain is not None and domain.dim != dim:
            raise ValueError("domain dimension mismatch")
        self.dim = dim
        self.sign = float(sign)
        self.domain = domain

    def evaluate(self, x, alpha) -> KineticEval:
        x = np.asarray(x, dtype=float)
        y = np.asarray(alpha, dtype=float)
        if self.domain is not None:
            s = facet_values(self.domain, x)
            bad = np.flatnonzero(s <= 0.0)
            if bad.size:
                raise DomainError(int(bad[0]), float(s[bad[0]]))
        n = self.dim
        return KineticEval(
            value=self.sign * float(x @ y),
            grad_x=self.sign * y,
            grad_alpha=self.sign * x,
            hess_xx=np.zeros((n, n)),
            mixed_hess=self.sign * np.eye(n),
        )

    def slack(self, x) -> np.ndarray:
        if self.domain is None:
            return np.array([math.inf])
        return facet_values(self.domain, x)

    def step_limit(self, x, dx) -> float:
        if self.domain is None:
            return math.inf
        return ToricKinetic(self.domain).step_limit(x, dx)

    def contains(self, x) -> bool:
        return bool(np.all(self.slack(x) > 0.0))

    def default_start(self, alpha) -> np.ndarray:
        if self.domain is None:
            return np.zeros(self.dim)
        return ToricKinetic(self.domain).default_start(alpha)

    def fingerprint(self) -> str:
        dom = self.domain.fingerprint() if self.domain is not None else "R^n"
        return f"bilinear:{self.sign:+g}:{self.dim}:{dom}"


def as_kinetic(obj):
    """Accept a polytope or a ready kinetic term."""
    if isinstance(obj, DelzantPolytope):
        return ToricKinetic(obj)
    if hasattr(obj, "evaluate") and hasattr(obj, "step_limit"):
        return obj
    raise TypeError(f"cannot use {type(obj).__name__} as a kinetic term")
