"""Generalized Legendre inversion: recover V from G(alpha) = min_x V(x) + W(x, alpha).

Sign convention used throughout:

    xi  = -dW/dx   (so xi = dV/dx at the minimizer)
    eta = +dW/dalpha = dG/dalpha

For each weight the minimizer x(alpha) is recovered by solving
dW/dalpha(x, alpha) = dG/dalpha for x, and then

    V(x(alpha))     = G(alpha) - W(x(alpha), alpha)
    dV/dx(x(alpha)) = -dW/dx(x(alpha), alpha)

The classical transform is the case W(x, y) = -x.y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .forward import GTable, Status, g_gradient, minimize_total
from .kinetic import BilinearKinetic, as_kinetic
from .polytope import DelzantPolytope, Region
from .potential import PotentialField, custom, v_eval

__all__ = [
    "CertificateViolation",
    "InversionError",
    "Sample",
    "ReconstructionResult",
    "ClassicalPair",
    "solve_x_from_eta",
    "reconstruct_v",
    "classical_legendre",
    "conjugate_potential",
    "double_conjugate",
]

RESIDUAL_TOL = 1e-8
MAX_ITER = 200
COND_LIMIT = 1e12


class InversionError(RuntimeError):
    pass


class CertificateViolation(InversionError):
    """The mixed Hessian is (numerically) singular along the Newton path."""


@dataclass
class Sample:
    alpha: np.ndarray
    x_of_alpha: Optional[np.ndarray]
    v_value: float
    v_grad: Optional[np.ndarray]
    newton_iters: int
    residual: float
    ok: bool = True
    in_region: bool = True
    error: str = ""


@dataclass
class ReconstructionResult:
    samples: list
    anchor: Optional[dict] = None
    offset: float = 0.0
    note: str = "V is determined up to an additive constant"

    @property
    def good(self) -> list:
        return [s for s in self.samples if s.ok]

    def points(self) -> np.ndarray:
        return np.array([s.x_of_alpha for s in self.good])

    def values(self) -> np.ndarray:
        return np.array([s.v_value for s in self.good])

    def gradients(self) -> np.ndarray:
        return np.array([s.v_grad for s in self.good])


def solve_x_from_eta(kin, alpha, eta, x0, max_iter: int = MAX_ITER) -> tuple[np.ndarray, int, float]:
    """Newton on r(x) = dW/dalpha(x, alpha) - eta.

    The Jacobian is the mixed block (symmetric).  Steps keep 5% of the
    distance to the boundary and backtrack on |r|.  Returns
    ``(x, iterations, |r|)``.
    """
    kin = as_kinetic(kin)
    alpha = np.asarray(alpha, dtype=float)
    eta = np.asarray(eta, dtype=float)
    x = np.array(x0, dtype=float)
    if not kin.contains(x):
        raise ValueError(f"starting point {x.tolist()} is not interior")
    tol = 1e-10 * (1.0 + np.linalg.norm(eta))
    ke = kin.evaluate(x, alpha)
    r = ke.grad_alpha - eta
    rn = float(np.linalg.norm(r))
    for it in range(max_iter + 1):
        if rn <= tol:
            return x, it, rn
        if it == max_iter:
            break
        J = ke.mixed_hess
        if np.linalg.cond(J) > COND_LIMIT:
            raise CertificateViolation(
                f"mixed Hessian singular at x={x.tolist()}, alpha={alpha.tolist()}")
        dx = -np.linalg.solve(J, r)
        t_max = kin.step_limit(x, dx)
        t = 1.0 if not math.isfinite(t_max) else min(1.0, 0.95 * t_max)
        while True:
            xn = x + t * dx
            try:
                ken = kin.evaluate(xn, alpha)
                rnew = ken.grad_alpha - eta
                rnn = float(np.linalg.norm(rnew))
            except ValueError:
                rnn = math.inf
            if rnn <= (1.0 - 1e-4 * t) * rn or rnn <= tol:
                break
            t *= 0.5
            if t < 1e-14:
                raise InversionError(f"line search stalled at x={x.tolist()}, |r|={rn:.3e}")
        x, ke, r, rn = xn, ken, rnew, rnn
    raise InversionError(f"no convergence in {max_iter} iterations, |r|={rn:.3e}")


def _g_and_eta(g_source, alpha, kin, mode: str):
    if isinstance(g_source, GTable):
        k = g_source.index_of(alpha)
        res = g_source.results[k]
        if not res.converged:
            raise InversionError(f"forward solve at alpha={alpha.tolist()} did not converge")
        if mode == "envelope":
            return res.g_value, g_gradient(g_source, alpha, kin)
        return res.g_value, g_gradient(g_source, alpha)
    g, eta = g_source(alpha)
    return float(g), np.asarray(eta, dtype=float)


def _alphas_for(g_source, alphas, mode):
    if alphas is not None:
        return np.atleast_2d(np.asarray(alphas, dtype=float))
    if not isinstance(g_source, GTable):
        raise ValueError("an oracle g_source needs an explicit list of alphas")
    grid = g_source.grid
    if mode == "envelope":
        return grid
    res = g_source.box.resolution
    keep = []
    for k in range(len(grid)):
        idx = np.unravel_index(k, res)
        if all(0 < i < r - 1 for i, r in zip(idx, res)):
            keep.append(k)
    return grid[keep]


def reconstruct_v(kin, g_source, region: Optional[Region] = None, alphas=None,
                  mode: str = "envelope", x0=None, anchor: Optional[dict] = None
                  ) -> ReconstructionResult:
    """Reconstruct V at the points x(alpha) from the forward data.

    ``g_source`` is a GTable or a callable ``alpha -> (G, dG/dalpha)``.
    For a table, ``mode="envelope"`` takes dG/dalpha from the envelope
    identity at the stored minimizer and ``mode="fd"`` from central
    differences over the grid (interior nodes only, O(h^2) error).

    Weights are processed in row-major order with continuation: each
    Newton solve starts from the previous sample's x; on failure it is
    retried from ``x0`` (or the region's representative point).

    ``anchor = {"point": x, "value": v}`` shifts all values so that the
    sample nearest to ``x`` takes value ``v``.  Without it the values are
    reported as given (G carries no additive constant here).
    """
    if mode not in ("envelope", "fd"):
        raise ValueError("mode must be 'envelope' or 'fd'")
    kin = as_kinetic(kin)
    P = getattr(kin, "polytope", None) or getattr(kin, "domain", None)
    if x0 is not None:
        start = np.asarray(x0, dtype=float)
    elif region is not None and P is not None:
        start = region.representative(P)
    else:
        start = None
    samples = []
    prev = start
    for alpha in _alphas_for(g_source, alphas, mode):
        try:
            g, eta = _g_and_eta(g_source, alpha, kin, mode)
        except (InversionError, ValueError, KeyError) as exc:
            samples.append(Sample(alpha, None, math.nan, None, 0, math.inf, False, False, str(exc)))
            continue
        tries = [p for p in (prev, start) if p is not None] or [kin.default_start(alpha)]
        sol, err = None, ""
        for p in tries:
            try:
                sol = solve_x_from_eta(kin, alpha, eta, p)
                break
            except (InversionError, ValueError) as exc:
                err = str(exc)
        if sol is None:
            samples.append(Sample(alpha, None, math.nan, None, 0, math.inf, False, False, err))
            continue
        x, iters, rn = sol
        ke = kin.evaluate(x, alpha)
        inside = True if region is None or P is None else region.contains(P, x)
        samples.append(Sample(alpha, x, g - ke.value, -ke.grad_x, iters, rn,
                              ok=rn <= RESIDUAL_TOL, in_region=inside))
        prev = x
    out = ReconstructionResult(samples)
    if anchor is not None:
        good = out.good
        if not good:
            raise InversionError("no successful samples to anchor")
        pts = np.array([s.x_of_alpha for s in good])
        k = int(np.argmin(np.linalg.norm(pts - np.asarray(anchor["point"], float), axis=1)))
        shift = float(anchor["value"]) - good[k].v_value
        for s in good:
            s.v_value += shift
        out.anchor = {"point": list(map(float, anchor["point"])), "value": float(anchor["value"]),
                      "matched_x": good[k].x_of_alpha.tolist()}
        out.offset = shift
        out.note = "additive constant fixed by anchor"
    return out


# Classical case -------------------------------------------------------------


@dataclass
class ClassicalPair:
    F: PotentialField
    y_grid: np.ndarray
    G: np.ndarray
    x_of_y: np.ndarray
    sign: float = -1.0
    inverse_residual: float = 0.0
    results: list = field(default_factory=list)


def _require_pd(F: PotentialField, x, what: str):
    h = v_eval(F, x).hess
    if np.linalg.eigvalsh(0.5 * (h + h.T))[0] <= 0:
        raise ValueError(f"F is not strictly convex at {what} {np.asarray(x).tolist()}")


def classical_legendre(F: PotentialField, y_grid, sign: float = -1.0,
                       domain: Optional[DelzantPolytope] = None, x0=None) -> ClassicalPair:
    """G(y) = min_x F(x) + sign * x.y, by the same Newton solver as the forward map.

    With the default ``sign=-1`` this is G(y) = -F*(y).  The gradient maps
    are checked to be mutually inverse: dF/dx(x(y)) = -sign * y.
    """
    kin = BilinearKinetic(F.dim, sign, domain)
    ys = np.atleast_2d(np.asarray(y_grid, dtype=float))
    if ys.shape[1] != F.dim:
        ys = ys.reshape(-1, F.dim)
    start = kin.default_start(ys[0]) if x0 is None else np.asarray(x0, dtype=float)
    _require_pd(F, start, "start point")
    prev = start
    G, X, results = [], [], []
    worst = 0.0
    for y in ys:
        r = minimize_total(kin, F, y, prev)
        if not r.converged:
            r = minimize_total(kin, F, y, start)
        if r.status is Status.INDEFINITE_HESSIAN:
            raise ValueError(f"F is not strictly convex near {r.x_star.tolist()}")
        if not r.converged:
            raise InversionError(f"classical transform failed at y={y.tolist()}: {r.status.value}")
        _require_pd(F, r.x_star, "minimizer")
        worst = max(worst, float(np.linalg.norm(v_eval(F, r.x_star).grad + sign * y)))
        G.append(r.g_value)
        X.append(r.x_star)
        results.append(r)
        prev = r.x_star
    return ClassicalPair(F, ys, np.array(G), np.array(X), float(sign), worst, results)


def conjugate_potential(F: PotentialField, x0=None) -> PotentialField:
    """F*(y) = max_x x.y - F(x) as a potential, evaluated by inner Newton solves.

    grad F*(y) = x(y) and hess F*(y) = (hess F(x(y)))^{-1}.
    """
    kin = BilinearKinetic(F.dim, -1.0)
    start = np.zeros(F.dim) if x0 is None else np.asarray(x0, dtype=float)

    def ev(y):
        r = minimize_total(kin, F, y, start)
        if not r.converged:
            raise InversionError(f"inner conjugate solve failed at y={np.asarray(y).tolist()}")
        h = v_eval(F, r.x_star).hess
        return -r.g_value, r.x_star, np.linalg.inv(h)

    return custom(ev, F.dim, label="conjugate(" + F.fingerprint() + ")")


def double_conjugate(F: PotentialField, x_grid, x0=None) -> np.ndarray:
    """F** on ``x_grid`` via two applications of the classical transform.

    With G1 = classical_legendre(F) = -F*, the second application to F*
    gives -F**; the returned array is F** (equal to F for strictly convex F).
    """
    Fstar = conjugate_potential(F, x0)
    pair = classical_legendre(Fstar, x_grid, sign=-1.0)
    return -pair.G
