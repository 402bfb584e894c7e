"""Forward map: G(alpha) = min_x V(x) + W(x, alpha) over the polytope interior."""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinetic import as_kinetic
from .potential import PotentialField, v_eval

__all__ = [
    "Status",
    "MinResult",
    "GTable",
    "AlphaBox",
    "minimize_total",
    "sample_g",
    "g_gradient",
    "envelope_fd_check",
    "GRAD_TOL",
    "FACET_FLOOR",
]

GRAD_TOL = 1e-10
FACET_FLOOR = 1e-14
MAX_ITER = 200
TAU = 0.95
ARMIJO_C = 1e-4


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    INDEFINITE_HESSIAN = "IndefiniteHessian"
    BOUNDARY_ESCAPE = "BoundaryEscape"


@dataclass
class MinResult:
    alpha: np.ndarray
    x_star: np.ndarray
    g_value: float
    grad_norm: float
    hess_min_eig: float
    iterations: int
    status: Status
    grad_alpha: Optional[np.ndarray] = None

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


@dataclass(frozen=True)
class AlphaBox:
    """Axis-aligned weight box sampled at ``resolution[j]`` points per axis (endpoints included)."""

    lower: tuple
    upper: tuple
    resolution: tuple

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        res = self.resolution
        if isinstance(res, int):
            res = (res,) * len(self.lower)
        object.__setattr__(self, "resolution", tuple(int(r) for r in res))
        if not (len(self.lower) == len(self.upper) == len(self.resolution)):
            raise ValueError("alpha box bounds and resolution must have equal length")
        if any(r < 0 for r in self.resolution):
            raise ValueError("resolution must be nonnegative")

    @property
    def axes(self) -> list[np.ndarray]:
        out = []
        for lo, hi, k in zip(self.lower, self.upper, self.resolution):
            out.append(np.array([lo]) if k == 1 else np.linspace(lo, hi, k))
        return out

    def grid(self) -> np.ndarray:
        """Row-major grid (last axis fastest), shape (prod(resolution), n)."""
        n = len(self.lower)
        if any(k == 0 for k in self.resolution):
            return np.empty((0, n))
        return np.array(list(itertools.product(*self.axes)), dtype=float).reshape(-1, n)


@dataclass
class GTable:
    grid: np.ndarray
    results: list
    box: Optional[AlphaBox] = None
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.results)

    @property
    def partial(self) -> bool:
        return not all(r.converged for r in self.results)

    @property
    def g_values(self) -> np.ndarray:
        return np.array([r.g_value for r in self.results])

    @property
    def x_stars(self) -> np.ndarray:
        return np.array([r.x_star for r in self.results]).reshape(len(self.results), -1)

    def index_of(self, alpha) -> int:
        alpha = np.asarray(alpha, dtype=float)
        d = np.linalg.norm(self.grid - alpha, axis=1)
        k = int(np.argmin(d))
        if d[k] > 1e-12 * (1.0 + np.linalg.norm(alpha)):
            raise KeyError(f"alpha {alpha.tolist()} is not a grid node")
        return k


def _fraction_to_boundary(kin, x, dx) -> float:
    t_max = kin.step_limit(x, dx)
    return 1.0 if not math.isfinite(t_max) else min(1.0, TAU * t_max)


def minimize_total(kin, V: PotentialField, alpha, x0=None) -> MinResult:
    """Damped Newton on f(x) = V(x) + W(x, alpha).

    ``kin`` is a polytope or a kinetic term.  Steps are capped at 95% of the
    distance to the nearest facet and backtracked (Armijo, halving).  The
    Hessian must stay positive definite along the path; otherwise the
    result carries IndefiniteHessian.
    """
    kin = as_kinetic(kin)
    alpha = np.asarray(alpha, dtype=float)
    x = kin.default_start(alpha) if x0 is None else np.array(x0, dtype=float)
    if not kin.contains(x):
        raise ValueError(f"starting point {x.tolist()} is not interior")

    def total(z):
        ke = kin.evaluate(z, alpha)
        ve = v_eval(V, z)
        return ve.value + ke.value, ve.grad + ke.grad_x, ve.hess + ke.hess_xx, ke

    def result(status, it):
        h = 0.5 * (H + H.T)
        return MinResult(alpha, x, f, float(np.linalg.norm(g)), float(np.linalg.eigvalsh(h)[0]),
                         it, status, ke.grad_alpha)

    f, g, H, ke = total(x)
    for it in range(MAX_ITER + 1):
        if np.linalg.norm(g) <= GRAD_TOL * (1.0 + abs(f)):
            status = Status.CONVERGED if np.linalg.eigvalsh(0.5 * (H + H.T))[0] > 0 else \
                Status.INDEFINITE_HESSIAN
            return result(status, it)
        if it == MAX_ITER:
            break
        try:
            C = np.linalg.cholesky(0.5 * (H + H.T))
        except np.linalg.LinAlgError:
            return result(Status.INDEFINITE_HESSIAN, it)
        dx = -np.linalg.solve(C.T, np.linalg.solve(C, g))
        t = _fraction_to_boundary(kin, x, dx)
        gd = float(g @ dx)
        slack_tol = 4 * np.finfo(float).eps * abs(f)
        while True:
            xn = x + t * dx
            try:
                fn, gn, Hn, ken = total(xn)
            except ValueError:
                fn = math.inf
            if fn <= f + ARMIJO_C * t * gd + slack_tol:
                break
            t *= 0.5
            if t < 1e-16:
                return result(Status.MAX_ITER, it)
        x, f, g, H, ke = xn, fn, gn, Hn, ken
        if np.min(kin.slack(x)) < FACET_FLOOR:
            return result(Status.BOUNDARY_ESCAPE, it + 1)
    return result(Status.MAX_ITER, MAX_ITER)


def _multistart_spread(kin, V, alpha, center, g_ref) -> float:
    n = kin.dim
    spread = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=n):
        dx = 0.5 * np.array(signs)
        t = kin.step_limit(center, dx)
        x0 = center + (min(1.0, 0.5 * t) if math.isfinite(t) else 1.0) * dx
        r = minimize_total(kin, V, alpha, x0)
        if r.converged:
            spread = max(spread, abs(r.g_value - g_ref))
    return spread


def _sweep(kin, V, alphas, x0, warm: bool) -> list:
    out = []
    prev = x0
    for a in alphas:
        r = minimize_total(kin, V, a, prev)
        if not r.converged and prev is not None and warm:
            r = minimize_total(kin, V, a, x0)
        out.append(r)
        if warm and r.converged:
            prev = r.x_star
    return out


def sample_g(kin, V: PotentialField, alpha_box: AlphaBox, x0=None, warm: bool = True,
             threads: int = 1, multistart: bool = False) -> GTable:
    """Sweep the weight grid row-major, warm-starting each solve from its predecessor.

    With ``threads > 1`` rows are solved independently (cold start at the
    beginning of each row, warm within the row).
    """
    kin = as_kinetic(kin)
    grid = alpha_box.grid()
    meta = {"kinetic": kin.fingerprint(), "potential": V.fingerprint(), "warm_start": warm,
            "threads": threads}
    if len(grid) == 0:
        return GTable(grid, [], alpha_box, meta)
    if threads > 1:
        row = alpha_box.resolution[-1]
        rows = [grid[i:i + row] for i in range(0, len(grid), row)]
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda r: _sweep(kin, V, r, x0, True), rows))
        results = [r for p in parts for r in p]
    else:
        results = _sweep(kin, V, grid, x0, warm)
    if multistart:
        # starts fan out from the domain's default point, not the caller's x0
        flagged = [i for i, r in enumerate(results) if r.converged
                   and _multistart_spread(kin, V, r.alpha, kin.default_start(r.alpha),
                                          r.g_value) > 1e-8]
        meta["NonUniqueMinimum"] = flagged
    meta["partial"] = not all(r.converged for r in results)
    return GTable(grid, results, alpha_box, meta)


def g_gradient(source, alpha, kin=None) -> np.ndarray:
    """dG/dalpha.

    ``source`` may be a MinResult (envelope identity: grad_alpha W at the
    minimizer), a GTable with ``kin=None`` (central differences over the
    grid; interior nodes only), or a GTable with ``kin`` given (envelope
    identity at the stored minimizer).
    """
    if isinstance(source, MinResult):
        return np.array(source.grad_alpha)
    if not isinstance(source, GTable):
        raise TypeError("source must be a MinResult or GTable")
    k = source.index_of(alpha)
    if kin is not None:
        r = source.results[k]
        return as_kinetic(kin).evaluate(r.x_star, r.alpha).grad_alpha
    box = source.box
    if box is None:
        raise ValueError("finite differences need the table's alpha box")
    res = box.resolution
    idx = np.unravel_index(k, res)
    axes = box.axes
    grad = np.empty(len(res))
    g = source.g_values
    for j in range(len(res)):
        if idx[j] == 0 or idx[j] == res[j] - 1:
            raise ValueError(f"alpha {np.asarray(alpha).tolist()} is on the grid boundary (axis {j})")
        up = list(idx)
        dn = list(idx)
        up[j] += 1
        dn[j] -= 1
        h2 = axes[j][up[j]] - axes[j][dn[j]]
        grad[j] = (g[np.ravel_multi_index(up, res)] - g[np.ravel_multi_index(dn, res)]) / h2
    return grad


def envelope_fd_check(kin, V: PotentialField, table: GTable, h: float = 1e-5) -> float:
    """Max |central-difference dG/dalpha - grad_alpha W(x*, alpha)| over the table.

    The difference quotient re-solves the forward problem at alpha +- h e_j,
    warm-started at the stored minimizer.
    """
    kin = as_kinetic(kin)
    worst = 0.0
    for r in table.results:
        if not r.converged:
            continue
        fd = np.empty(len(r.alpha))
        for j in range(len(r.alpha)):
            e = np.zeros(len(r.alpha))
            e[j] = h
            gp = minimize_total(kin, V, r.alpha + e, r.x_star)
            gm = minimize_total(kin, V, r.alpha - e, r.x_star)
            if not (gp.converged and gm.converged):
                return math.inf
            fd[j] = (gp.g_value - gm.g_value) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - r.grad_alpha))))
    return worst
