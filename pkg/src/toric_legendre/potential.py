"""Potentials V on the polytope interior and checks of the hypotheses on V.

All hypothesis checks are grid-based: a passing entry certifies the
condition on the sampled points only, and the entry says so.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from .polytope import DelzantPolytope, Region, contains_interior

__all__ = [
    "PotentialField",
    "PotentialEval",
    "HypothesisEntry",
    "HypothesisReport",
    "quadratic",
    "sum_composed",
    "separable",
    "custom",
    "zero_potential",
    "v_eval",
    "check_strict_convexity",
    "check_sign_conditions",
    "check_evenness",
    "check_properness",
    "SIGN_CONDITIONS",
]

MAX_DEGREE = 16
SAMPLE_NOTE = "certificate over the sampled points only"


@dataclass
class PotentialEval:
    value: float
    grad: np.ndarray
    hess: np.ndarray


@dataclass(frozen=True)
class PotentialField:
    """V in one of four families.

    quadratic:    1/2 (x - center)^T Q (x - center) + const
    sum_composed: f(x_1 + ... + x_n), f a polynomial (ascending coefficients)
    separable:    sum_i p_i(x_i)
    custom:       ``evaluator(x) -> (value, grad, hess)``; must be reentrant
    """

    family: str
    dim: int
    Q: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    const: float = 0.0
    coeffs: Optional[tuple] = None
    evaluator: Optional[Callable] = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.family not in ("quadratic", "sum_composed", "separable", "custom"):
            raise ValueError(f"unknown potential family {self.family!r}")

    def __call__(self, x) -> float:
        return v_eval(self, x).value

    def fingerprint(self) -> str:
        if self.family == "quadratic":
            return f"quadratic:Q={self.Q.tolist()}:c={self.center.tolist()}:k={self.const!r}"
        if self.family in ("sum_composed", "separable"):
            return f"{self.family}:{self.coeffs}"
        return f"custom:{self.label or id(self.evaluator)}"

    def to_config(self) -> dict:
        if self.family == "quadratic":
            return {"family": "quadratic", "Q": self.Q.tolist(), "center": self.center.tolist(),
                    "const": self.const}
        if self.family == "sum_composed":
            return {"family": "sum_composed", "dim": self.dim, "coeffs": list(self.coeffs)}
        if self.family == "separable":
            return {"family": "separable", "coeffs": [list(c) for c in self.coeffs]}
        raise ValueError("custom potentials cannot be serialized")


def _freeze(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _check_poly(c) -> tuple:
    c = tuple(float(v) for v in c)
    if len(c) == 0:
        raise ValueError("empty polynomial")
    if len(c) - 1 > MAX_DEGREE:
        raise ValueError(f"polynomial degree above {MAX_DEGREE}")
    return c


def quadratic(Q, center, const: float = 0.0) -> PotentialField:
    """Quadratic potential; Q must be symmetric (convexity is checked, not enforced)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    center = np.atleast_1d(np.asarray(center, dtype=float))
    n = center.shape[0]
    if Q.shape != (n, n):
        raise ValueError("Q must be n x n with n = len(center)")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-14):
        raise ValueError("Q must be symmetric")
    return PotentialField("quadratic", n, Q=_freeze(Q), center=_freeze(center), const=float(const))


def sum_composed(coeffs, dim: int) -> PotentialField:
    return PotentialField("sum_composed", int(dim), coeffs=_check_poly(coeffs))


def separable(coeffs_list) -> PotentialField:
    cs = tuple(_check_poly(c) for c in coeffs_list)
    return PotentialField("separable", len(cs), coeffs=cs)


def custom(evaluator: Callable, dim: int, label: str = "") -> PotentialField:
    return PotentialField("custom", int(dim), evaluator=evaluator, label=label)


def zero_potential(dim: int) -> PotentialField:
    return quadratic(np.zeros((dim, dim)), np.zeros(dim), 0.0)


def v_eval(V: PotentialField, x) -> PotentialEval:
    x = np.asarray(x, dtype=float)
    if x.shape != (V.dim,):
        raise ValueError(f"expected point of dimension {V.dim}, got shape {x.shape}")
    if V.family == "quadratic":
        r = x - V.center
        Qr = V.Q @ r
        return PotentialEval(0.5 * float(r @ Qr) + V.const, Qr, np.array(V.Q))
    if V.family == "sum_composed":
        t = float(np.sum(x))
        c = np.array(V.coeffs)
        f = npoly.polyval(t, c)
        f1 = npoly.polyval(t, npoly.polyder(c)) if len(c) > 1 else 0.0
        f2 = npoly.polyval(t, npoly.polyder(c, 2)) if len(c) > 2 else 0.0
        n = V.dim
        return PotentialEval(float(f), np.full(n, f1), np.full((n, n), f2))
    if V.family == "separable":
        vals, g, h = 0.0, np.empty(V.dim), np.zeros((V.dim, V.dim))
        for i, c in enumerate(V.coeffs):
            c = np.array(c)
            vals += npoly.polyval(x[i], c)
            g[i] = npoly.polyval(x[i], npoly.polyder(c)) if len(c) > 1 else 0.0
            h[i, i] = npoly.polyval(x[i], npoly.polyder(c, 2)) if len(c) > 2 else 0.0
        return PotentialEval(float(vals), g, h)
    value, grad, hess = V.evaluator(x)
    return PotentialEval(float(value), np.asarray(grad, dtype=float).reshape(V.dim),
                         np.asarray(hess, dtype=float).reshape(V.dim, V.dim))


# Hypothesis checks ---------------------------------------------------------


@dataclass
class HypothesisEntry:
    name: str
    passed: bool
    margin: float
    witness: Optional[list]
    samples: int
    note: str = SAMPLE_NOTE

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class HypothesisReport:
    checked: list = field(default_factory=list)

    def add(self, entry: HypothesisEntry) -> "HypothesisReport":
        self.checked.append(entry)
        return self

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.checked)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checked": [e.to_dict() for e in self.checked]}


def _entry_from(name: str, points: np.ndarray, margins: np.ndarray, passed_fn,
                note: str = SAMPLE_NOTE) -> HypothesisEntry:
    if len(margins) == 0:
        return HypothesisEntry(name, False, math.nan, None, 0, "no sample points")
    k = int(np.argmin(margins))
    m = float(margins[k])
    return HypothesisEntry(name, bool(passed_fn(m)), m, np.asarray(points[k]).tolist(),
                           len(margins), note)


def check_strict_convexity(V: PotentialField, P: DelzantPolytope, region: Optional[Region] = None,
                           strict: bool = True) -> HypothesisEntry:
    """Minimum Hessian eigenvalue over the sampled region.

    ``strict=True`` passes iff the minimum is > 0; ``strict=False`` checks
    plain convexity (minimum >= -1e-12 times the Hessian scale).
    """
    region = region or Region.full()
    pts = region.sample(P)
    margins = np.empty(len(pts))
    scales = np.empty(len(pts))
    for i, p in enumerate(pts):
        h = v_eval(V, p).hess
        margins[i] = np.linalg.eigvalsh(0.5 * (h + h.T))[0]
        scales[i] = max(1.0, float(np.abs(h).max()))
    if strict:
        return _entry_from("strict_convexity", pts, margins, lambda m: m > 0.0)
    tol = 1e-12 * (scales.max() if len(scales) else 1.0)
    return _entry_from("convexity", pts, margins, lambda m: m >= -tol)


def _simplex_slice(n: int, total: float, k: int) -> np.ndarray:
    """Cell-centred points of {x_i > 0, sum x = total}."""
    if n == 1:
        return np.array([[total]])
    pts = []
    axes = (np.arange(k) + 0.5) / k * total
    for head in itertools.product(axes, repeat=n - 1):
        last = total - sum(head)
        if last > 0:
            pts.append(list(head) + [last])
    return np.array(pts)


def _hirzebruch_n(P: DelzantPolytope) -> int:
    if P.kind != "hirzebruch":
        raise ValueError("condition needs a Hirzebruch polytope")
    return P.param_dict["n"]


def _box_c(P: DelzantPolytope) -> np.ndarray:
    if P.kind != "box":
        raise ValueError("condition needs a centered box polytope")
    return np.array(P.param_dict["c"], dtype=float)


def _cond_cpn_sum_half(V, P, k):
    # On sum x = 1/2 every partial derivative is negative.
    if P.kind != "simplex":
        raise ValueError("condition cpn_sum_half needs a simplex polytope")
    pts = _simplex_slice(P.dim, 0.5, k)
    return pts, np.array([-np.max(v_eval(V, p).grad) for p in pts])


def _cond_box_monotone(V, P, k):
    # dV/dy_i < 0 on 0 < y_i < c_i
    c = _box_c(P)
    axes = [(np.arange(k) + 0.5) / k * ci for ci in c]
    pts = np.array(list(itertools.product(*axes)))
    return pts, np.array([-np.max(v_eval(V, p).grad) for p in pts])


def _cond_box_hyperplane(V, P, k):
    # for each i, dV/dy_i < 0 on the hyperplane y_i = 0 inside the box
    c = _box_c(P)
    n = len(c)
    pts, margins = [], []
    for i in range(n):
        axes = [(np.arange(k) + 0.5) / k * 2 * cj - cj for cj in c]
        axes[i] = np.array([0.0])
        for p in itertools.product(*axes):
            p = np.array(p)
            pts.append(p)
            margins.append(-v_eval(V, p).grad[i])
    return np.array(pts), np.array(margins)


def _cond_hirzebruch_line(V, P, k):
    # dV/dx2 > 0 on x2 = 1/2
    n = _hirzebruch_n(P)
    hi = n + 1 - n * 0.5
    pts = np.array([[(j + 0.5) / k * hi, 0.5] for j in range(k)])
    return pts, np.array([v_eval(V, p).grad[1] for p in pts])


def _cond_hirzebruch_curve(V, P, k):
    # all partials negative on the critical curve of W
    from .certify import hirzebruch_curve_x1

    n = _hirzebruch_n(P)
    pts = []
    for j in range(k):
        x2 = (j + 0.5) / k * 0.5
        x1 = hirzebruch_curve_x1(n, x2)
        p = np.array([x1, x2])
        if contains_interior(P, p):
            pts.append(p)
    pts = np.array(pts)
    return pts, np.array([-np.max(v_eval(V, p).grad) for p in pts])


def _cond_orthant_monotone(V, P, k):
    # dV/dr_i > 0 on the sampled orthant box (0, upper]^n
    if P.kind != "orthant":
        raise ValueError("condition needs an orthant polytope")
    axes = [(np.arange(k) + 0.5) / k * 4.0 for _ in range(P.dim)]
    pts = np.array(list(itertools.product(*axes)))
    return pts, np.array([np.min(v_eval(V, p).grad) for p in pts])


SIGN_CONDITIONS = {
    "cpn_sum_half": _cond_cpn_sum_half,
    "box_monotone": _cond_box_monotone,
    "box_hyperplane": _cond_box_hyperplane,
    "hirzebruch_line": _cond_hirzebruch_line,
    "hirzebruch_curve": _cond_hirzebruch_curve,
    "orthant_monotone": _cond_orthant_monotone,
}


def check_sign_conditions(V: PotentialField, condition: str, P: DelzantPolytope,
                          grid: int = 32) -> HypothesisEntry:
    """Sample the set named by ``condition`` and report the worst sign margin.

    Conditions: cpn_sum_half, box_monotone, box_hyperplane, hirzebruch_line,
    hirzebruch_curve, orthant_monotone.  A positive margin means the strict
    inequality holds at every sample.
    """
    try:
        cond = SIGN_CONDITIONS[condition]
    except KeyError:
        raise ValueError(f"unknown sign condition {condition!r}") from None
    pts, margins = cond(V, P, grid)
    return _entry_from(condition, pts, margins, lambda m: m > 0.0)


def check_evenness(V: PotentialField, P: DelzantPolytope, grid: int = 8, flips: int = 16,
                   seed: int = 0) -> HypothesisEntry:
    """max |V(y) - V(sigma y)| over sign flips sigma; passes iff <= 1e-12."""
    c = _box_c(P)
    rng = np.random.default_rng(seed)
    axes = [(np.arange(grid) + 0.5) / grid * 2 * ci - ci for ci in c]
    pts = np.array(list(itertools.product(*axes)))
    worst, witness = 0.0, None
    for p in pts:
        v0 = v_eval(V, p).value
        for sigma in rng.choice([-1.0, 1.0], size=(flips, len(c))):
            d = abs(v_eval(V, sigma * p).value - v0)
            if d > worst or witness is None:
                worst, witness = d, p.tolist()
    # margin is reported as tolerance minus deviation so that positive means pass
    return HypothesisEntry("evenness", worst <= 1e-12, 1e-12 - worst, witness,
                           len(pts) * flips, SAMPLE_NOTE + f"; max deviation {worst:.3e}")


def check_properness(V: PotentialField, P: DelzantPolytope, radius: float = 10.0,
                     rays: int = 64, steps: int = 16, seed: int = 0) -> HypothesisEntry:
    """Heuristic properness check on the orthant along random rays.

    Passes iff V increases monotonically along every sampled ray beyond
    ``radius``.  This is a heuristic: growth outside the sampled range is
    not examined.
    """
    if P.kind != "orthant":
        raise ValueError("properness check is defined for the orthant")
    rng = np.random.default_rng(seed)
    dirs = np.abs(rng.normal(size=(rays, P.dim)))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    ts = radius * (1.0 + np.arange(steps + 1) / 4.0)
    pts, margins = [], []
    for u in dirs:
        vals = np.array([v_eval(V, t * u).value for t in ts])
        inc = np.diff(vals)
        k = int(np.argmin(inc))
        pts.append(ts[k] * u)
        margins.append(inc[k])
    return _entry_from("properness", np.array(pts), np.array(margins), lambda m: m > 0.0,
                       note="heuristic radial check beyond r=%g; " % radius + SAMPLE_NOTE)
