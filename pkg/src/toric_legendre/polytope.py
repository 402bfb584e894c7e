"""Delzant polytopes as facet inequality systems.

A polytope is stored as ``l_i(x) = <normal_i, x> + offset_i > 0`` for
``i = 0..d-1``.  Normals are exact integers, offsets are floats.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "DelzantPolytope",
    "Vertex",
    "Region",
    "DelzantReport",
    "UnboundedPolytopeError",
    "facet_values",
    "contains_interior",
    "make_simplex",
    "make_box",
    "make_hirzebruch",
    "make_orthant",
    "enumerate_vertices",
    "verify_delzant",
    "analytic_center",
    "bounding_box",
    "interior_point",
    "integer_det",
]

MAX_DIM = 8


class UnboundedPolytopeError(ValueError):
    """Raised by operations that need a bounded polytope."""


def _as_int_matrix(normals) -> tuple[tuple[int, ...], ...]:
    rows = []
    for row in normals:
        ints = []
        for v in row:
            iv = int(round(float(v)))
            if abs(float(v) - iv) > 0:
                raise ValueError(f"normal entries must be integers, got {v!r}")
            ints.append(iv)
        rows.append(tuple(ints))
    return tuple(rows)


@dataclass(frozen=True)
class DelzantPolytope:
    """Facet system ``L x + offsets > 0`` with primitive integer normals.

    ``kind`` and ``params`` record which constructor built the polytope
    (``"custom"`` otherwise); a few region predicates depend on them.
    """

    normals: tuple[tuple[int, ...], ...]
    offsets: tuple[float, ...]
    kind: str = "custom"
    params: tuple = ()
    _L: np.ndarray = field(init=False, repr=False, compare=False)
    _b: np.ndarray = field(init=False, repr=False, compare=False)
    _bounded: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        normals = _as_int_matrix(self.normals)
        offsets = tuple(float(o) for o in self.offsets)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        if not normals:
            raise ValueError("polytope needs at least one facet")
        n = len(normals[0])
        if n < 1 or n > MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {n}")
        if any(len(r) != n for r in normals):
            raise ValueError("ragged normal matrix")
        if len(offsets) != len(normals):
            raise ValueError("need one offset per facet")
        if not all(math.isfinite(o) for o in offsets):
            raise ValueError("offsets must be finite")
        for i, row in enumerate(normals):
            if math.gcd(*row) != 1:
                raise ValueError(f"normal {i} = {row} is not primitive")
        L = np.array(normals, dtype=float)
        b = np.array(offsets, dtype=float)
        L.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "_L", L)
        object.__setattr__(self, "_b", b)
        if _max_slack(L, b) <= 0.0:
            raise ValueError("polytope interior is empty")
        object.__setattr__(self, "_bounded", _recession_cone_trivial(L))

    @property
    def dim(self) -> int:
        return self._L.shape[1]

    @property
    def facet_count(self) -> int:
        return self._L.shape[0]

    @property
    def L(self) -> np.ndarray:
        """Normal matrix as floats, shape (d, n)."""
        return self._L

    @property
    def b(self) -> np.ndarray:
        return self._b

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def is_bounded(self) -> bool:
        return self._bounded

    def fingerprint(self) -> str:
        return f"{self.kind}{self.param_dict}|L={self.normals}|b={self.offsets}"

    def to_config(self) -> dict:
        if self.kind != "custom":
            return {"builtin": self.kind, "params": self.param_dict}
        return {"normals": [list(r) for r in self.normals], "offsets": list(self.offsets)}


@dataclass(frozen=True, eq=False)
class Vertex:
    point: np.ndarray
    active_facets: tuple[int, ...]


@dataclass
class DelzantReport:
    simple: bool
    smooth: bool
    failures: list = field(default_factory=list)
    vertices: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "simple": self.simple,
            "smooth": self.smooth,
            "failures": self.failures,
            "vertices": [
                {"point": v.point.tolist(), "active_facets": list(v.active_facets)}
                for v in self.vertices
            ],
        }


def _max_slack(L: np.ndarray, b: np.ndarray) -> float:
    # maximize t subject to L x + b >= t, t <= 1
    d, n = L.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-L, np.ones((d, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * n + [(None, 1.0)], method="highs")
    if res.status != 0:
        return -math.inf
    return float(res.x[-1])


def _recession_cone_trivial(L: np.ndarray) -> bool:
    # bounded iff no nonzero v with L v >= 0; probe each signed axis
    d, n = L.shape
    for j in range(n):
        for s in (1.0, -1.0):
            c = np.zeros(n)
            c[j] = -s
            res = linprog(c, A_ub=-L, b_ub=np.zeros(d), bounds=[(-1.0, 1.0)] * n, method="highs")
            if res.status == 0 and -res.fun > 1e-12:
                return False
    return True


def facet_values(P: DelzantPolytope, x) -> np.ndarray:
    """Return the d-vector ``l_i(x)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (P.dim,):
        raise ValueError(f"expected point of dimension {P.dim}, got shape {x.shape}")
    return P.L @ x + P.b


def contains_interior(P: DelzantPolytope, x) -> bool:
    return bool(np.all(facet_values(P, x) > 0.0))


def make_simplex(n: int) -> DelzantPolytope:
    """Moment simplex of CP^n: x_i > 0, 1 - sum(x) > 0."""
    if n < 1:
        raise ValueError("n must be positive")
    normals = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    normals.append(tuple([-1] * n))
    return DelzantPolytope(normals, [0.0] * n + [1.0], kind="simplex", params=(("n", n),))


def make_box(c: Sequence[float]) -> DelzantPolytope:
    """Centered box prod(-c_i, c_i), facets ordered c_i + x_i, c_i - x_i."""
    c = [float(v) for v in c]
    if not c or any(v <= 0 for v in c):
        raise ValueError("box half-widths must be positive")
    n = len(c)
    normals, offsets = [], []
    for i, ci in enumerate(c):
        e = [0] * n
        e[i] = 1
        normals.append(tuple(e))
        offsets.append(ci)
        e = [0] * n
        e[i] = -1
        normals.append(tuple(e))
        offsets.append(ci)
    return DelzantPolytope(normals, offsets, kind="box", params=(("c", tuple(c)),))


def make_hirzebruch(n: int) -> DelzantPolytope:
    """x1 > 0, x2 > 0, 1 - x2 > 0, n + 1 - x1 - n x2 > 0."""
    if n < 0 or int(n) != n:
        raise ValueError("Hirzebruch index must be a nonnegative integer")
    n = int(n)
    normals = [(1, 0), (0, 1), (0, -1), (-1, -n)]
    offsets = [0.0, 0.0, 1.0, float(n + 1)]
    return DelzantPolytope(normals, offsets, kind="hirzebruch", params=(("n", n),))


def make_orthant(n: int) -> DelzantPolytope:
    """Positive orthant x_i > 0 (unbounded; the R^{2n} example)."""
    if n < 1:
        raise ValueError("n must be positive")
    normals = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    return DelzantPolytope(normals, [0.0] * n, kind="orthant", params=(("n", n),))


def integer_det(M: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a small integer matrix by cofactor expansion."""
    M = [list(map(int, r)) for r in M]
    k = len(M)
    if k == 0:
        return 1
    if k == 1:
        return M[0][0]
    if k == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = 0
    for j in range(k):
        if M[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        total += (-1) ** j * M[0][j] * integer_det(minor)
    return total


def _active_tol(P: DelzantPolytope) -> np.ndarray:
    return 1e-12 * (1.0 + np.abs(P.b))


def enumerate_vertices(P: DelzantPolytope) -> list[Vertex]:
    """All vertices of a bounded polytope, with their active facets."""
    if not P.is_bounded():
        raise UnboundedPolytopeError("vertex enumeration needs a bounded polytope")
    n, d = P.dim, P.facet_count
    tol = _active_tol(P)
    found: dict[tuple, Vertex] = {}
    for subset in itertools.combinations(range(d), n):
        sub = [P.normals[i] for i in subset]
        if integer_det(sub) == 0:
            continue
        point = np.linalg.solve(P.L[list(subset)], -P.b[list(subset)])
        vals = facet_values(P, point)
        if np.any(vals < -tol):
            continue
        active = tuple(int(i) for i in np.flatnonzero(np.abs(vals) <= tol))
        key = tuple(np.round(point, 10))
        if key not in found:
            found[key] = Vertex(point=point, active_facets=active)
    return sorted(found.values(), key=lambda v: tuple(v.point))


def verify_delzant(P: DelzantPolytope) -> DelzantReport:
    """Check simplicity and smoothness at every vertex.

    An unbounded polytope is reported as a failure instead of raising.
    """
    if not P.is_bounded():
        return DelzantReport(False, False, ["polytope is unbounded; Delzant check not applicable"])
    verts = enumerate_vertices(P)
    simple = smooth = True
    failures = []
    for v in verts:
        if len(v.active_facets) != P.dim:
            simple = False
            failures.append(
                f"vertex {v.point.tolist()}: {len(v.active_facets)} active facets, expected {P.dim}"
            )
            continue
        det = integer_det([P.normals[i] for i in v.active_facets])
        if abs(det) != 1:
            smooth = False
            failures.append(f"vertex {v.point.tolist()}: active normals have determinant {det}")
    return DelzantReport(simple, smooth, failures, verts)


def bounding_box(P: DelzantPolytope) -> tuple[np.ndarray, np.ndarray]:
    if not P.is_bounded():
        raise UnboundedPolytopeError("bounding box needs a bounded polytope")
    n = P.dim
    lo, hi = np.empty(n), np.empty(n)
    for j in range(n):
        c = np.zeros(n)
        c[j] = 1.0
        lo[j] = linprog(c, A_ub=-P.L, b_ub=P.b, bounds=[(None, None)] * n, method="highs").fun
        hi[j] = -linprog(-c, A_ub=-P.L, b_ub=P.b, bounds=[(None, None)] * n, method="highs").fun
    return lo, hi


def interior_point(P: DelzantPolytope) -> np.ndarray:
    """A strictly interior point (Chebyshev-style LP, slack capped at 1)."""
    d, n = P.L.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-P.L, np.ones((d, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=P.b, bounds=[(None, None)] * n + [(None, 1.0)], method="highs")
    return np.asarray(res.x[:n])


def analytic_center(P: DelzantPolytope, max_iter: int = 100) -> np.ndarray:
    """Maximizer of sum_i log l_i(x) by damped Newton."""
    if not P.is_bounded():
        raise UnboundedPolytopeError("analytic center needs a bounded polytope")
    L = P.L
    x = interior_point(P)

    def phi(z):
        return -np.sum(np.log(facet_values(P, z)))

    for _ in range(max_iter):
        s = facet_values(P, x)
        g = -L.T @ (1.0 / s)
        if np.linalg.norm(g) <= 1e-10:
            return x
        H = L.T @ (L / (s**2)[:, None])
        dx = -np.linalg.solve(H, g)
        Ld = L @ dx
        neg = Ld < 0
        t = min(1.0, 0.95 * float(np.min(-s[neg] / Ld[neg]))) if np.any(neg) else 1.0
        f0 = phi(x)
        gd = float(g @ dx)
        while t > 1e-16 and phi(x + t * dx) > f0 + 1e-4 * t * gd + 1e-15 * abs(f0):
            t *= 0.5
        x = x + t * dx
    s = facet_values(P, x)
    if np.linalg.norm(L.T @ (1.0 / s)) <= 1e-10:
        return x
    raise RuntimeError("analytic center: Newton did not converge in %d iterations" % max_iter)


# Region sampling ----------------------------------------------------------


def _positive_part(P: DelzantPolytope, x: np.ndarray) -> bool:
    return bool(np.all(x > 0.0))


def _cpn_region(P: DelzantPolytope, x: np.ndarray) -> bool:
    return bool(np.sum(x) > 0.5)


def _hirzebruch_region(P: DelzantPolytope, x: np.ndarray) -> bool:
    from .certify import hirzebruch_region_contains

    if P.kind != "hirzebruch":
        raise ValueError("hirzebruch_region predicate needs a Hirzebruch polytope")
    return hirzebruch_region_contains(P.param_dict["n"], x)


PREDICATES: dict[str, Callable[[DelzantPolytope, np.ndarray], bool]] = {
    "positive_part": _positive_part,
    "cpn_region": _cpn_region,
    "hirzebruch_region": _hirzebruch_region,
}


@dataclass(frozen=True)
class Region:
    """A sampled subset of the polytope interior.

    kind is one of ``"full"``, ``"box"``, ``"predicate"`` or ``"points"``.
    Box and predicate regions can be clipped by ``lower``/``upper``; the
    sampler uses a cell-centred grid with ``resolution`` points per axis.
    """

    kind: str = "full"
    lower: Optional[tuple] = None
    upper: Optional[tuple] = None
    predicate: Optional[str] = None
    resolution: int = 32
    points: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("full", "box", "predicate", "points"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.kind == "predicate" and self.predicate not in PREDICATES:
            raise ValueError(f"unknown region predicate {self.predicate!r}")
        if self.kind == "box" and (self.lower is None or self.upper is None):
            raise ValueError("box region needs lower and upper")
        if self.kind == "points" and not self.points:
            raise ValueError("points region needs at least one point")
        if self.resolution < 1:
            raise ValueError("resolution must be positive")

    @classmethod
    def full(cls, resolution: int = 32) -> "Region":
        return cls("full", resolution=resolution)

    @classmethod
    def box(cls, lower, upper, resolution: int = 32) -> "Region":
        return cls("box", tuple(map(float, lower)), tuple(map(float, upper)), resolution=resolution)

    @classmethod
    def named(cls, predicate: str, resolution: int = 32, lower=None, upper=None) -> "Region":
        lo = tuple(map(float, lower)) if lower is not None else None
        hi = tuple(map(float, upper)) if upper is not None else None
        return cls("predicate", lo, hi, predicate=predicate, resolution=resolution)

    @classmethod
    def at(cls, points) -> "Region":
        return cls("points", points=tuple(tuple(map(float, np.atleast_1d(p))) for p in points))

    def contains(self, P: DelzantPolytope, x) -> bool:
        x = np.asarray(x, dtype=float)
        if not contains_interior(P, x):
            return False
        if self.kind in ("box", "predicate") and self.lower is not None:
            if np.any(x < np.asarray(self.lower)) or np.any(x > np.asarray(self.upper)):
                return False
        if self.kind == "predicate":
            return PREDICATES[self.predicate](P, x)
        if self.kind == "points":
            return any(np.allclose(x, p, rtol=0, atol=1e-12) for p in self.points)
        return True

    def sample(self, P: DelzantPolytope) -> np.ndarray:
        """Grid points of the region that lie strictly inside P, shape (m, n)."""
        if self.kind == "points":
            pts = np.array(self.points, dtype=float).reshape(len(self.points), P.dim)
            bad = [p for p in pts if not contains_interior(P, p)]
            if bad:
                raise ValueError(f"region point {bad[0].tolist()} is not interior")
            return pts
        if self.lower is not None:
            lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        else:
            lo, hi = bounding_box(P)
        k = self.resolution
        axes = [lo[j] + (np.arange(k) + 0.5) * (hi[j] - lo[j]) / k for j in range(P.dim)]
        grid = np.array(list(itertools.product(*axes)), dtype=float)
        keep = np.all(grid @ P.L.T + P.b > 0.0, axis=1)
        grid = grid[keep]
        if self.kind == "predicate":
            pred = PREDICATES[self.predicate]
            grid = grid[[pred(P, p) for p in grid]] if len(grid) else grid
        return grid

    def representative(self, P: DelzantPolytope) -> np.ndarray:
        """A point inside the region, near the centroid of its samples."""
        pts = self.sample(P)
        if len(pts) == 0:
            raise ValueError("region has no sample points")
        c = pts.mean(axis=0)
        if self.contains(P, c):
            return c
        return pts[np.argmin(np.linalg.norm(pts - c, axis=1))]

    def to_config(self) -> dict:
        out = {"kind": self.kind, "resolution": self.resolution}
        if self.lower is not None:
            out["lower"], out["upper"] = list(self.lower), list(self.upper)
        if self.predicate is not None:
            out["predicate"] = self.predicate
        if self.points is not None:
            out["points"] = [list(p) for p in self.points]
        return out
