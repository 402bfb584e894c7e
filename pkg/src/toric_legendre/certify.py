"""Grid-and-witness certificates for the sufficient conditions of the inversion.

Every report carries its witness; re-evaluating the condition there
reproduces ``worst_margin``.  Nothing here is a proof: the certificates
hold on the sampled grids.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .forward import AlphaBox, minimize_total
from .kinetic import w_eval
from .polytope import DelzantPolytope, Region, Vertex, contains_interior, make_hirzebruch
from .potential import PotentialField, v_eval, zero_potential

__all__ = [
    "CertificateReport",
    "mixed_det",
    "mixed_det_scan",
    "cpn_closed_det",
    "rank_one_det_identity",
    "cpn_region_inequality",
    "boundary_pieces",
    "boundary_inward_check",
    "hirzebruch_xstar",
    "hirzebruch_curve_x1",
    "hirzebruch_region_contains",
    "hirzebruch_critical_curve_check",
    "near_vertex_certificate",
    "DET_FLOOR",
    "DOMINANCE_FACTOR",
]

DET_FLOOR = 1e-10
DOMINANCE_FACTOR = 10.0


@dataclass
class CertificateReport:
    condition: str
    passed: bool
    worst_margin: float
    witness: Optional[dict]
    region: Optional[dict] = None
    weight_set: Optional[dict] = None
    grid_sizes: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    results: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "pass": self.passed,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "region": self.region,
            "weight_set": self.weight_set,
            "grid_sizes": self.grid_sizes,
            "details": self.details,
            "note": "certificate over the sampled grid only",
        }


def _weights(alpha_set) -> np.ndarray:
    if isinstance(alpha_set, AlphaBox):
        return alpha_set.grid()
    return np.atleast_2d(np.asarray(alpha_set, dtype=float))


def _weight_cfg(alpha_set):
    if isinstance(alpha_set, AlphaBox):
        return {"lower": list(alpha_set.lower), "upper": list(alpha_set.upper),
                "resolution": list(alpha_set.resolution)}
    return {"points": _weights(alpha_set).tolist()}


def mixed_det(P: DelzantPolytope, x, alpha) -> float:
    return float(np.linalg.det(w_eval(P, x, alpha).mixed_hess))


def mixed_det_scan(P: DelzantPolytope, region: Region, alpha_set) -> CertificateReport:
    """Non-degeneracy and sign-constancy of det(mixed Hessian) on region x weights.

    The margin at a sample is ``s * det`` with ``s`` the sign at the first
    sample, so a sign change anywhere yields a nonpositive worst margin.
    Passes iff the worst margin exceeds DET_FLOOR.
    """
    xs = region.sample(P)
    alphas = _weights(alpha_set)
    worst, witness, ref_sign = math.inf, None, 0.0
    sign_changes = 0
    for x in xs:
        for a in alphas:
            d = mixed_det(P, x, a)
            if ref_sign == 0.0:
                ref_sign = 1.0 if d >= 0 else -1.0
            m = ref_sign * d
            if m < 0:
                sign_changes += 1
            if m < worst:
                worst, witness = m, {"x": x.tolist(), "alpha": a.tolist()}
    if witness is None:
        return CertificateReport("mixed_det", False, math.nan, None, region.to_config(),
                                 _weight_cfg(alpha_set), {"x": 0, "alpha": len(alphas)},
                                 {"reason": "empty sample"})
    return CertificateReport(
        "mixed_det", bool(worst > DET_FLOOR), float(worst), witness, region.to_config(),
        _weight_cfg(alpha_set), {"x": len(xs), "alpha": len(alphas)},
        {"sign": ref_sign, "sign_changes": sign_changes,
         "margin_definition": "sign_at_first_sample * det(mixed_hess)"})


def cpn_closed_det(n: int, x, alpha) -> float:
    """Closed-form determinant of the CP^n mixed Hessian."""
    x = np.asarray(x, dtype=float).reshape(n)
    alpha = np.asarray(alpha, dtype=float).reshape(n)
    if np.any(alpha == 0):
        raise ValueError("closed form needs every weight component nonzero")
    X, A = float(np.sum(x)), float(np.sum(alpha))
    pre = (-1) ** n * float(np.prod(alpha)) * A / (float(np.prod(x**2)) * (1 - X) ** 2)
    return pre * ((1 - X) ** 2 / A - float(np.sum(x**2 / alpha)))


def rank_one_det_identity(a) -> dict:
    """det(diag(a) + ones) against prod(a) * (1 + sum(1/a))."""
    a = np.asarray(a, dtype=float)
    lhs = float(np.linalg.det(np.diag(a) + np.ones((len(a), len(a)))))
    rhs = float(np.prod(a) * (1.0 + np.sum(1.0 / a)))
    return {"lhs": lhs, "rhs": rhs}


def cpn_region_inequality(n: int, x, alpha) -> float:
    """sum x_i^2/alpha_i - (1 - sum x)^2 / sum alpha; positive on {sum x > 1/2}."""
    x = np.asarray(x, dtype=float).reshape(n)
    alpha = np.asarray(alpha, dtype=float).reshape(n)
    return float(np.sum(x**2 / alpha) - (1 - np.sum(x)) ** 2 / np.sum(alpha))


# Hirzebruch -----------------------------------------------------------------


def hirzebruch_xstar(n: int, x2: float) -> float:
    if x2 >= 0.5:
        raise ValueError("x2* is defined for x2 < 1/2")
    if n == 0:
        return 0.0
    return math.sqrt(n) * x2 * (1 - x2) / math.sqrt(1 - 2 * x2)


def hirzebruch_curve_x1(n: int, x2: float) -> float:
    """x1 on the critical curve of W for the given x2."""
    return (n + 1) / 2 - n / 2 * (x2 + hirzebruch_xstar(n, x2))


def hirzebruch_region_contains(n: int, x) -> bool:
    x1, x2 = float(x[0]), float(x[1])
    if not (x1 > 0 and 0 < x2 < 0.5 and n + 1 - x1 - n * x2 > 0):
        return False
    return 2 * x1 > n + 1 - n * (x2 + hirzebruch_xstar(n, x2))


def hirzebruch_critical_curve_check(n: int, alpha_set) -> CertificateReport:
    """Minimize W alone for each weight; report the largest distance to the curve.

    Passes iff the worst residual is <= 1e-7 and every solve converged.
    """
    P = make_hirzebruch(n)
    V0 = zero_potential(2)
    worst, witness, failures = 0.0, None, 0
    prev = None
    tables = []
    for a in _weights(alpha_set):
        r = minimize_total(P, V0, a, prev)
        tables.append(r)
        if not r.converged:
            failures += 1
            continue
        prev = r.x_star
        x1, x2 = r.x_star
        if n == 0:
            res = abs(x1 - 0.5)
        elif x2 < 0.5:
            res = abs(x1 - hirzebruch_curve_x1(n, x2))
        else:
            res = math.inf
        if witness is None or res > worst:
            worst, witness = res, {"x": r.x_star.tolist(), "alpha": a.tolist()}
    rep = CertificateReport("hirzebruch_critical_curve", failures == 0 and worst <= 1e-7,
                            float(-worst), witness, None, _weight_cfg(alpha_set),
                            {"alpha": len(tables)},
                            {"max_residual": worst, "solver_failures": failures,
                             "margin_definition": "-|x1 - curve(x2)|"})
    rep.results = tables
    return rep


# Boundary condition -----------------------------------------------------------


def boundary_pieces(P: DelzantPolytope, region: Region, k: int = 16):
    """Sampled pieces of the region boundary where W is finite.

    Returns a list of ``(name, points, normals, directions)``: outward unit
    normals per point, plus for each point the admissible outward test
    directions (the normal, and coordinate directions -e_i pointing out of
    the region, as in the index-choice argument for the CP^n hyperplane).
    """
    if region.kind != "predicate":
        raise ValueError("boundary description available for predicate regions only")
    n = P.dim
    pieces = []
    if region.predicate == "cpn_region":
        from .potential import _simplex_slice

        pts = _simplex_slice(n, 0.5, k)
        nu = -np.ones(n) / math.sqrt(n)
        dirs = [nu] + [-np.eye(n)[i] for i in range(n)]
        pieces.append(("sum_half", pts, np.tile(nu, (len(pts), 1)), dirs))
    elif region.predicate == "positive_part":
        for i in range(n):
            lo, hi = _bounds(P)
            axes = [(np.arange(k) + 0.5) / k * hi[j] for j in range(n)]
            axes[i] = np.array([0.0])
            pts = np.array([p for p in itertools.product(*axes) if contains_interior(P, np.array(p))])
            nu = -np.eye(n)[i]
            pieces.append((f"x{i + 1}_zero", pts, np.tile(nu, (len(pts), 1)), [nu]))
    elif region.predicate == "hirzebruch_region":
        hn = P.param_dict["n"]
        top = hn + 1 - hn * 0.5
        pts = np.array([[(j + 0.5) / k * top, 0.5] for j in range(k)])
        if hn == 0:
            # the curve is x1 = 1/2; for n > 0 it leaves through x1 -> -inf as x2 -> 1/2
            pts = pts[pts[:, 0] > 0.5]
        nu = np.array([0.0, 1.0])
        pieces.append(("x2_half", pts, np.tile(nu, (len(pts), 1)), [nu]))
        cpts, cnus = [], []
        for j in range(k):
            x2 = (j + 0.5) / k * 0.5
            x1 = hirzebruch_curve_x1(hn, x2)
            p = np.array([x1, x2])
            if not contains_interior(P, p):
                continue
            h = 1e-7
            slope = (hirzebruch_curve_x1(hn, min(x2 + h, 0.5 - 1e-12)) -
                     hirzebruch_curve_x1(hn, max(x2 - h, 0.0))) / (2 * h)
            g = np.array([-1.0, slope])
            cpts.append(p)
            cnus.append(g / np.linalg.norm(g))
        dirs = [None, -np.eye(2)[0], -np.eye(2)[1]]
        pieces.append(("critical_curve", np.array(cpts), np.array(cnus), dirs))
    else:
        raise ValueError(f"no boundary description for predicate {region.predicate!r}")
    return pieces


def _bounds(P):
    from .polytope import bounding_box

    return bounding_box(P)


def boundary_inward_check(P: DelzantPolytope, V: PotentialField, region: Region, alpha_set,
                          k: int = 16) -> CertificateReport:
    """min over sampled boundary points and weights of max_d grad(V + W) . d.

    ``d`` ranges over the outward normal and the admissible outward
    coordinate directions of the piece; a positive value means V + W
    decreases when moving into the region.  Passes iff the minimum is > 0.
    """
    alphas = _weights(alpha_set)
    worst, witness = math.inf, None
    count = 0
    for name, pts, nus, dirs in boundary_pieces(P, region, k):
        for p, nu in zip(pts, nus):
            gv = v_eval(V, p).grad
            cand = [nu if d is None else d for d in dirs]
            cand = [d for d in cand if float(d @ nu) > 0]
            for a in alphas:
                g = gv + w_eval(P, p, a).grad_x
                vals = [float(g @ d) for d in cand]
                j = int(np.argmax(vals))
                m = vals[j]
                count += 1
                if m < worst:
                    worst = m
                    witness = {"x": p.tolist(), "alpha": a.tolist(), "piece": name,
                               "direction": cand[j].tolist()}
    if witness is None:
        return CertificateReport("boundary_inward", False, math.nan, None, region.to_config(),
                                 _weight_cfg(alpha_set), {"boundary_points": 0})
    return CertificateReport("boundary_inward", bool(worst > 0), float(worst), witness,
                             region.to_config(), _weight_cfg(alpha_set),
                             {"boundary_samples": count, "alpha": len(alphas)})


# Near-vertex certificate ------------------------------------------------------------


def near_vertex_certificate(P: DelzantPolytope, vertex: Vertex, x0, alpha0) -> CertificateReport:
    """Check the near-vertex sufficient condition at (x0, alpha0).

    (i)   <l_i, alpha0> != 0 on the vertex's active facets;
    (ii)  det mixed_hess(x0, alpha0) != 0;
    (iii) the active-facet part A of the mixed Hessian dominates the rest B:
          ratio = sigma_min(A) / ||B||_2 >= DOMINANCE_FACTOR (this ratio
          > 1 already forces A + B to be nonsingular).
    """
    x0 = np.asarray(x0, dtype=float)
    alpha0 = np.asarray(alpha0, dtype=float)
    if not contains_interior(P, x0):
        raise ValueError("x0 must be interior")
    act = list(vertex.active_facets)
    a = P.L @ alpha0
    s = P.L @ x0 + P.b
    pair_margin = float(np.min(np.abs(a[act])))
    weights = -a / s**2
    A = P.L[act].T @ (P.L[act] * weights[act][:, None])
    rest = [i for i in range(P.facet_count) if i not in act]
    B = P.L[rest].T @ (P.L[rest] * weights[rest][:, None]) if rest else np.zeros_like(A)
    det = float(np.linalg.det(A + B))
    smin = float(np.linalg.svd(A, compute_uv=False)[-1])
    bnorm = float(np.linalg.norm(B, 2))
    ratio = math.inf if bnorm == 0 else smin / bnorm
    checks = {
        "nonzero_pairing": {"pass": pair_margin > 0, "margin": pair_margin,
                            "facets": act, "pairings": a[act].tolist()},
        "nonzero_det": {"pass": abs(det) > DET_FLOOR, "det": det},
        "vertex_dominated": {"pass": ratio >= DOMINANCE_FACTOR, "ratio": ratio,
                             "factor": DOMINANCE_FACTOR, "active_sigma_min": smin,
                             "remainder_norm": bnorm},
    }
    ok = all(c["pass"] for c in checks.values())
    return CertificateReport("near_vertex", ok, min(pair_margin, abs(det), ratio),
                             {"x": x0.tolist(), "alpha": alpha0.tolist(),
                              "vertex": vertex.point.tolist()},
                             details=checks)
