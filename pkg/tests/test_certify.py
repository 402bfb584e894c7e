import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import det as det_oracle
from toric_legendre.certify import (
    DOMINANCE_FACTOR, boundary_inward_check, boundary_pieces, cpn_closed_det,
    cpn_region_inequality, hirzebruch_critical_curve_check, hirzebruch_curve_x1,
    hirzebruch_region_contains, hirzebruch_xstar, mixed_det, mixed_det_scan,
    near_vertex_certificate, rank_one_det_identity,
)
from toric_legendre.forward import AlphaBox
from toric_legendre.polytope import (
    Region, enumerate_vertices, make_box, make_hirzebruch, make_simplex,
)
from toric_legendre.potential import quadratic, v_eval, zero_potential

CP2 = make_simplex(2)

# x2* at n = 1, x2 = 1/4: sqrt(1) * 0.25 * 0.75 / sqrt(0.5), evaluated in mpmath
XSTAR_1_QUARTER = 0.2651650429449553
CURVE_1_QUARTER = 0.7424174785275224


class TestMixedDetScan:
    def test_cp2_region_passes_with_constant_sign(self):
        rep = mixed_det_scan(CP2, Region.named("cpn_region", resolution=16),
                             AlphaBox((0.1, 0.1), (3, 3), (8, 8)))
        assert rep.passed
        assert rep.details["sign"] == -1.0 and rep.details["sign_changes"] == 0
        w = rep.witness
        assert -mixed_det(CP2, w["x"], w["alpha"]) == pytest.approx(rep.worst_margin, rel=1e-12)
        json.dumps(rep.to_dict())

    def test_cp1_degenerate_point(self):
        rep = mixed_det_scan(make_simplex(1), Region.at([(0.5,)]), [[1.0]])
        assert not rep.passed
        assert rep.witness == {"x": [0.5], "alpha": [1.0]}
        assert abs(rep.worst_margin) <= 1e-12

    def test_enlarged_region_fails(self):
        # including sum x = 1/2 (and below) admits the degenerate configuration alpha = t x
        rep = mixed_det_scan(CP2, Region.full(16), AlphaBox((0.1, 0.1), (3, 3), (8, 8)))
        assert not rep.passed and rep.details["sign_changes"] > 0

    def test_point_in_region_cross_checked(self):
        d = mixed_det(CP2, [0.75, 0.05], [1, 1])
        assert d != 0
        assert d == pytest.approx(cpn_closed_det(2, [0.75, 0.05], [1, 1]), rel=1e-10)

    def test_hirzebruch_region(self):
        for n in (1, 2, 3):
            rep = mixed_det_scan(make_hirzebruch(n), Region.named("hirzebruch_region", 16),
                                 AlphaBox((0.1, 0.1), (3, 3), (6, 6)))
            assert rep.passed, n


class TestClosedForms:
    @pytest.mark.parametrize("n, x, alpha, expected", [
        (2, [0.4, 0.4], [1, 1], -585.9375),
        (1, [0.5], [1], 0.0),
        (2, [0.2, 0.3], [0.4, 0.6], 0.0),
    ])
    def test_cpn_closed_det(self, n, x, alpha, expected):
        assert cpn_closed_det(n, x, alpha) == pytest.approx(expected, rel=1e-13, abs=1e-9)

    def test_frozen_value_against_mpmath(self):
        e = [[43.75, 50.0], [50.0, 43.75]]
        assert det_oracle(e) == -585.9375

    def test_zero_weight_component_rejected(self):
        with pytest.raises(ValueError):
            cpn_closed_det(2, [0.4, 0.4], [1, 0])

    @pytest.mark.parametrize("a, expected", [([1, 1], 3.0), ([2, 3, 4], 50.0), ([1], 2.0)])
    def test_rank_one(self, a, expected):
        r = rank_one_det_identity(a)
        assert r["lhs"] == pytest.approx(expected, rel=1e-13)
        assert r["rhs"] == pytest.approx(expected, rel=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(a=st.lists(st.floats(0.1, 10), min_size=1, max_size=6))
    def test_rank_one_random(self, a):
        r = rank_one_det_identity(a)
        assert r["lhs"] == pytest.approx(r["rhs"], rel=1e-12)

    @pytest.mark.parametrize("x, alpha, expected", [
        ([0.4, 0.4], [1, 1], 0.30),
        ([0.2, 0.2], [1, 1], -0.10),
        ([0.2, 0.3], [2, 3], 0.0),
    ])
    def test_region_inequality(self, x, alpha, expected):
        assert cpn_region_inequality(2, x, alpha) == pytest.approx(expected, abs=1e-15)

    def test_region_inequality_positive_on_region(self, rng):
        for _ in range(2000):
            n = int(rng.integers(1, 4))
            x = rng.dirichlet(np.ones(n + 1))[:n]
            if x.sum() <= 0.5:
                continue
            assert cpn_region_inequality(n, x, rng.uniform(0.01, 10, n)) > 0

    def test_margin_vanishes_at_cauchy_equality(self):
        x = np.array([0.2, 0.3])
        margins = [cpn_region_inequality(2, x * (1 + e), x) for e in (1e-1, 1e-2, 1e-3)]
        assert margins[0] > margins[1] > margins[2] > 0


class TestHirzebruch:
    def test_frozen_constants(self):
        import mpmath as mp
        v = mp.sqrt(1) * mp.mpf("0.25") * mp.mpf("0.75") / mp.sqrt(mp.mpf("0.5"))
        assert float(v) == XSTAR_1_QUARTER
        assert float(1 - (mp.mpf("0.25") + v) / 2) == CURVE_1_QUARTER

    @pytest.mark.parametrize("n, x2, expected", [
        (1, 0.0, 0.0), (1, 0.25, XSTAR_1_QUARTER), (4, 0.25, 2 * XSTAR_1_QUARTER), (0, 0.3, 0.0),
    ])
    def test_xstar(self, n, x2, expected):
        assert hirzebruch_xstar(n, x2) == pytest.approx(expected, rel=1e-15, abs=1e-300)

    def test_xstar_domain(self):
        with pytest.raises(ValueError):
            hirzebruch_xstar(1, 0.5)

    def test_curve(self):
        assert hirzebruch_curve_x1(1, 0.25) == pytest.approx(CURVE_1_QUARTER, rel=1e-15)

    @pytest.mark.parametrize("x, inside", [((0.9, 0.25), True), ((0.5, 0.25), False),
                                           ((0.9, 0.6), False)])
    def test_region_contains(self, x, inside):
        assert hirzebruch_region_contains(1, x) is inside

    @pytest.mark.parametrize("n, alpha", [(1, (1, 1)), (1, (2, 1)), (0, (1, 2)), (2, (0.7, 2.5))])
    def test_critical_curve(self, n, alpha):
        rep = hirzebruch_critical_curve_check(n, [alpha])
        assert rep.passed and rep.details["max_residual"] <= 1e-7
        assert rep.results[0].converged

    def test_n0_minimizer_is_center(self):
        rep = hirzebruch_critical_curve_check(0, [[1.0, 1.0]])
        np.testing.assert_allclose(rep.results[0].x_star, [0.5, 0.5], atol=1e-12)


class TestBoundary:
    def test_cpn_sum_half_passes(self):
        V = quadratic(np.eye(2), [0.7, 0.7])
        rep = boundary_inward_check(CP2, V, Region.named("cpn_region"),
                                    AlphaBox((0.5, 0.5), (2, 2), (5, 5)))
        assert rep.passed and rep.worst_margin > 0

    def test_cauchy_configuration_gives_zero_margin(self):
        rep = boundary_inward_check(CP2, zero_potential(2), Region.named("cpn_region"),
                                    [[1.0, 1.0]], k=1)
        # x = (1/4, 1/4) is sampled and alpha = 4 x there
        assert not rep.passed
        assert rep.worst_margin == pytest.approx(0.0, abs=1e-12)
        assert rep.witness["x"] == [0.25, 0.25]

    def test_margin_grows_linearly_with_pull(self):
        R = Region.named("cpn_region")
        alphas = AlphaBox((0.5, 0.5), (2, 2), (3, 3))
        m = [boundary_inward_check(CP2, quadratic(k * np.eye(2), [0.7, 0.7]), R, alphas).worst_margin
             for k in (100.0, 200.0, 400.0)]
        assert m[0] < m[1] < m[2]
        assert (m[2] - m[1]) == pytest.approx(2 * (m[1] - m[0]), rel=1e-6)

    def test_witness_reproduces_margin(self):
        V = quadratic(np.eye(2), [0.7, 0.7])
        rep = boundary_inward_check(CP2, V, Region.named("cpn_region"), [[1.0, 2.0]])
        from toric_legendre.kinetic import w_eval
        w = rep.witness
        g = v_eval(V, w["x"]).grad + w_eval(CP2, w["x"], w["alpha"]).grad_x
        assert float(g @ np.array(w["direction"])) == pytest.approx(rep.worst_margin, rel=1e-12)

    def test_pieces(self):
        pieces = boundary_pieces(make_hirzebruch(1), Region.named("hirzebruch_region"), k=8)
        names = [p[0] for p in pieces]
        assert names == ["x2_half", "critical_curve"]
        for _, pts, nus, _ in pieces:
            np.testing.assert_allclose(np.linalg.norm(nus, axis=1), 1.0)
        pieces = boundary_pieces(make_box((1.0, 1.0)), Region.named("positive_part"), k=4)
        assert [p[0] for p in pieces] == ["x1_zero", "x2_zero"]
        with pytest.raises(ValueError):
            boundary_pieces(CP2, Region.full())


class TestNearVertex:
    def _origin(self):
        return next(v for v in enumerate_vertices(CP2) if np.allclose(v.point, 0))

    def test_near_vertex_passes(self):
        rep = near_vertex_certificate(CP2, self._origin(), [0.02, 0.03], [1, 1])
        assert rep.passed
        assert rep.details["vertex_dominated"]["ratio"] >= DOMINANCE_FACTOR

    def test_zero_pairing_fails(self):
        rep = near_vertex_certificate(CP2, self._origin(), [0.02, 0.03], [0, 1])
        assert not rep.passed and not rep.details["nonzero_pairing"]["pass"]

    def test_barycenter_not_dominated(self):
        rep = near_vertex_certificate(CP2, self._origin(), [1 / 3, 1 / 3], [1, 2])
        assert rep.details["nonzero_det"]["pass"]
        assert not rep.details["vertex_dominated"]["pass"]
        assert not rep.passed
        assert math.isfinite(rep.details["vertex_dominated"]["ratio"])
