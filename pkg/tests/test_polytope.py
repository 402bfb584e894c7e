import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toric_legendre.polytope import (
    DelzantPolytope, Region, UnboundedPolytopeError, analytic_center, contains_interior,
    enumerate_vertices, facet_values, integer_det, make_box, make_hirzebruch, make_orthant,
    make_simplex, verify_delzant,
)


@pytest.mark.parametrize("P, x, expected", [
    (make_simplex(2), (0.0, 0.0), (0, 0, 1)),
    (make_simplex(2), (0.4, 0.4), (0.4, 0.4, 0.2)),
    (make_hirzebruch(1), (0.5, 0.25), (0.5, 0.25, 0.75, 1.25)),
])
def test_facet_values(P, x, expected):
    np.testing.assert_allclose(facet_values(P, x), expected, atol=1e-15)


@pytest.mark.parametrize("x, inside", [((0.4, 0.4), True), ((0.0, 0.0), False), ((0.6, 0.6), False)])
def test_contains_interior(x, inside):
    assert contains_interior(make_simplex(2), x) is inside


def test_constructors():
    P = make_simplex(2)
    assert P.normals == ((1, 0), (0, 1), (-1, -1))
    assert P.offsets == (0.0, 0.0, 1.0)
    H = make_hirzebruch(1)
    assert H.normals == ((1, 0), (0, 1), (0, -1), (-1, -1))
    assert H.offsets == (0.0, 0.0, 1.0, 2.0)
    O = make_orthant(1)
    assert O.normals == ((1,),) and O.offsets == (0.0,)
    assert not O.is_bounded() and P.is_bounded()


def test_non_primitive_normal_rejected():
    with pytest.raises(ValueError, match="primitive"):
        DelzantPolytope([(2, 0), (0, 1), (-1, -1)], [0, 0, 1])


def test_empty_interior_rejected():
    with pytest.raises(ValueError, match="empty"):
        DelzantPolytope([(1,), (-1,)], [0.0, -1.0])


def _vertex_set(P):
    return sorted(tuple(np.round(v.point, 12) + 0.0) for v in enumerate_vertices(P))


@pytest.mark.parametrize("P, expected", [
    (make_simplex(2), [(0, 0), (0, 1), (1, 0)]),
    (make_hirzebruch(1), [(0, 0), (0, 1), (1, 1), (2, 0)]),
    (make_box((1.0,)), [(-1,), (1,)]),
])
def test_enumerate_vertices(P, expected):
    assert _vertex_set(P) == sorted(tuple(float(v) for v in p) for p in expected)


def test_vertices_have_n_active_facets_with_unimodular_normals():
    for P in (make_simplex(3), make_hirzebruch(2), make_box((1.0, 2.0, 0.5))):
        for v in enumerate_vertices(P):
            assert len(v.active_facets) == P.dim
            assert abs(integer_det([P.normals[i] for i in v.active_facets])) == 1


def test_unbounded_refused():
    with pytest.raises(UnboundedPolytopeError):
        enumerate_vertices(make_orthant(2))
    rep = verify_delzant(make_orthant(2))
    assert not (rep.simple and rep.smooth) and rep.failures


@pytest.mark.parametrize("P", [make_simplex(n) for n in range(1, 5)]
                         + [make_hirzebruch(n) for n in range(4)]
                         + [make_box((1.0, 0.5)), make_box((0.3, 2.0, 1.0))])
def test_builtin_polytopes_are_delzant(P):
    rep = verify_delzant(P)
    assert rep.simple and rep.smooth and not rep.failures


def test_non_smooth_square():
    P = DelzantPolytope([(2, 1), (0, 1), (-1, 0), (0, -1)], [0.0, 0.0, 1.0, 1.0])
    rep = verify_delzant(P)
    assert rep.simple and not rep.smooth
    assert any("2" in str(f) for f in rep.failures)


def test_integer_det():
    assert integer_det([[2, 1], [1, 2]]) == 3
    assert integer_det([[1, 2, 3], [4, 5, 6], [7, 8, 10]]) == -3
    assert integer_det([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]) == -1


@pytest.mark.parametrize("P, expected", [
    (make_simplex(1), (0.5,)),
    (make_simplex(2), (1 / 3, 1 / 3)),
    (make_box((1.0,)), (0.0,)),
    (make_box((1.0, 2.0)), (0.0, 0.0)),
])
def test_analytic_center(P, expected):
    c = analytic_center(P)
    np.testing.assert_allclose(c, expected, atol=1e-10)
    assert contains_interior(P, c)


@settings(max_examples=50, deadline=None)
@given(x=st.lists(st.floats(-2, 2), min_size=2, max_size=2),
       v=st.lists(st.floats(-2, 2), min_size=2, max_size=2),
       t=st.floats(-3, 3))
def test_facet_values_affine(x, v, t):
    P = make_hirzebruch(2)
    x, v = np.array(x), np.array(v)
    lhs = facet_values(P, x + t * v) - facet_values(P, x)
    rhs = t * (facet_values(P, x + v) - facet_values(P, x))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestRegion:
    def test_named_cpn_region_samples(self):
        P = make_simplex(2)
        pts = Region.named("cpn_region", resolution=10).sample(P)
        assert len(pts) > 0
        assert np.all(pts.sum(axis=1) > 0.5) and np.all(pts.sum(axis=1) < 1)

    def test_box_region_and_representative(self):
        P = make_simplex(2)
        R = Region.box((0.1, 0.1), (0.3, 0.3), resolution=4)
        pts = R.sample(P)
        assert pts.shape == (16, 2)
        assert R.contains(P, R.representative(P))
        assert not R.contains(P, (0.5, 0.2))

    def test_points_region(self):
        R = Region.at([(0.5,)])
        np.testing.assert_array_equal(R.sample(make_simplex(1)), [[0.5]])
        with pytest.raises(ValueError):
            Region.at([(1.5,)]).sample(make_simplex(1))

    def test_unknown_predicate(self):
        with pytest.raises(ValueError):
            Region.named("nope")

    def test_config_round_trip(self):
        R = Region.named("hirzebruch_region", resolution=12, lower=(0, 0), upper=(2, 0.5))
        cfg = R.to_config()
        R2 = Region(cfg["kind"], tuple(cfg["lower"]), tuple(cfg["upper"]), cfg["predicate"],
                    cfg["resolution"])
        assert R2.to_config() == cfg
