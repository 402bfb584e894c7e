import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import cp1_minimizer
from toric_legendre.forward import (
    AlphaBox, GTable, Status, envelope_fd_check, g_gradient, minimize_total, sample_g,
)
from toric_legendre.polytope import make_hirzebruch, make_orthant, make_simplex
from toric_legendre.potential import custom, quadratic, separable, sum_composed, zero_potential

CP1 = make_simplex(1)
CP2 = make_simplex(2)
ORTH1 = make_orthant(1)

# CP^1 with V(x) = -x, alpha = 1: root of -1 + (1/(1-x)^2 - 1/x^2)/2 by
# mpmath bisection at 40 digits (oracles.cp1_minimizer)
CP1_LINEAR_XSTAR = 0.5606729479742083
CP1_LINEAR_G = 1.4692168266979206


def test_frozen_cp1_constants_match_oracle():
    x = cp1_minimizer(lambda x: -1)
    assert float(x) == pytest.approx(CP1_LINEAR_XSTAR, abs=1e-15)
    g = -x + (1 / x + 1 / (1 - x)) / 2
    assert float(g) == pytest.approx(CP1_LINEAR_G, abs=1e-15)


def test_cp1_zero_potential():
    r = minimize_total(CP1, zero_potential(1), [1.0])
    assert r.status is Status.CONVERGED
    assert r.x_star[0] == pytest.approx(0.5, abs=1e-12)
    assert r.g_value == pytest.approx(2.0, rel=1e-14)


def test_cp1_linear_potential():
    r = minimize_total(CP1, sum_composed([0, -1], 1), [1.0])
    assert r.converged
    assert r.x_star[0] == pytest.approx(CP1_LINEAR_XSTAR, abs=1e-10)
    assert r.g_value == pytest.approx(CP1_LINEAR_G, rel=1e-13)
    assert r.hess_min_eig > 0


def test_orthant_closed_form():
    r = minimize_total(ORTH1, separable([[0, 1]]), [1.0])
    assert r.x_star[0] == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    assert r.g_value == pytest.approx(math.sqrt(2), rel=1e-13)
    assert g_gradient(r, [1.0])[0] == pytest.approx(math.sqrt(2), rel=1e-12)


def test_bad_start_rejected():
    with pytest.raises(ValueError, match="interior"):
        minimize_total(CP2, zero_potential(2), [1, 1], x0=[0.8, 0.8])


def test_indefinite_hessian_reported():
    V = quadratic(-50 * np.eye(1), [0.5])
    r = minimize_total(CP1, V, [0.1], x0=[0.5])
    assert r.status is Status.INDEFINITE_HESSIAN
    assert not r.converged


def test_boundary_escape_or_failure_when_pulled_out():
    # strong linear pull and tiny alpha: the barrier is too weak to hold x inside
    r = minimize_total(CP1, sum_composed([0, -1e6], 1), [1e-6])
    assert r.status in (Status.CONVERGED, Status.BOUNDARY_ESCAPE, Status.MAX_ITER)
    if r.converged:
        assert r.x_star[0] < 1


def test_cp1_g_table():
    box = AlphaBox((0.5,), (2.0,), (4,))
    t = sample_g(CP1, zero_potential(1), box)
    np.testing.assert_allclose(t.grid[:, 0], [0.5, 1.0, 1.5, 2.0])
    np.testing.assert_allclose(t.g_values, 2 * t.grid[:, 0] ** 2, rtol=1e-13)
    assert not t.partial


def test_orthant_table():
    t = sample_g(ORTH1, separable([[0, 1]]), AlphaBox((1.0,), (2.0,), (2,)))
    np.testing.assert_allclose(t.g_values, [math.sqrt(2), 2 * math.sqrt(2)], rtol=1e-13)


def test_empty_grid():
    t = sample_g(CP2, zero_potential(2), AlphaBox((0, 0), (1, 1), (0, 3)))
    assert len(t) == 0 and t.grid.shape == (0, 2)


def test_alpha_box_validation():
    with pytest.raises(ValueError):
        AlphaBox((0, 0), (1,), (2, 2))
    assert AlphaBox((0, 0), (1, 1), 3).resolution == (3, 3)
    g = AlphaBox((0, 10), (1, 20), (2, 3)).grid()
    np.testing.assert_array_equal(g[:3], [[0, 10], [0, 15], [0, 20]])


def test_gradient_envelope_and_fd():
    box = AlphaBox((0.5,), (1.5,), (11,))
    t = sample_g(CP1, zero_potential(1), box)
    assert g_gradient(t.results[5], [1.0])[0] == pytest.approx(4.0, rel=1e-12)
    assert g_gradient(t, [1.0], CP1)[0] == pytest.approx(4.0, rel=1e-12)
    # G = 2 alpha^2 is quadratic, so central differences are exact up to rounding
    assert g_gradient(t, [1.0])[0] == pytest.approx(4.0, rel=1e-10)
    with pytest.raises(ValueError, match="boundary"):
        g_gradient(t, [0.5])
    with pytest.raises(KeyError):
        g_gradient(t, [0.77])


def test_zero_weight_gradient():
    V = quadratic(np.eye(2), [0.3, 0.3])
    r = minimize_total(CP2, V, [0.0, 0.0])
    assert r.converged
    np.testing.assert_allclose(r.x_star, [0.3, 0.3], atol=1e-12)
    np.testing.assert_array_equal(g_gradient(r, [0, 0]), [0, 0])


def test_envelope_identity_on_cp2_table():
    V = quadratic(np.eye(2), [0.7, 0.7])
    t = sample_g(CP2, V, AlphaBox((0.5, 0.5), (2, 2), (4, 4)))
    assert envelope_fd_check(CP2, V, t) <= 1e-5


@settings(max_examples=25, deadline=None)
@given(a1=st.floats(0.2, 3), a2=st.floats(0.2, 3), t=st.floats(0.1, 10))
def test_homogeneity_zero_potential(a1, a2, t):
    P = make_hirzebruch(1)
    g1 = minimize_total(P, zero_potential(2), [a1, a2])
    g2 = minimize_total(P, zero_potential(2), [t * a1, t * a2])
    assert g1.converged and g2.converged
    assert g2.g_value == pytest.approx(t * t * g1.g_value, rel=1e-10)


def test_warm_and_cold_agree():
    V = quadratic(np.eye(2), [0.7, 0.7])
    box = AlphaBox((0.5, 0.5), (2, 2), (6, 6))
    warm = sample_g(CP2, V, box)
    cold = sample_g(CP2, V, box, warm=False)
    threaded = sample_g(CP2, V, box, threads=3)
    np.testing.assert_allclose(warm.g_values, cold.g_values, rtol=0, atol=1e-9)
    np.testing.assert_allclose(warm.g_values, threaded.g_values, rtol=0, atol=1e-9)


def test_adding_nonnegative_potential_never_decreases_g():
    box = AlphaBox((0.5, 0.5), (2, 2), (4, 4))
    base = sample_g(CP2, zero_potential(2), box)
    more = sample_g(CP2, quadratic(np.eye(2), [0.2, 0.1]), box)
    assert np.all(more.g_values >= base.g_values - 1e-12)


def test_minimizers_lie_in_cpn_region():
    """Potentials meeting the convexity and sum-half sign conditions push x* into sum x > 1/2."""
    for n, center in ((2, [0.7, 0.7]), (3, [0.6, 0.6, 0.6])):
        P = make_simplex(n)
        V = quadratic(np.eye(n), center)
        t = sample_g(P, V, AlphaBox([0.5] * n, [2] * n, [3] * n))
        assert np.all(t.x_stars.sum(axis=1) > 0.5)


def test_multistart_flags_nothing_for_convex_problem():
    t = sample_g(CP2, quadratic(np.eye(2), [0.7, 0.7]), AlphaBox((1, 1), (2, 2), (2, 2)),
                 multistart=True)
    assert t.metadata["NonUniqueMinimum"] == []


def _double_well(tilt):
    # wells near x = 0.2 and 0.8; V is convex for |x - 1/2| > 0.3/sqrt(3)
    def ev(x):
        y = x[0] - 0.5
        return (200 * (y * y - 0.09) ** 2 + tilt * x[0], np.array([800 * y * (y * y - 0.09) + tilt]),
                np.array([[800 * (3 * y * y - 0.09)]]))
    return custom(ev, 1, f"double-well{tilt}")


def test_multistart_flags_double_well():
    box = AlphaBox((0.05,), (0.05,), (1,))
    tilted = sample_g(CP1, _double_well(0.5), box, x0=[0.75], multistart=True)
    assert tilted.results[0].x_star[0] > 0.5
    assert tilted.metadata["NonUniqueMinimum"] == [0]
    # disagreement is flagged whichever basin the sweep itself landed in
    deep = sample_g(CP1, _double_well(0.5), box, x0=[0.25], multistart=True)
    assert deep.results[0].x_star[0] < 0.5
    assert deep.metadata["NonUniqueMinimum"] == [0]


def test_nonconvex_start_reports_indefinite():
    r = minimize_total(CP1, _double_well(0.0), [0.05], x0=[0.5])
    assert r.status is Status.INDEFINITE_HESSIAN


def test_gtable_index_lookup():
    t = sample_g(CP1, zero_potential(1), AlphaBox((1.0,), (2.0,), (3,)))
    assert t.index_of([1.5]) == 1
    assert isinstance(t, GTable)
