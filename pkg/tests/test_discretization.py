import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wsobolev.discretization import (ScalarField, VectorField, boundary_mask, build_grid,
                                     edge_energy, edge_inner, gradient, integrate, laplacian,
                                     laplacian4, sample, zero_boundary)


def gauss(x):
    return np.exp(-np.sum(x**2, axis=-1))


@pytest.mark.parametrize("N,R,M", [(4, 1.0, 5), (2, 0.0, 5), (2, -1.0, 5), (2, 1.0, 4), (2, 1.0, 1)])
def test_grid_rejects_bad_parameters(N, R, M):
    with pytest.raises(ValueError):
        build_grid(N, R, M)


def test_grid_basics():
    g = build_grid(2, 3.0, 7, center=(1.0, -2.0))
    assert g.h == pytest.approx(1.0)
    assert g.shape == (7, 7)
    assert g.points()[g.origin_index].tolist() == [1.0, -2.0]
    assert g.refine().M == 13 and g.refine().h == pytest.approx(0.5)
    big = g.enlarge(2)
    assert big.R == 6.0 and big.h == pytest.approx(g.h)
    assert g == build_grid(2, 3.0, 7, (1.0, -2.0))
    assert hash(g) == hash(build_grid(2, 3.0, 7, (1.0, -2.0)))


@pytest.mark.parametrize("N", [1, 2, 3])
def test_constant_integrates_to_box_volume(N):
    g = build_grid(N, 2.5, 11)
    assert integrate(ScalarField(g, 1.0)) == pytest.approx((2 * 2.5) ** N, rel=1e-14)


@pytest.mark.parametrize("N,M", [(1, 257), (2, 257), (3, 65)])
def test_gaussian_quadrature(N, M):
    g = build_grid(N, 6.0, M)
    assert abs(integrate(sample(gauss, g)) - math.pi ** (N / 2)) < 1e-6


def test_truncated_gaussian_is_second_order():
    exact = (math.sqrt(math.pi) * math.erf(1.0)) ** 2
    errs = [abs(integrate(sample(gauss, build_grid(2, 1.0, M))) - exact) for M in (33, 65, 129)]
    for a, b in zip(errs, errs[1:]):
        assert 3.5 < a / b < 4.5


def test_gradient_exact_for_quadratics():
    g = build_grid(2, 2.0, 21)
    u = sample(lambda x: 3 * x[..., 0] ** 2 - x[..., 0] * x[..., 1] + 2 * x[..., 1], g)
    grad = gradient(u)
    pts = g.points()
    np.testing.assert_allclose(grad.components[0], 6 * pts[..., 0] - pts[..., 1], atol=1e-11)
    np.testing.assert_allclose(grad.components[1], -pts[..., 0] + 2, atol=1e-11)


def test_laplacians_on_polynomials():
    g = build_grid(2, 2.0, 41)
    u = sample(lambda x: x[..., 0] ** 2 + 3 * x[..., 1] ** 2, g)
    np.testing.assert_allclose(laplacian(u).values[1:-1, 1:-1], 8.0, rtol=1e-10)
    q = sample(lambda x: x[..., 0] ** 4 + x[..., 0] ** 2 * x[..., 1] ** 3, g)
    x, y = g.points()[..., 0], g.points()[..., 1]
    exact = 12 * x**2 + 2 * y**3 + 6 * x**2 * y
    np.testing.assert_allclose(laplacian4(q).values[2:-2, 2:-2], exact[2:-2, 2:-2], atol=1e-9)


def test_laplacian4_is_fourth_order():
    errs = []
    for M in (33, 65):
        g = build_grid(2, 4.0, M)
        u = sample(gauss, g)
        r2 = np.sum(g.points() ** 2, axis=-1)
        exact = (4 * r2 - 4) * np.exp(-r2)
        errs.append(np.abs(laplacian4(u).values - exact)[2:-2, 2:-2].max())
    assert errs[0] / errs[1] > 12


def test_edge_energy_matches_gaussian_dirichlet_integral():
    g = build_grid(2, 6.0, 257)
    # int |grad e^{-|x|^2/2}|^2 = pi in the plane
    u = sample(lambda x: np.exp(-np.sum(x**2, -1) / 2), g)
    assert edge_energy(u) == pytest.approx(math.pi, rel=5e-4)


def test_edge_energy_variation_is_minus_twice_laplacian(rng):
    g = build_grid(2, 1.0, 17)
    u = zero_boundary(ScalarField(g, rng.normal(size=g.shape)))
    phi = zero_boundary(ScalarField(g, rng.normal(size=g.shape)))
    lhs = edge_inner(u, phi)
    rhs = -float(np.sum(laplacian(u).values * phi.values)) * g.h**2
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert edge_inner(u, u) == pytest.approx(edge_energy(u), rel=1e-14)


def test_boundary_mask_counts():
    g = build_grid(3, 1.0, 5)
    assert boundary_mask(g).sum() == 5**3 - 3**3


def test_non_finite_values_are_reported():
    g = build_grid(1, 1.0, 5)
    with pytest.raises(ValueError, match="x ="):
        with np.errstate(divide="ignore"):
            sample(lambda x: 1.0 / x[..., 0], g)
    with pytest.raises(ValueError):
        VectorField(g, np.array([[0.0, 1.0, np.nan, 0.0, 0.0]]))


def test_field_arithmetic_checks_grids():
    a = ScalarField(build_grid(1, 1.0, 5), 1.0)
    b = ScalarField(build_grid(1, 2.0, 5), 1.0)
    with pytest.raises(ValueError):
        a + b
    c = (2 * a - 1.0) / 4 + abs(-a) ** 2
    np.testing.assert_allclose(c.values, 1.25)
    with pytest.raises(ValueError):
        a.values[0] = 3.0


field_values = arrays(np.float64, (9, 9), elements=st.floats(-1e3, 1e3))


@settings(max_examples=60, deadline=None)
@given(field_values, field_values, st.floats(-10, 10))
def test_integrate_is_linear(a, b, c):
    g = build_grid(2, 1.0, 9)
    u, v = ScalarField(g, a), ScalarField(g, b)
    lhs = integrate(u + c * v)
    rhs = integrate(u) + c * integrate(v)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * (1 + np.abs(a).sum() + abs(c) * np.abs(b).sum()))


@settings(max_examples=60, deadline=None)
@given(field_values, st.floats(-5, 5))
def test_edge_energy_nonnegative_and_quadratic(a, c):
    g = build_grid(2, 1.0, 9)
    u = ScalarField(g, a)
    e = edge_energy(u)
    assert e >= 0
    assert edge_energy(c * u) == pytest.approx(c * c * e, rel=1e-9, abs=1e-300)
    assert edge_energy(u + 7.0) == pytest.approx(e, rel=1e-9, abs=1e-6)


def test_three_node_weights():
    g = build_grid(1, 1.0, 3)
    assert g.axis.tolist() == [-1.0, 0.0, 1.0]
    assert g.weights.tolist() == [0.5, 1.0, 0.5]
    assert build_grid(2, 1.0, 3).weights.sum() == 4.0
    g3 = build_grid(3, 2.0, 5)
    assert g3.size == 125 and g3.weights.sum() == 64.0


def test_odd_symmetry():
    g = build_grid(2, 3.0, 31)
    u = sample(lambda x: x[..., 0], g)
    np.testing.assert_array_equal(u.values, -u.values[::-1, :])
    assert abs(integrate(u)) < 1e-13
    assert sample(lambda x: np.exp(-np.sum(x**2, -1) / 2), g).values[g.origin_index] == 1.0


def test_gaussian_derivatives_are_second_order():
    errs_g, errs_l = [], []
    for M in (61, 121):
        g = build_grid(2, 3.0, M)
        u = sample(lambda x: np.exp(-np.sum(x**2, -1) / 2), g)
        i = (g.M // 2 + (g.M - 1) // 6, g.M // 2)  # the node (1, 0)
        assert g.points()[i].tolist() == pytest.approx([1.0, 0.0])
        errs_g.append(abs(gradient(u).components[0][i] + math.exp(-0.5)))
        errs_l.append(abs(laplacian(u).values[g.origin_index] + 2.0))
    assert 3.5 < errs_g[0] / errs_g[1] < 4.5
    assert 3.5 < errs_l[0] / errs_l[1] < 4.5


def test_summation_by_parts_with_gradient():
    gaps = []
    for M in (41, 81, 161):
        g = build_grid(2, 4.0, M)
        u = sample(lambda x: np.exp(-np.sum(x**2, -1)), g)
        v = sample(lambda x: np.exp(-np.sum((x - 0.5) ** 2, -1) / 2), g)
        gu, gv = gradient(u), gradient(v)
        gaps.append(abs(integrate(v * laplacian(u)) + integrate(gu.dot(gv))) / g.h)
    assert max(gaps) < 1.0


def test_richardson_consistency():
    f = lambda x: np.cos(x[..., 0]) * np.exp(x[..., 1] / 3)  # noqa: E731
    g = build_grid(2, 1.0, 17)
    a, b, c = (integrate(sample(f, gg)) for gg in (g, g.refine(), g.refine().refine()))
    assert abs(a - b) / abs(b - c) == pytest.approx(4.0, rel=0.02)
