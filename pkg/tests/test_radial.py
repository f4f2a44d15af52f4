import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsobolev.discretization import build_grid
from wsobolev.norms import gaussian, random_battery
from wsobolev.potentials import decaying_weight, make_power
from wsobolev.radial import (RadialField, RadialGrid, embed_1d_check, h1_norm, radial_norms,
                             radial_sample, random_radial_battery, sphere_measure,
                             strauss_check, thrad_tail)


def gauss_profile(r):
    return np.exp(-np.asarray(r) ** 2 / 2)


@pytest.mark.parametrize("N,expected", [(1, 2.0), (2, 2 * math.pi), (3, 4 * math.pi)])
def test_sphere_measure(N, expected):
    assert sphere_measure(N) == pytest.approx(expected)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_radial_gaussian_closed_forms(N):
    g = RadialGrid(N, 12.0, 4001)
    u = radial_sample(gauss_profile, g)
    # int e^{-r^2} over R^N = pi^{N/2}; int |grad u|^2 = (N/2) pi^{N/2}; int r^2 u^2 = (N/2) pi^{N/2}
    base = math.pi ** (N / 2)
    rep = radial_norms(u, make_power(2))
    assert rep.weighted_mass == pytest.approx(base * (1 + N / 2), rel=1e-6)
    assert rep.energy == pytest.approx(base * N / 2, rel=1e-5)
    assert h1_norm(u) == pytest.approx(math.sqrt(base * (1 + N / 2)), rel=1e-5)


def test_radial_matches_cartesian():
    g2 = build_grid(2, 6.0, 257)
    cart = gaussian(g2, width=0.8)
    rad = radial_sample(lambda r: np.exp(-np.asarray(r) ** 2 / (2 * 0.64)), RadialGrid(2, 6.0, 4001))
    V = make_power(2)
    from wsobolev.norms import h1v_norm
    assert radial_norms(rad, V).h1v == pytest.approx(h1v_norm(cart, V), rel=2e-4)


def test_radial_field_validation():
    g = RadialGrid(2, 1.0, 11)
    with pytest.raises(ValueError):
        RadialField(g, np.ones(10))
    with pytest.raises(ValueError):
        RadialField(g, np.full(11, np.nan))


@pytest.mark.parametrize("N", [2, 3])
def test_strauss_constant_below_elementary_bound(N):
    g = RadialGrid(N, 12.0, 2001)
    bound = 1 / math.sqrt(sphere_measure(N))
    consts = [strauss_check(u).constant for u, _ in random_radial_battery(g, 60, seed=N)]
    assert max(consts) <= bound
    assert min(consts) > 0


def test_strauss_stable_under_refinement():
    g = RadialGrid(2, 12.0, 1001)
    u = radial_sample(gauss_profile, g)
    uf = radial_sample(gauss_profile, g.refine())
    rep = strauss_check(u, uf)
    assert rep.stable
    with pytest.raises(ValueError):
        strauss_check(radial_sample(gauss_profile, RadialGrid(1, 5.0, 101)))


@pytest.mark.parametrize("N", [2, 3])
def test_tail_bound_battery(N):
    V = W = make_power(2)
    g = RadialGrid(N, 12.0, 2001)
    for u, desc in random_radial_battery(g, 60, seed=10 + N):
        for cut in (1.0, 2.0, 4.0):
            rep = thrad_tail(u, V, W, decaying_weight(1), 4.0, 4.0, cut)
            assert rep.slack >= 0, desc


def test_tail_constant_and_monotonicity():
    V = W = make_power(2)
    u = radial_sample(gauss_profile, RadialGrid(2, 12.0, 2001))
    reps = [thrad_tail(u, V, W, decaying_weight(1), 4.0, 4.0, c, R_tilde=1.0) for c in (1.0, 2.0, 3.0)]
    assert reps[0].constants["C"] == pytest.approx(2.0, rel=2e-3)
    lhs = [r.lhs for r in reps]
    assert lhs[0] > lhs[1] > lhs[2]


@pytest.mark.parametrize("kwargs", [dict(tau=3.0, tau_bar=4.0, R_cut=2.0), dict(tau=4.0, tau_bar=2.0, R_cut=2.0),
                                    dict(tau=4.0, tau_bar=4.0, R_cut=0.5)])
def test_tail_guards(kwargs):
    u = radial_sample(gauss_profile, RadialGrid(2, 6.0, 101))
    with pytest.raises(ValueError):
        thrad_tail(u, make_power(2), make_power(2), decaying_weight(1), **kwargs)


def test_embed_1d_battery():
    V = make_power(2)
    g = build_grid(1, 8.0, 801)
    ref = embed_1d_check(gaussian(g), V)
    assert ref.gradient_constant == pytest.approx(4 / (3 * math.sqrt(3)), rel=1e-3)
    reps = [embed_1d_check(u, V) for u, _ in random_battery(g, 60, seed=5)]
    assert all(r.holds for r in reps)
    assert max(r.empirical for r in reps) <= 2 * ref.empirical


def test_embed_1d_radial_even_extension():
    V = make_power(2)
    rad = radial_sample(gauss_profile, RadialGrid(1, 8.0, 4001))
    cart = embed_1d_check(gaussian(build_grid(1, 8.0, 1601)), V)
    rep = embed_1d_check(rad, V)
    assert rep.empirical == pytest.approx(cart.empirical, rel=1e-4)
    with pytest.raises(ValueError):
        embed_1d_check(radial_sample(gauss_profile, RadialGrid(2, 8.0, 101)), V)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 10))
def test_strauss_scale_invariant(seed, c):
    g = RadialGrid(2, 8.0, 401)
    u, _ = random_radial_battery(g, 1, seed)[0]
    assert strauss_check(u.scaled(c)).constant == pytest.approx(strauss_check(u).constant, rel=1e-10)


def test_battery_reproducible_on_refined_grid():
    g = RadialGrid(2, 12.0, 1001)
    a = random_radial_battery(g, 5, 4)
    b = random_radial_battery(g.refine(), 5, 4, min_width=4 * g.h)
    for (u, da), (v, db) in zip(a, b):
        assert da == db
        np.testing.assert_allclose(v.values[::2], u.values, atol=1e-14)
