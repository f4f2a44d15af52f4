import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsobolev.counterexamples import (BumpProfile, BumpSequence, CenterSearchError, assemble,
                                      build_annular, build_general, build_vnon, certify_norms,
                                      smoothstep, weak_null_check)
from wsobolev.discretization import build_grid, integrate
from wsobolev.norms import gaussian
from wsobolev.potentials import make_annular_step, make_constant, make_power


def bump_b1(x):
    r = np.sqrt(np.sum(np.asarray(x) ** 2, axis=-1))
    return np.where(r < 1, np.exp(-1.0 / np.maximum(1 - r**2, 1e-300)), 0.0)


def weak_battery():
    return [
        ("bump_B1", bump_b1),
        ("gauss_w1", lambda x: np.exp(-np.sum(np.asarray(x) ** 2, axis=-1) / 2)),
        ("gauss_w3", lambda x: np.exp(-np.sum(np.asarray(x) ** 2, axis=-1) / 18)),
    ]


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 2), st.floats(-1, 2))
def test_smoothstep_is_monotone_ramp(a, b):
    lo, hi = sorted((a, b))
    assert 0.0 <= smoothstep(lo) <= smoothstep(hi) <= 1.0


def test_smoothstep_slope():
    t = np.linspace(0, 1, 100001)
    assert np.max(np.gradient(smoothstep(t), t)) == pytest.approx(1.5, rel=1e-6)


def test_bump_profile_plateau_and_support():
    b = BumpProfile((3.0, 0.0), 0.5, 1.0, 2.0)
    assert b(np.array([3.2, 0.1])) == pytest.approx(2.0)
    assert b(np.array([4.01, 0.0])) == 0.0
    assert b.gradient_bound == pytest.approx(1.5 * 2.0 / 0.5)
    with pytest.raises(ValueError):
        BumpProfile((0.0, 0.0), 1.0, 0.5, 1.0)


def test_overlapping_supports_rejected():
    with pytest.raises(ValueError, match="overlap"):
        BumpSequence("x", [BumpProfile((0.0, 0.0), 0.5, 1.0, 1.0),
                           BumpProfile((1.5, 0.0), 0.5, 1.0, 1.0)], [1.0, 1.0])


def test_vnon_first_centers():
    V = make_power(2)
    seq = build_vnon(V, N=3, tau=4, m=1, n_max=3)
    # beta = 1/8, so V(x_1) = 2^8, V(x_2) >= 2^16, V(x_3) >= 2^24
    assert seq.profiles[0].center[0] == pytest.approx(math.sqrt(255), rel=1e-9)
    assert seq.profiles[0].height == pytest.approx(4.0)
    assert seq.profiles[1].V_center >= 2.0**16 * (1 - 1e-12)
    assert seq.profiles[1].height == pytest.approx(16.0, rel=1e-6)
    assert seq.profiles[2].height == pytest.approx(64.0, rel=1e-6)
    assert seq.scalings == pytest.approx([0.5, 0.25, 0.125], rel=1e-6)


def test_vnon_guards():
    with pytest.raises(ValueError):
        build_vnon(make_power(2), N=2)
    with pytest.raises(ValueError):
        build_vnon(make_power(2), tau=2.0)
    with pytest.raises(CenterSearchError):
        build_vnon(make_constant(1.0), N=3)


def test_vnon_certification():
    V = make_power(2)
    cert = certify_norms(build_vnon(V, N=3, tau=4, m=2, n_max=5), V, 4.0)
    assert cert.passed, cert.verdicts
    h1 = cert.column("h1v")
    assert max(h1) <= 3 * min(h1)
    lw = cert.column("lw_tau")
    assert all(b / a > 1.5 for a, b in zip(lw, lw[1:]))
    for row in cert.rows:
        assert row["tail_v_h1v"] <= row["envelope"]


def test_general_sequence_certification():
    V = make_power(2)
    seq = build_general(V, 1.0, [(2.0**k, 0.0) for k in range(3, 9)])
    cert = certify_norms(seq, V, 3.0)
    assert cert.passed, cert.verdicts
    h1 = cert.column("h1v")
    # the plateau bump on B(x, m / sqrt V(x)) has a scale-free H_V norm when V is nearly constant there
    assert max(h1) / min(h1) < 1.01
    weak = weak_null_check(seq, V, weak_battery())
    assert weak.passed, weak.tables
    assert weak.zero_from["bump_B1"] == 1
    assert abs(weak.tables["gauss_w1"][-1]) < 1e-100


def test_annular_sequence_certification():
    V = make_annular_step()
    seq = build_annular(range(2, 9))
    cert = certify_norms(seq, V, 3.0)
    assert cert.passed, cert.verdicts
    weak = weak_null_check(seq, V, weak_battery())
    assert weak.passed, weak.tables
    with pytest.raises(ValueError, match="overlap"):
        build_annular(range(1, 4))


def test_weak_null_accepts_grid_test_fields():
    V = make_power(2)
    seq = build_general(V, 1.0, [(4.0, 0.0), (8.0, 0.0)])
    g = build_grid(2, 3.0, 61)
    rep = weak_null_check(seq, V, [("gauss_field", gaussian(g))])
    # the sampled test field is zero outside its box, so both entries vanish
    assert rep.tables["gauss_field"] == [0.0, 0.0]
    assert rep.passed


def test_weak_null_flags_non_decay():
    V = make_power(2)
    seq = build_general(V, 1.0, [(2.0, 0.0), (4.0, 0.0)])
    rep = weak_null_check(seq, V, [("wide", lambda x: np.ones(np.shape(x)[:-1]))])
    assert not rep.passed


def test_assemble_matches_disjoint_sum():
    V = make_power(2)
    seq = build_general(V, 1.0, [(2.0, 0.0), (-2.0, 0.0)])
    g = build_grid(2, 3.0, 241)
    total = integrate(assemble(seq, g))
    parts = sum(integrate(u) for u in seq.fields())
    assert total == pytest.approx(parts, rel=2e-2)
