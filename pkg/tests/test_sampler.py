"""Backward-iteration sampling of the balanced measure and invariance checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from greendyn.families import FamilySpec, build_map
from greendyn.maps import ProjPoint
from greendyn.sampler import (
    BUILTIN_TEST_FUNCTIONS,
    TestFunction,
    backward_orbit,
    backward_sample,
    preimages,
    pullback_balance_test,
    pushforward_test,
)


def mk(family, **params):
    return build_map(FamilySpec(family, {k: str(v) for k, v in params.items()}))


# ------------------------------------------------------------------ preimages


def test_preimages_of_the_power_map():
    m = mk("power", d=2)
    pts = preimages(m, ProjPoint(1.0, 1.0))
    assert len(pts) == 2
    assert sorted(np.round(p.affine.real, 9) for p in pts) == [-1.0, 1.0]
    # exceptional points: multiplicity-d fixed preimage
    zeros = preimages(m, ProjPoint(0.0, 1.0))
    assert all(p.chordal(ProjPoint(0.0, 1.0)) <= 1e-9 for p in zeros)
    infs = preimages(m, ProjPoint.infinity())
    assert all(p.chordal(ProjPoint.infinity()) <= 1e-9 for p in infs)


def test_preimages_of_the_chebyshev_map():
    pts = preimages(mk("chebyshev", d=2), ProjPoint(2.0, 1.0))
    assert sorted(np.round(p.affine.real, 9) for p in pts) == [-2.0, 2.0]


# -------------------------------------------------------------- backward orbit


def test_backward_orbit_steps_are_genuine_preimages():
    m = mk("quadratic", c=0.25)
    orb = backward_orbit(m, ProjPoint(1.3, 1.0), 30, seed=4)
    assert len(orb) == 30
    assert orb.branches.shape == (30,)
    path = orb.path
    assert len(path) == 31
    for t in range(len(path) - 1):
        assert m(path[t + 1]).chordal(path[t]) <= 1e-9


def test_backward_orbit_is_deterministic():
    m = mk("quadratic", c=0.25)
    a = backward_orbit(m, ProjPoint(1.3, 1.0), 20, seed=9)
    b = backward_orbit(m, ProjPoint(1.3, 1.0), 20, seed=9)
    assert np.array_equal(a.branches, b.branches)
    assert all(p.chordal(q) == 0.0 for p, q in zip(a.points, b.points))


# ------------------------------------------------------------- cloud support


def test_power_cloud_lives_on_the_unit_circle(power2_cloud):
    _, cloud = power2_cloud
    r = np.abs(cloud.z0 / cloud.z1)
    assert np.max(np.abs(r - 1.0)) <= 1e-6


def test_chebyshev_cloud_lives_on_the_real_segment(cheb2_cloud):
    _, cloud = cheb2_cloud
    z = cloud.z0 / cloud.z1
    assert np.max(np.abs(z.imag)) <= 1e-6
    assert np.max(np.abs(z.real)) <= 2.0 + 1e-6


# ------------------------------------------------------------ reproducibility


def test_sampling_is_bit_deterministic():
    m = mk("quadratic", c=0.25)
    a = backward_sample(m, count=50, chains=3, burn_in=10, seed=5)
    b = backward_sample(m, count=50, chains=3, burn_in=10, seed=5)
    assert np.array_equal(a.z0, b.z0) and np.array_equal(a.z1, b.z1)
    assert np.array_equal(a.chain_ids, b.chain_ids)


def test_chain_streams_do_not_depend_on_chain_count():
    # chain k's stream is seeded by (seed, k), so adding chains never
    # perturbs existing ones
    m = mk("power", d=2)
    a = backward_sample(m, count=40, chains=4, burn_in=10, seed=5)
    b = backward_sample(m, count=40, chains=8, burn_in=10, seed=5)
    for k in range(4):
        assert np.array_equal(a.z0[a.chain_ids == k], b.z0[b.chain_ids == k])
        assert np.array_equal(a.z1[a.chain_ids == k], b.z1[b.chain_ids == k])


def test_sampling_parameter_validation():
    m = mk("power", d=2)
    with pytest.raises(ValueError):
        backward_sample(m, count=0, chains=2)
    with pytest.raises(ValueError):
        backward_sample(m, count=10, chains=0)
    with pytest.raises(ValueError):
        backward_sample(m, count=10, chains=2, burn_in=0)
    assert len(backward_sample(m, count=5, chains=2, burn_in=1).z0) == 10


def test_longer_burn_in_does_not_shift_the_distribution(quad_cloud):
    # chains are equilibrated by 50 discarded steps: doubling the burn-in
    # leaves the sampled distribution statistically indistinguishable
    m, cloud50 = quad_cloud
    cloud100 = backward_sample(m, count=800, chains=25, burn_in=100, seed=77)
    re50 = (cloud50.z0 / cloud50.z1).real
    re100 = (cloud100.z0 / cloud100.z1).real
    assert ks_2samp(re50, re100).pvalue > 1e-3


# ------------------------------------------------------- invariance testing


def test_constant_function_balances_exactly():
    m = mk("quadratic", c=0.25)
    cloud = backward_sample(m, count=200, chains=5, burn_in=20, seed=3)
    one = TestFunction("one", lambda z0, z1: np.ones_like(np.real(z0)))
    rep = pullback_balance_test(m, cloud, functions=[one])
    assert rep.entries[0].discrepancy == 0.0
    assert rep.entries[0].sigmas == 0.0


def test_sampled_measure_is_balanced_and_invariant():
    for fam, params in [("quadratic", {"c": 0.25}), ("lattes", {"g2": 4.0, "g3": 0.0})]:
        m = mk(fam, **params)
        cloud = backward_sample(m, count=500, chains=40, burn_in=50, seed=9)
        pull = pullback_balance_test(m, cloud)
        push = pushforward_test(m, cloud)
        assert pull.max_sigmas() <= 4.0, f"{fam}: {pull.max_sigmas()}"
        assert push.max_sigmas() <= 4.0, f"{fam}: {push.max_sigmas()}"
        assert pull.passed(4.0) and push.passed(4.0)


# ---------------------------------------------------------------- bookkeeping


def test_empirical_measure_bookkeeping(quad_cloud):
    _, cloud = quad_cloud
    assert cloud.weights.sum() == pytest.approx(1.0, abs=1e-9)
    assert set(np.unique(cloud.chain_ids)) == set(range(25))
    assert cloud.step_ids.min() == 0 and cloud.step_ids.max() == 799
    re, im, flag = cloud.chart_rows()
    assert set(np.unique(flag)) <= {0, 1}
    assert np.all(np.hypot(re, im) <= 1.0 + 1e-12)  # both charts stay bounded


def test_subsample_is_deterministic_and_normalized(quad_cloud):
    _, cloud = quad_cloud
    s1 = cloud.subsample(500)
    s2 = cloud.subsample(500)
    assert len(s1.z0) == 500
    assert np.array_equal(s1.z0, s2.z0)
    assert s1.weights.sum() == pytest.approx(1.0, abs=1e-9)
    # asking for more points than exist is a no-op
    assert cloud.subsample(10 ** 9) is cloud


# ----------------------------------------------------------- test functions


@given(
    st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False),
    st.complex_numbers(min_magnitude=0.01, max_magnitude=100,
                       allow_nan=False, allow_infinity=False),
)
@settings(max_examples=200, deadline=None)
def test_builtin_functions_ignore_the_representative(z0, z1, lam):
    if max(abs(z0), abs(z1)) < 1e-6:
        return
    for f in BUILTIN_TEST_FUNCTIONS:
        a = f(z0, z1)
        b = f(lam * z0, lam * z1)
        assert abs(a - b) <= 1e-9 * max(1.0, abs(a))
