"""Built-in map families, elliptic functions, and the map-spec text format."""

import sys
from pathlib import Path

import numpy as np
import pytest

from greendyn.errors import DegenerateMap, PoleAtLattice
from greendyn.families import (
    FamilySpec,
    LatticeInvariants,
    build_map,
    chebyshev_map,
    critical_points,
    lattes_from_duplication,
    postcritical_check,
    power_map,
    quadratic_map,
    weierstrass_p,
)
from greendyn.maps import ProjPoint, fs_derivative_log

sys.path.insert(0, str(Path(__file__).parent / "oracles"))
from weierstrass_ode import ode_value  # noqa: E402


# ------------------------------------------------------------------ chebyshev


def test_chebyshev_coefficients():
    m2 = chebyshev_map(2)
    assert np.allclose(m2.p, [-2, 0, 1])
    assert np.allclose(m2.q, [1, 0, 0])
    m3 = chebyshev_map(3)
    assert np.allclose(m3.p, [0, -3, 0, 1])
    assert np.allclose(m3.q, [1, 0, 0, 0])


def test_chebyshev_semiconjugacy_with_the_power_map():
    # pi(z^d) = T_d(pi(z)) for pi(z) = z + 1/z
    rng = np.random.default_rng(2)
    for d in (2, 3):
        m = chebyshev_map(d)
        for _ in range(100):
            z = complex(rng.normal(), rng.normal())
            if not 0.5 <= abs(z) <= 2.0:
                continue
            w = z + 1 / z
            lhs = z ** d + 1 / z ** d
            rhs = m(ProjPoint(w, 1.0)).affine
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


# ------------------------------------------------------------------- quadratic


def test_quadratic_coefficients():
    m = quadratic_map(0.25)
    assert np.allclose(m.p, [0.25, 0, 1])
    assert np.allclose(m.q, [1, 0, 0])
    assert m.degree == 2


# ---------------------------------------------------------------- lattes maps


def test_duplication_map_closed_form():
    # duplicating p for g3 = 0 gives (z^4 + g2/2 z^2 + (g2/4)^2 ... ) — for
    # g2 = 4: L(z) = (z^4 + 2 z^2 + 1) / (4 z^3 - 4 z)
    m = lattes_from_duplication(4.0, 0.0)
    assert m.degree == 4
    assert np.allclose(m.p, [1, 0, 2, 0, 1])
    assert np.allclose(m.q, [0, -4, 0, 4, 0])


def test_duplication_accepts_complex_invariants_and_defaults():
    m = build_map(FamilySpec("lattes", {"g2": "4"}))  # g3 defaults to 0
    assert np.allclose(m.p, [1, 0, 2, 0, 1])
    m2 = lattes_from_duplication(complex(4.0, 1.0), complex(0.5, -0.25))
    assert m2.degree == 4


def test_degenerate_lattices_are_rejected():
    with pytest.raises(DegenerateMap):
        lattes_from_duplication(3.0, 1.0)  # g2^3 = 27 g3^2
    with pytest.raises(DegenerateMap):
        lattes_from_duplication(0.0, 0.0)


# ---------------------------------------------------------- weierstrass p


def test_p_has_pole_at_lattice_points():
    with pytest.raises(PoleAtLattice):
        weierstrass_p(0.0, LatticeInvariants(4.0, 0.0))


def test_p_laurent_expansion_at_the_origin():
    inv = LatticeInvariants(4.0, 0.0)
    u = 1e-3
    w, wp = weierstrass_p(u, inv)
    assert abs(u * u * w - 1.0) <= 1e-6
    assert abs(wp * u ** 3 / (-2.0) - 1.0) <= 1e-6


def test_p_satisfies_its_differential_equation():
    # (p')^2 = 4 p^3 - g2 p - g3
    rng = np.random.default_rng(3)
    for inv in [LatticeInvariants(4.0, 0.0), LatticeInvariants(2.0, 0.5),
                LatticeInvariants(complex(3, 1), complex(0.2, -0.4))]:
        for _ in range(100):
            u = complex(rng.uniform(0.1, 0.6), rng.uniform(0.1, 0.6))
            w, wp = weierstrass_p(u, inv)
            res = abs(wp ** 2 - (4 * w ** 3 - inv.g2 * w - inv.g3))
            assert res <= 1e-8 * max(1.0, abs(w) ** 3)


def test_p_matches_independent_ode_integration():
    # cross-check against direct numerical integration of w'' = 6w^2 - g2/2
    inv = LatticeInvariants(4.0, 0.0)
    for u in [0.2 + 0.2j, 0.35 + 0.15j, 0.18 + 0.4j, 0.42 + 0.33j]:
        w, _ = weierstrass_p(u, inv)
        w_ode = ode_value(u, 4.0, 0.0)
        assert abs(w - w_ode) <= 1e-8 * max(1.0, abs(w_ode))


def test_duplication_semiconjugacy():
    # L(p(u)) = p(2u) on random nondegenerate lattices
    rng = np.random.default_rng(12)
    for _ in range(3):
        while True:
            g2 = complex(rng.normal(), rng.normal()) * 2
            g3 = complex(rng.normal(), rng.normal())
            if abs(g2 ** 3 - 27 * g3 ** 2) > 0.5:
                break
        inv = LatticeInvariants(g2, g3)
        m = lattes_from_duplication(g2, g3)
        for _ in range(20):
            u = complex(rng.uniform(0.1, 0.45), rng.uniform(0.1, 0.45))
            w, _ = weierstrass_p(u, inv)
            w2, _ = weierstrass_p(2 * u, inv)
            img = m(ProjPoint(w, 1.0)).affine
            assert abs(img - w2) <= 1e-9 * max(1.0, abs(w2))


# ------------------------------------------------------------ critical orbits


def test_critical_points_of_polynomial_families():
    for m in (power_map(2), chebyshev_map(2)):
        cps = critical_points(m)
        assert len(cps) == 2
        zero = ProjPoint(0.0, 1.0)
        inf = ProjPoint.infinity()
        assert min(c.chordal(zero) for c in cps) <= 1e-9
        assert min(c.chordal(inf) for c in cps) <= 1e-9


def test_critical_points_of_the_duplication_map():
    m = lattes_from_duplication(4.0, 0.0)
    cps = critical_points(m)
    assert len(cps) == 6
    s = np.sqrt(2.0)
    expected = [s - 1, 1 - s, 1j, -1j, s + 1, -s - 1]
    for e in expected:
        assert min(c.chordal(ProjPoint(e, 1.0)) for c in cps) <= 1e-6
    # the spherical derivative vanishes at each critical point
    for c in cps:
        assert fs_derivative_log(m, c) <= -30.0


def test_postcritical_orbit_of_the_duplication_map_is_finite():
    m = lattes_from_duplication(4.0, 0.0)
    rep = postcritical_check(m, steps=20, tol=1e-8)
    assert rep.stabilized
    assert rep.orbits_cycle
    assert rep.finite_fingerprint
    assert len(rep.postcritical) == 4
    targets = [ProjPoint(-1.0, 1.0), ProjPoint(0.0, 1.0), ProjPoint(1.0, 1.0),
               ProjPoint.infinity()]
    for t in targets:
        assert min(p.chordal(t) for p in rep.postcritical) <= 1e-6


def test_generic_quadratic_is_not_postcritically_finite():
    rep = postcritical_check(quadratic_map(0.3), steps=20, tol=1e-8)
    assert not rep.stabilized
    assert not rep.finite_fingerprint


def test_power_map_postcritical_set():
    rep = postcritical_check(power_map(2), steps=20, tol=1e-8)
    assert rep.stabilized
    assert len(rep.postcritical) == 2


def test_postcritical_check_needs_enough_steps():
    with pytest.raises(ValueError):
        postcritical_check(power_map(2), steps=3)


# ------------------------------------------------------------ map-spec format


def test_spec_text_round_trip():
    spec = FamilySpec("quadratic", {"c": complex(0.25, -0.5)})
    text = spec.to_text()
    back = FamilySpec.from_text(text)
    assert back.family == "quadratic"
    assert build_map(back).degree == 2


def test_spec_text_with_comments_and_blanks():
    text = """
# a squaring map
family = power

d = 2   # degree
"""
    spec = FamilySpec.from_text(text)
    assert spec.family == "power"
    assert build_map(spec).degree == 2


def test_explicit_family_round_trips_coefficient_lists():
    spec = FamilySpec("explicit", {"p": [0j, 0j, 1 + 0j], "q": [1 + 0j, 0j, 0j]})
    m = build_map(FamilySpec.from_text(spec.to_text()))
    assert m.degree == 2
    assert m(ProjPoint(3.0, 1.0)).affine == pytest.approx(9.0)


def test_spec_text_error_paths():
    with pytest.raises(ValueError, match="family"):
        FamilySpec.from_text("d = 2\n")
    with pytest.raises(ValueError, match="bad map spec line"):
        FamilySpec.from_text("family = power\nnonsense\n")
    with pytest.raises(ValueError, match="unknown family"):
        build_map(FamilySpec("nosuch", {}))
    with pytest.raises(ValueError):
        build_map(FamilySpec("quadratic", {}))  # missing parameter c
