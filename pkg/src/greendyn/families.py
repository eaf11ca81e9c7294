"""Built-in map families and the elliptic machinery behind the Lattès one.

The Lattès family used here is the quotient of multiplication by 2 on a
complex torus: w = p(u) semiconjugates u -> 2u to the degree-4 rational
map L obtained from the classical duplication formula

    p(2u) = -2 p(u) + (6 p(u)^2 - g2/2)^2 / (4 (4 p(u)^3 - g2 p(u) - g3)),

so L(p(u)) = p(2u) identically.  Clearing denominators and dividing by 4,

    L(w) = (w^4 + (g2/2) w^2 + 2 g3 w + g2^2/16) / (4 w^3 - g2 w - g3).

p itself is evaluated by a truncated Laurent series near 0 followed by
repeated duplication, so the only lattice data needed are the
invariants (g2, g3).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMap, PoleAtLattice
from .maps import ProjPoint, RationalMap, as_point, iterate, make_rational_map
from .roots import solve_poly_roots

__all__ = [
    "LatticeInvariants",
    "FamilySpec",
    "PostcriticalReport",
    "power_map",
    "chebyshev_map",
    "quadratic_map",
    "lattes_from_duplication",
    "weierstrass_p",
    "critical_points",
    "postcritical_check",
    "build_map",
]


def power_map(d: int) -> RationalMap:
    """z -> z^d."""
    if d < 2:
        raise ValueError("power map needs degree >= 2")
    p = np.zeros(d + 1)
    p[d] = 1.0
    return make_rational_map(p, [1.0])


def chebyshev_map(d: int) -> RationalMap:
    """The degree-d Chebyshev map normalized to act on [-2, 2].

    Defined by the semiconjugacy T(z + 1/z) = z^d + 1/z^d; for d = 2
    this is z^2 - 2.  Coefficients follow the three-term recurrence
    T_{n+1}(w) = w T_n(w) - T_{n-1}(w) with T_0 = 2, T_1 = w.
    """
    if d < 2:
        raise ValueError("Chebyshev map needs degree >= 2")
    prev = np.array([2.0])
    cur = np.array([0.0, 1.0])
    for _ in range(d - 1):
        nxt = np.concatenate([[0.0], cur])
        nxt[: len(prev)] -= prev
        prev, cur = cur, nxt
    return make_rational_map(cur, [1.0])


def quadratic_map(c: complex) -> RationalMap:
    """z -> z^2 + c."""
    return make_rational_map([complex(c), 0.0, 1.0], [1.0])


@dataclass(frozen=True)
class LatticeInvariants:
    """Weierstrass invariants (g2, g3) of a nondegenerate lattice."""

    g2: complex
    g3: complex

    @property
    def discriminant(self) -> complex:
        return self.g2 ** 3 - 27.0 * self.g3 ** 2

    def validate(self, rel_floor: float = 1e-12):
        scale = max(abs(self.g2) ** 3, abs(self.g3) ** 2)
        if scale == 0.0 or abs(self.discriminant) < rel_floor * scale:
            raise DegenerateMap(
                f"degenerate lattice: |g2^3 - 27 g3^2| = {abs(self.discriminant):.3e}"
            )


def lattes_from_duplication(g2, g3: complex = 0.0) -> RationalMap:
    """Degree-4 Lattès map of the duplication formula.

    Accepts either LatticeInvariants or the raw pair (g2, g3).
    """
    inv = g2 if isinstance(g2, LatticeInvariants) \
        else LatticeInvariants(complex(g2), complex(g3))
    inv.validate()
    g2, g3 = inv.g2, inv.g3
    p = [g2 ** 2 / 16.0, 2.0 * g3, g2 / 2.0, 0.0, 1.0]
    q = [-g3, -g2, 0.0, 4.0]
    return make_rational_map(p, q)


# ---------------------------------------------------------------------------
# Weierstrass p-function
# ---------------------------------------------------------------------------

# Laurent coefficients c_k of p(u) = u^-2 + sum_{k>=2} c_k u^{2k-2}:
# c_2 = g2/20, c_3 = g3/28, and for k >= 4
#   c_k = 3 / ((2k+1)(k-3)) * sum_{m=2}^{k-2} c_m c_{k-m}.
_SERIES_TERMS = 12


def _laurent_coeffs(g2: complex, g3: complex) -> np.ndarray:
    c = np.zeros(_SERIES_TERMS + 1, dtype=complex)
    c[2] = g2 / 20.0
    c[3] = g3 / 28.0
    for k in range(4, _SERIES_TERMS + 1):
        acc = sum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = 3.0 * acc / ((2 * k + 1) * (k - 3))
    return c


def _duplication_step(w: complex, dw: complex, g2: complex, g3: complex):
    """(p, p')(v) -> (p, p')(2v) through the duplication formula.

    The derivative advances by the chain rule p'(2v) = L'(p(v)) p'(v) / 2,
    which keeps the sign of p' consistent (the ODE alone would not).
    """
    if not (cmath.isfinite(w) and cmath.isfinite(dw)):
        raise PoleAtLattice("duplication left the finite chart")
    a = 6.0 * w * w - g2 / 2.0
    den = 4.0 * w ** 3 - g2 * w - g3
    if den == 0:
        raise PoleAtLattice("argument duplicated onto the period lattice")
    w2 = a * a / (4.0 * den) - 2.0 * w
    # L'(w) = (2 a * 12 w * 4 den - a^2 * 4 (12 w^2 - g2)) / (16 den^2) - 2
    lp = (24.0 * a * w * den - a * a * (12.0 * w * w - g2)) / (4.0 * den * den) - 2.0
    return w2, lp * dw / 2.0


def weierstrass_p(u: complex, inv: LatticeInvariants) -> tuple[complex, complex]:
    """(p(u), p'(u)) for the lattice with invariants inv.

    The argument is halved until the dimensionless sizes |g2 u^4| and
    |g3 u^6| are small, the Laurent series is summed there, and the
    value is pushed back up by duplication steps.  Relative accuracy is
    ~1e-12 away from the lattice; at (or numerically on) lattice points
    PoleAtLattice is raised.
    """
    inv.validate()
    u = complex(u)
    if u == 0:
        raise PoleAtLattice("p has a pole at lattice points")
    g2, g3 = inv.g2, inv.g3

    v = u
    halvings = 0
    while max(abs(g2) * abs(v) ** 4, abs(g3) * abs(v) ** 6) > 1e-3:
        v /= 2.0
        halvings += 1
        if halvings > 200:
            raise PoleAtLattice("argument reduction failed to converge")

    c = _laurent_coeffs(g2, g3)
    v2 = v * v
    w = 1.0 / v2
    dw = -2.0 / (v2 * v)
    vpow = v2  # v^{2k-2} starting at k = 2
    for k in range(2, _SERIES_TERMS + 1):
        w += c[k] * vpow
        dw += (2 * k - 2) * c[k] * vpow / v
        vpow *= v2

    for _ in range(halvings):
        w, dw = _duplication_step(w, dw, g2, g3)
    if not (cmath.isfinite(w) and cmath.isfinite(dw)):
        raise PoleAtLattice("value overflowed near a lattice point")
    return w, dw


# ---------------------------------------------------------------------------
# critical orbits
# ---------------------------------------------------------------------------


def critical_points(m: RationalMap) -> list[ProjPoint]:
    """The 2d-2 critical points, with multiplicity.

    Finite ones are the roots of the Wronskian P'Q - PQ'; the remaining
    multiplicity sits at infinity.
    """
    d = m.degree
    w = np.convolve(m.dp, m.q) - np.convolve(m.p, m.dq)
    w = w[: 2 * d - 1]  # degree-(2d-1) coefficient cancels identically
    finite, _ = solve_poly_roots(w)
    pts = [ProjPoint.from_affine(z) for z in finite]
    pts.extend(ProjPoint.infinity() for _ in range(2 * d - 2 - len(pts)))
    return pts


@dataclass
class PostcriticalReport:
    critical: list
    postcritical: list
    stabilized: bool
    bound: int
    new_point_steps: list = field(default_factory=list)
    orbits_cycle: bool = False

    @property
    def finite_fingerprint(self) -> bool:
        """Every orbit cycles onto at most 2d-2 points: the Lattès signature."""
        return self.stabilized and self.orbits_cycle \
            and len(self.postcritical) <= self.bound


def postcritical_check(m: RationalMap, steps: int = 20,
                       tol: float = 1e-9) -> PostcriticalReport:
    """Track critical orbits and report whether their union stabilizes.

    Each critical orbit is followed until it returns within chordal
    distance ``tol`` of one of its own earlier points (it has entered a
    cycle: the true orbit stays on that cycle forever, while continued
    floating-point iteration would just amplify rounding noise along
    the repelling directions) or the step horizon runs out.  The
    postcritical set is the union of the truncated orbits, deduplicated
    at ``tol``; it counts as stabilized when no new point appears
    during the second half of the horizon, and ``orbits_cycle`` records
    whether every critical orbit exhibited a near-return.
    """
    if steps < 4:
        raise ValueError("postcritical check needs steps >= 4")
    crits = critical_points(m)
    seen: list[ProjPoint] = []
    new_at: list[int] = []

    starts = []
    for c in crits:
        if not any(c.chordal(s) <= tol for s in starts):
            starts.append(c)
    orbits = []
    all_cycle = True
    for c in starts:
        pts = iterate(m, c, steps).points[1:]
        cut = len(pts)
        for l in range(1, len(pts)):
            if any(pts[l].chordal(pts[k]) <= tol for k in range(l)):
                cut = l + 1
                break
        else:
            all_cycle = False
        orbits.append(pts[:cut])

    for k in range(steps):
        for orb in orbits:
            if k >= len(orb):
                continue
            pt = orb[k]
            if not any(pt.chordal(s) <= tol for s in seen):
                seen.append(pt)
                new_at.append(k + 1)
    stabilized = all(step <= steps // 2 for step in new_at)
    return PostcriticalReport(crits, seen, stabilized, 2 * m.degree - 2,
                              new_at, all_cycle)


# ---------------------------------------------------------------------------
# map family descriptions (the text format used by the CLI)
# ---------------------------------------------------------------------------


def _format_complex_pair(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r} {z.imag!r}"


def _parse_complex_pairs(text: str) -> list[complex]:
    vals = [float(tok) for tok in text.replace(",", " ").split()]
    if len(vals) % 2 != 0:
        raise ValueError("complex coefficients must come as re/im pairs")
    return [complex(a, b) for a, b in zip(vals[::2], vals[1::2])]


@dataclass
class FamilySpec:
    """A named map family plus parameters; round-trips through text."""

    family: str
    params: dict

    def to_text(self) -> str:
        lines = [f"family = {self.family}"]
        for key, val in sorted(self.params.items()):
            if isinstance(val, (list, tuple, np.ndarray)):
                body = "  ".join(_format_complex_pair(z) for z in val)
            elif isinstance(val, complex):
                body = _format_complex_pair(val)
            elif isinstance(val, float):
                body = repr(val)
            else:
                body = str(val)
            lines.append(f"{key} = {body}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FamilySpec":
        family = None
        params: dict = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad map spec line: {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key == "family":
                family = val
            else:
                params[key] = val
        if family is None:
            raise ValueError("map spec has no 'family' line")
        return cls(family, params)


def build_map(spec: FamilySpec) -> RationalMap:
    """Construct the RationalMap described by a FamilySpec.

    Parameter values may be raw strings (as parsed from text) or already
    typed numbers/lists.
    """
    fam = spec.family.lower()
    p = spec.params

    def _as_int(key):
        return int(p[key])

    def _as_complex(key, default=None):
        if key not in p:
            if default is None:
                raise ValueError(f"family {fam!r} needs parameter {key!r}")
            return default
        v = p[key]
        if isinstance(v, str):
            toks = v.replace(",", " ").split()
            if len(toks) == 1:
                return complex(float(toks[0]), 0.0)
            if len(toks) == 2:
                return complex(float(toks[0]), float(toks[1]))
            raise ValueError(f"parameter {key!r} must be a single complex value")
        return complex(v)

    def _as_coeffs(key):
        v = p[key]
        if isinstance(v, str):
            return _parse_complex_pairs(v)
        return [complex(z) for z in v]

    if fam == "power":
        return power_map(_as_int("d"))
    if fam == "chebyshev":
        return chebyshev_map(_as_int("d"))
    if fam == "quadratic":
        return quadratic_map(_as_complex("c"))
    if fam == "lattes":
        return lattes_from_duplication(_as_complex("g2"), _as_complex("g3", 0.0))
    if fam == "explicit":
        return make_rational_map(_as_coeffs("p"), _as_coeffs("q"))
    raise ValueError(f"unknown family {spec.family!r}")
