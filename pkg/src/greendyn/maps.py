"""Rational self-maps of the Riemann sphere in homogeneous coordinates.

A degree-d map f = P/Q is stored as the ascending coefficient vectors of
P and Q (padded to length d+1) and evaluated through its homogeneous
lift F(z0, z1) = (P^(z0, z1), Q^(z0, z1)).  Points live on the
projective line as coordinate pairs normalized to unit max-modulus, so
poles and the point at infinity need no special casing downstream.

Derivatives are measured in the Fubini-Study metric |dz|/(1+|z|^2).
In the affine chart the operator norm of df at z is

    |W(z)| * (1 + |z|^2) / (|P(z)|^2 + |Q(z)|^2),   W = P'Q - PQ',

which stays well defined when f(z) is a pole; near infinity the same
formula is applied to the reversed-coefficient polynomials in w = 1/z.
Both charts agree on the overlap because the chart transition is an
FS isometry in modulus.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMap

__all__ = [
    "ProjPoint",
    "RationalMap",
    "OrbitRecord",
    "make_rational_map",
    "as_point",
    "fs_derivative_log",
    "fs_derivative_complex",
    "iterate",
]

# Wronskian values with modulus at or below this floor are reported as
# exact critical points (log derivative -inf) rather than huge negatives.
_CRITICAL_FLOOR = 1e-300


@dataclass(frozen=True)
class ProjPoint:
    """A point of P^1 as a pair (z0 : z1), max-modulus normalized."""

    z0: complex
    z1: complex

    def __post_init__(self):
        z0 = complex(self.z0)
        z1 = complex(self.z1)
        if not (math.isfinite(z0.real) and math.isfinite(z0.imag)
                and math.isfinite(z1.real) and math.isfinite(z1.imag)):
            raise ValueError("projective coordinates must be finite")
        s = max(abs(z0), abs(z1))
        if s == 0.0:
            raise ValueError("(0, 0) is not a point of P^1")
        object.__setattr__(self, "z0", z0 / s)
        object.__setattr__(self, "z1", z1 / s)

    @classmethod
    def from_affine(cls, z: complex) -> "ProjPoint":
        return cls(complex(z), 1.0)

    @classmethod
    def infinity(cls) -> "ProjPoint":
        return cls(1.0, 0.0)

    @property
    def is_infinity(self) -> bool:
        return self.z1 == 0

    @property
    def chart(self) -> int:
        """0 when the affine chart z = z0/z1 is preferred, 1 otherwise."""
        return 0 if abs(self.z0) <= abs(self.z1) else 1

    @property
    def chart_coord(self) -> complex:
        """Coordinate in the preferred chart; modulus is always <= 1."""
        return self.z0 / self.z1 if self.chart == 0 else self.z1 / self.z0

    @property
    def affine(self) -> complex:
        """Affine coordinate z0/z1; math.inf + 0j for the point at infinity."""
        if self.z1 == 0:
            return complex(math.inf, 0.0)
        return self.z0 / self.z1

    def chordal(self, other: "ProjPoint") -> float:
        """Chordal (Fubini-Study) distance, range [0, 1]."""
        num = abs(self.z0 * other.z1 - self.z1 * other.z0)
        na = math.hypot(abs(self.z0), abs(self.z1))
        nb = math.hypot(abs(other.z0), abs(other.z1))
        return num / (na * nb)

    def __repr__(self):
        return f"ProjPoint({self.z0:.6g}, {self.z1:.6g})"


def as_point(z) -> ProjPoint:
    """Coerce a complex number, inf, or ProjPoint into a ProjPoint."""
    if isinstance(z, ProjPoint):
        return z
    if isinstance(z, (int, float)) and math.isinf(z):
        return ProjPoint.infinity()
    z = complex(z)
    if math.isinf(z.real) or math.isinf(z.imag):
        return ProjPoint.infinity()
    return ProjPoint.from_affine(z)


class RationalMap:
    """Degree-d rational self-map of P^1, immutable after construction.

    Use :func:`make_rational_map` or a family constructor instead of
    instantiating directly; the factory validates the resultant.
    """

    def __init__(self, p: np.ndarray, q: np.ndarray, resultant_mag: float):
        d = len(p) - 1
        self.p = p
        self.q = q
        self.degree = d
        self.resultant_mag = resultant_mag
        # Reversed coefficients give the map in the w = 1/z chart:
        # z1^d P(z0/z1) = z0^d Prev(z1/z0).
        self.p_rev = p[::-1].copy()
        self.q_rev = q[::-1].copy()
        k = np.arange(1, d + 1)
        self.dp = p[1:] * k
        self.dq = q[1:] * k
        self.dp_rev = self.p_rev[1:] * k
        self.dq_rev = self.q_rev[1:] * k

    def __call__(self, x: ProjPoint) -> ProjPoint:
        z0, z1 = _eval_pair(self, np.asarray(x.z0), np.asarray(x.z1))
        return ProjPoint(complex(z0), complex(z1))

    def __repr__(self):
        return f"RationalMap(degree={self.degree}, p={list(self.p)}, q={list(self.q)})"


def _strip_high_zeros(c: np.ndarray) -> np.ndarray:
    nz = np.nonzero(c)[0]
    if len(nz) == 0:
        raise DegenerateMap("zero polynomial")
    return c[: nz[-1] + 1]


def _sylvester_resultant_mag(p: np.ndarray, q: np.ndarray) -> float:
    """|Res| of two binary forms of equal degree d (ascending coeffs)."""
    d = len(p) - 1
    n = 2 * d
    s = np.zeros((n, n), dtype=complex)
    pd = p[::-1]  # descending
    qd = q[::-1]
    for i in range(d):
        s[i, i : i + d + 1] = pd
        s[d + i, i : i + d + 1] = qd
    return abs(np.linalg.det(s))


def make_rational_map(p_coeffs, q_coeffs, *, resultant_floor: float = 1e-12) -> RationalMap:
    """Build a validated rational map from ascending coefficient lists.

    The degree is max(deg P, deg Q) and the shorter polynomial is padded.
    Pairs whose homogeneous resultant (computed on the max-normalized
    coefficient pair) falls below ``resultant_floor`` are rejected: such
    maps have, or nearly have, a common factor and no well-defined
    degree-d dynamics.
    """
    p = _strip_high_zeros(np.asarray(p_coeffs, dtype=complex))
    q = _strip_high_zeros(np.asarray(q_coeffs, dtype=complex))
    d = max(len(p), len(q)) - 1
    if d < 2:
        raise ValueError(f"degree must be >= 2, got {d}")
    p = np.pad(p, (0, d + 1 - len(p)))
    q = np.pad(q, (0, d + 1 - len(q)))
    scale = max(np.abs(p).max(), np.abs(q).max())
    res = _sylvester_resultant_mag(p / scale, q / scale)
    if res < resultant_floor:
        raise DegenerateMap(
            f"numerator and denominator share a root: relative resultant "
            f"{res:.3e} < floor {resultant_floor:.3e}"
        )
    return RationalMap(p, q, res)


# ---------------------------------------------------------------------------
# vectorized kernels
#
# All kernels take coordinate arrays (Z0, Z1) of identical shape holding
# max-modulus-normalized pairs, and are elementwise: the value computed
# for one entry never depends on its neighbors, which is what makes
# partitioned/parallel execution bit-identical to serial execution.
# ---------------------------------------------------------------------------


def _horner_sel(ca: np.ndarray, cb: np.ndarray, mask, t: np.ndarray) -> np.ndarray:
    """Horner evaluation with per-element coefficient choice (ca if mask)."""
    acc = np.where(mask, ca[-1], cb[-1]) * np.ones_like(t)
    for j in range(len(ca) - 2, -1, -1):
        acc = acc * t + np.where(mask, ca[j], cb[j])
    return acc


def _eval_core(m: RationalMap, Z0, Z1):
    """Homogeneous evaluation on normalized pairs.

    Returns (A, B, mask, t): the un-renormalized image pair (up to a
    unit-modulus prefactor), the source chart mask and chart coordinate.
    """
    mask = np.abs(Z0) <= np.abs(Z1)
    t = np.where(mask, Z0, Z1) / np.where(mask, Z1, Z0)
    a = _horner_sel(m.p, m.p_rev, mask, t)
    b = _horner_sel(m.q, m.q_rev, mask, t)
    return a, b, mask, t


def _eval_pair(m: RationalMap, Z0, Z1):
    """One map step on normalized pairs; result re-normalized."""
    a, b, _, _ = _eval_core(m, Z0, Z1)
    s = np.maximum(np.abs(a), np.abs(b))
    return a / s, b / s


def _fs_step(m: RationalMap, Z0, Z1):
    """One map step together with the FS-normalized complex derivative.

    The derivative is d/du of (target chart of f)(source chart^-1(u)),
    scaled so its modulus equals the FS operator norm of df.  Chart
    choices follow the max-modulus rule at both ends, so consecutive
    steps compose by plain multiplication.
    """
    mask = np.abs(Z0) <= np.abs(Z1)
    t = np.where(mask, Z0, Z1) / np.where(mask, Z1, Z0)
    a = _horner_sel(m.p, m.p_rev, mask, t)
    b = _horner_sel(m.q, m.q_rev, mask, t)
    da = _horner_sel(m.dp, m.dp_rev, mask, t)
    db = _horner_sel(m.dq, m.dq_rev, mask, t)
    wr = da * b - a * db
    n2 = np.abs(a) ** 2 + np.abs(b) ** 2
    tmask = np.abs(a) <= np.abs(b)
    denom = np.where(tmask, b, a)
    unit = np.conj(denom) / denom
    sign = np.where(tmask, 1.0, -1.0)
    deriv = sign * wr * unit * (1.0 + np.abs(t) ** 2) / n2
    s = np.maximum(np.abs(a), np.abs(b))
    return a / s, b / s, deriv


def _orbit_derivatives(m: RationalMap, Z0, Z1, n: int):
    """n forward steps; returns final pair and per-step complex derivatives.

    Output derivs has shape (n,) + Z0.shape.
    """
    derivs = np.empty((n,) + np.shape(Z0), dtype=complex)
    for k in range(n):
        Z0, Z1, derivs[k] = _fs_step(m, Z0, Z1)
    return Z0, Z1, derivs


def _log_abs(values: np.ndarray) -> np.ndarray:
    """log|.| with exact zeros (and denormal underflow) mapped to -inf."""
    mod = np.abs(values)
    out = np.full(mod.shape, -np.inf)
    ok = mod > _CRITICAL_FLOOR
    np.log(mod, out=out, where=ok)
    return out


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------


def fs_derivative_complex(m: RationalMap, x) -> complex:
    """FS-normalized complex derivative of f at x (0 at critical points)."""
    x = as_point(x)
    _, _, deriv = _fs_step(m, np.asarray(x.z0), np.asarray(x.z1))
    return complex(deriv)


def fs_derivative_log(m: RationalMap, x) -> float:
    """log of the FS operator norm of df at x; -inf flags a critical point."""
    d = fs_derivative_complex(m, x)
    if abs(d) <= _CRITICAL_FLOOR:
        return -math.inf
    return math.log(abs(d))


@dataclass
class OrbitRecord:
    """Forward orbit with per-step FS derivative data.

    ``points[k]`` is f^k(x) for k = 0..n; ``derivs[k]`` is the complex
    FS-normalized derivative at points[k], so log-norms sum to
    log ||d f^n|| by the chain rule.  Critical steps show up as exact
    zeros in ``derivs`` and -inf in ``log_fs_derivatives``.
    """

    points: list
    derivs: np.ndarray

    @property
    def log_fs_derivatives(self) -> np.ndarray:
        return _log_abs(self.derivs)

    @property
    def hit_critical(self) -> bool:
        return bool(np.any(np.abs(self.derivs) <= _CRITICAL_FLOOR))


def iterate(m: RationalMap, x, n: int) -> OrbitRecord:
    """Compute the forward orbit x, f(x), ..., f^n(x)."""
    if n < 0:
        raise ValueError("orbit length must be >= 0")
    x = as_point(x)
    points = [x]
    derivs = np.empty(n, dtype=complex)
    z0, z1 = np.asarray(x.z0), np.asarray(x.z1)
    for k in range(n):
        z0n, z1n, dv = _fs_step(m, z0, z1)
        derivs[k] = complex(dv)
        z0, z1 = z0n, z1n
        points.append(ProjPoint(complex(z0), complex(z1)))
    return OrbitRecord(points, derivs)


def map_hash(m: RationalMap) -> str:
    """Short stable identifier of the coefficient pair, for output headers."""
    import hashlib

    text = ",".join(repr(c) for c in np.concatenate([m.p, [2j], m.q]))
    return hashlib.sha256(text.encode()).hexdigest()[:12]
