"""Linearization diagnostics separating torus-quotient maps from generic ones.

Three per-point statistics drive everything:

* the derivative ratio r_n = (sqrt d)^n / |d f^n|, whose boundedness
  characterizes maps with the minimal exponent;
* membership in B_n(rho): the n-th iterate, rescaled by the inverse
  derivative, is injective from the rho-disk into a fixed R0-disk;
* membership in V_n(nu): the n-step Jacobian is pinched within nu^2 of
  its entropy-predicted size d^n.

All charts are Fubini-Study normalized at their base point, so disk
radii mean the same thing everywhere on the sphere; every test uses
moduli only and is blind to the residual rotation freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .maps import ProjPoint, RationalMap, _eval_pair, _log_abs, _orbit_derivatives, as_point
from .sampler import EmpiricalMeasure

__all__ = [
    "RatioSeries",
    "DiagnosticSeries",
    "derivative_ratio_series",
    "ratio_slope",
    "bn_membership",
    "vn_membership",
    "diagnostic_sweep",
    "wilson_interval",
]

_BOUNDARY_SAMPLES = 64
_INTERIOR_RADII = (0.25, 0.5, 0.75)
_INTERIOR_SAMPLES = 16
_DISTINCT_MARGIN = 1e-9
_MAX_RATIO_STEPS = 60


@dataclass
class RatioSeries:
    """Per-point log r_n for n = 0..N (column n), with validity flags."""

    log_ratios: np.ndarray
    valid: np.ndarray
    degree: int
    seed: int | None = None

    @property
    def n_max(self) -> int:
        return self.log_ratios.shape[1] - 1

    def mean_log(self) -> np.ndarray:
        """Cloud mean of log r_n per n, over points that never hit Crit."""
        return self.log_ratios[self.valid].mean(axis=0)

    def fraction_max_leq(self, tau: float) -> float:
        """Fraction of points with max_n r_n <= tau."""
        mx = self.log_ratios[self.valid].max(axis=1)
        return float((mx <= math.log(tau)).mean())


def derivative_ratio_series(m: RationalMap, cloud: EmpiricalMeasure,
                            n_max: int) -> RatioSeries:
    """log r_n = n log(sqrt d) - log |d f^n| for every cloud point.

    Points whose orbit grazes a critical point within n_max steps are
    flagged invalid and excluded from the summaries.

    Forward iteration amplifies double-precision rounding by a factor
    ~d per step, so pointwise orbit accuracy is exhausted after roughly
    log(1/eps)/log(d) steps (~52 for d = 2, ~26 for d = 4).  When the
    measure fills the sphere the Birkhoff sums remain statistically
    faithful beyond that horizon (the computed pseudo-orbit shadows
    another typical orbit), but when the support is a repelling circle
    or interval and d >= 3, late-n entries reflect the basin dynamics
    off the support instead; their signature is a blown-up slope
    standard error.
    """
    if not 0 <= n_max <= _MAX_RATIO_STEPS:
        raise ValueError(
            f"ratio series supports 0 <= n <= {_MAX_RATIO_STEPS}, got {n_max}")
    half_log_d = 0.5 * math.log(m.degree)
    npts = len(cloud)
    out = np.zeros((npts, n_max + 1))
    z0, z1 = cloud.z0, cloud.z1
    acc = np.zeros(npts)
    valid = np.ones(npts, dtype=bool)
    from .maps import _fs_step

    for n in range(1, n_max + 1):
        z0, z1, deriv = _fs_step(m, z0, z1)
        step = _log_abs(deriv)
        valid &= np.isfinite(step)
        acc = acc + np.where(np.isfinite(step), step, 0.0)
        out[:, n] = n * half_log_d - acc
    return RatioSeries(out, valid, m.degree, cloud.seed)


def ratio_slope(series: RatioSeries) -> tuple:
    """Least-squares slope of mean log r_n against n, with fit stderr."""
    y = series.mean_log()
    x = np.arange(len(y), dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = len(x) - 2
    sxx = ((x - x.mean()) ** 2).sum()
    stderr = math.sqrt((resid ** 2).sum() / dof / sxx) if dof > 0 else 0.0
    return float(slope), stderr


def _disk_samples() -> np.ndarray:
    """Unit-disk probe points: 64 boundary first, then interior rings."""
    ang_b = 2.0 * np.pi * np.arange(_BOUNDARY_SAMPLES) / _BOUNDARY_SAMPLES
    pts = [np.exp(1j * ang_b)]
    ang_i = 2.0 * np.pi * (np.arange(_INTERIOR_SAMPLES) + 0.5) / _INTERIOR_SAMPLES
    for rad in _INTERIOR_RADII:
        pts.append(rad * np.exp(1j * ang_i))
    return np.concatenate(pts)


_PROBES = _disk_samples()


def _chart_coord_arrays(Z0, Z1):
    """Preferred-chart coordinate and chart flag for point arrays."""
    flip = np.abs(Z0) > np.abs(Z1)
    coord = np.where(flip, Z1, Z0) / np.where(flip, Z0, Z1)
    return coord, flip


def _bn_membership_batch(m: RationalMap, Z0: np.ndarray, Z1: np.ndarray,
                         n: int, rho: float, r0: float) -> np.ndarray:
    """Vectorized B_n(rho) membership over a batch of base points."""
    npts = len(Z0)
    with np.errstate(all="ignore"):
        y0, y1, derivs = _orbit_derivatives(m, Z0, Z1, n)
        D = derivs.prod(axis=0) if n > 0 else np.ones(npts, dtype=complex)
        ok = np.isfinite(D) & (np.abs(D) > 0)

        zx, _ = _chart_coord_arrays(Z0, Z1)
        zy, yflip = _chart_coord_arrays(y0, y1)
        # Input disk: FS chart at x, radius rho, rescaled by 1/D.
        scale = rho * (1.0 + np.abs(zx) ** 2) / np.where(ok, D, 1.0)
        w = zx[:, None] + scale[:, None] * _PROBES[None, :]

        # Push the whole probe grid forward n steps.
        xflip = (np.abs(Z0) > np.abs(Z1))[:, None]
        p0 = np.where(xflip, np.ones_like(w), w).ravel()
        p1 = np.where(xflip, w, np.ones_like(w)).ravel()
        for _ in range(n):
            p0, p1 = _eval_pair(m, p0, p1)
        p0 = p0.reshape(npts, len(_PROBES))
        p1 = p1.reshape(npts, len(_PROBES))

        # Read images in the FS chart at y = f^n(x).
        num = np.where(yflip[:, None], p1, p0)
        den = np.where(yflip[:, None], p0, p1)
        h = (num / den - zy[:, None]) / (1.0 + np.abs(zy) ** 2)[:, None]

        ok &= np.isfinite(h).all(axis=1) & (np.abs(h) <= r0).all(axis=1)

        hb = h[:, :_BOUNDARY_SAMPLES]
        diffs = np.abs(hb[:, :, None] - hb[:, None, :])
        iu = np.triu_indices(_BOUNDARY_SAMPLES, k=1)
        ok &= diffs[:, iu[0], iu[1]].min(axis=1) >= _DISTINCT_MARGIN

        # Winding of the boundary image about h(0) = 0 certifies that
        # the disk image covers 0 exactly once (holomorphic degree).
        ratio = np.roll(hb, -1, axis=1) / np.where(np.abs(hb) > 0, hb, 1.0)
        total = np.angle(ratio).sum(axis=1)
        ok &= np.abs(total - 2.0 * np.pi) < 0.5
    return ok


def bn_membership(m: RationalMap, x, n: int, rho: float, r0: float = 0.5) -> bool:
    """Is x in B_n(rho): rescaled n-th iterate injective into the r0-disk?

    The rescaled map h(u) = chart_y(f^n(chart_x(u/df^n))) is probed on
    64 boundary points and three interior rings of the rho-disk; range
    containment, pairwise-distinct boundary values, and boundary winding
    number 1 about the center together certify membership.  Critical
    base points are never members.
    """
    if rho <= 0 or rho > 1:
        raise ValueError("rho must lie in (0, 1]")
    if n < 0:
        raise ValueError("n must be >= 0")
    x = as_point(x)
    return bool(_bn_membership_batch(m, np.array([x.z0]), np.array([x.z1]),
                                     n, rho, r0)[0])


def vn_membership(m: RationalMap, x, n: int, nu: float) -> bool:
    """Is x in V_n(nu): nu^2 d^n <= |Jac f^n|^2 <= d^n / nu^2?

    In one complex dimension |Jac| = |d f^n|^2, so membership reads
    |2 log|df^n| - n log d| <= 2 |log nu|.  Critical hits are non-members.
    """
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    if n < 0:
        raise ValueError("n must be >= 0")
    x = as_point(x)
    _, _, derivs = _orbit_derivatives(m, np.array([x.z0]), np.array([x.z1]), n)
    logs = _log_abs(derivs)
    if not np.isfinite(logs).all():
        return False
    ln = float(logs.sum())
    return abs(2.0 * ln - n * math.log(m.degree)) <= -2.0 * math.log(nu)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple:
    """Wilson score interval: (center, half_width) for k successes of n."""
    if n == 0:
        return 0.5, 0.5
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
    return center, half


@dataclass
class DiagnosticSeries:
    """Fractions of the cloud in one diagnostic family across n."""

    family: str
    params: dict
    n_values: list
    fractions: list
    ci_half_widths: list
    counts: list
    sample_size: int
    seed: int | None = None

    def rows(self):
        return list(zip(self.n_values, self.fractions, self.ci_half_widths))


def diagnostic_sweep(m: RationalMap, cloud: EmpiricalMeasure, n_values,
                     rho_grid=(0.4, 0.2, 0.1, 0.05), tau_grid=(1.0, 2.0, 5.0, 10.0),
                     nu_grid=(0.5, 0.2, 0.1), r0: float = 0.5,
                     bn_subsample: int = 200,
                     recurrence_box: float = 1.0) -> dict:
    """Estimate the B_n, D_n, V_n masses over a grid of parameters.

    Returns {"bn": [...], "dn": [...], "vn": [...], "recurrence": [...]}
    of DiagnosticSeries.  B_n (and the D_n intersection) run on a
    deterministic subsample because each membership test costs a full
    probe-grid orbit; V_n is read off the ratio series on the whole
    cloud.  The recurrence variant conditions B_n membership on f^n(x)
    landing back in the centered chart box of the given half-width.
    """
    n_values = sorted(set(int(n) for n in n_values))
    if any(n < 0 for n in n_values):
        raise ValueError("n values must be >= 0")
    out = {"bn": [], "dn": [], "vn": [], "recurrence": []}
    if not n_values:
        return out
    n_top = max(n_values)

    series = derivative_ratio_series(m, cloud, n_top)
    log_nu_ok = series.log_ratios[series.valid]
    n_valid = int(series.valid.sum())
    for nu in nu_grid:
        fracs, halves, counts = [], [], []
        for n in n_values:
            member = np.abs(log_nu_ok[:, n]) <= -math.log(nu)
            k = int(member.sum())
            _, half = wilson_interval(k, n_valid)
            fracs.append(k / n_valid if n_valid else 0.0)
            halves.append(half)
            counts.append(n_valid)
        out["vn"].append(DiagnosticSeries(
            "vn", {"nu": nu}, n_values, fracs, halves, counts,
            n_valid, cloud.seed))

    sub = cloud.subsample(bn_subsample)
    nsub = len(sub)
    sub_series = derivative_ratio_series(m, sub, n_top)

    # Forward chart coordinates of the subsample, for the recurrence box.
    box_hits = {}
    z0, z1 = sub.z0.copy(), sub.z1.copy()
    coord, flip = _chart_coord_arrays(z0, z1)
    for n in range(n_top + 1):
        if n in n_values:
            in_box = (~flip) & (np.abs(coord.real) <= recurrence_box) \
                & (np.abs(coord.imag) <= recurrence_box)
            box_hits[n] = in_box
        if n < n_top:
            z0, z1 = _eval_pair(m, z0, z1)
            coord, flip = _chart_coord_arrays(z0, z1)

    bn_members = {}
    for n in n_values:
        for rho in rho_grid:
            bn_members[(n, rho)] = _bn_membership_batch(
                m, sub.z0, sub.z1, n, rho, r0)

    for rho in rho_grid:
        fracs, halves, counts = [], [], []
        rfracs, rhalves, rcounts = [], [], []
        for n in n_values:
            member = bn_members[(n, rho)]
            k = int(member.sum())
            _, half = wilson_interval(k, nsub)
            fracs.append(k / nsub)
            halves.append(half)
            counts.append(nsub)
            hits = box_hits[n]
            nh = int(hits.sum())
            kh = int((member & hits).sum())
            _, rh = wilson_interval(kh, nh)
            rfracs.append(kh / nh if nh else 0.0)
            rhalves.append(rh)
            rcounts.append(nh)
        out["bn"].append(DiagnosticSeries(
            "bn", {"rho": rho, "r0": r0}, n_values, fracs, halves, counts,
            nsub, cloud.seed))
        out["recurrence"].append(DiagnosticSeries(
            "recurrence", {"rho": rho, "r0": r0, "box": recurrence_box},
            n_values, rfracs, rhalves, rcounts, nsub, cloud.seed))

    for rho in rho_grid:
        for tau in tau_grid:
            fracs, halves, counts = [], [], []
            for n in n_values:
                member = bn_members[(n, rho)] & sub_series.valid \
                    & (sub_series.log_ratios[:, n] <= math.log(tau))
                k = int(member.sum())
                _, half = wilson_interval(k, nsub)
                fracs.append(k / nsub)
                halves.append(half)
                counts.append(nsub)
            out["dn"].append(DiagnosticSeries(
                "dn", {"rho": rho, "tau": tau, "r0": r0}, n_values,
                fracs, halves, counts, nsub, cloud.seed))
    return out
