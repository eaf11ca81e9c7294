"""Simultaneous polynomial root finding (Aberth-Ehrlich iteration).

Used for preimage equations P(z) - w Q(z) = 0 and for critical points
(Wronskian roots).  Everything here is deterministic: fixed initial
configurations, per-element convergence freezing (an element that stops
moving never moves again), and no data-dependent iteration reordering,
so batched solves are bit-identical to one-at-a-time solves.
"""

from __future__ import annotations

import numpy as np

__all__ = ["aberth_roots", "solve_poly_roots", "polyval_batch"]

_FREEZE_TOL = 1e-14
_DIFF_FLOOR = 1e-290


def polyval_batch(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Horner evaluation; c is (B, m+1) ascending, z is (B, k)."""
    acc = np.broadcast_to(c[:, -1:], z.shape).copy()
    for j in range(c.shape[1] - 2, -1, -1):
        acc = acc * z + c[:, j : j + 1]
    return acc


def _derivative_coeffs(c: np.ndarray) -> np.ndarray:
    k = np.arange(1, c.shape[1])
    return c[:, 1:] * k


def aberth_roots(coeffs: np.ndarray, max_iter: int = 150) -> np.ndarray:
    """All m roots of each full-degree polynomial in a (B, m+1) batch.

    The caller is responsible for leading coefficients of healthy size
    (flip the coefficient order first when the polynomial is closer to
    degenerate at infinity than at zero).
    """
    c = np.asarray(coeffs, dtype=complex)
    batch, m1 = c.shape
    m = m1 - 1
    if m < 1:
        return np.empty((batch, 0), dtype=complex)
    if m == 1:
        return (-c[:, :1] / c[:, 1:]).astype(complex)
    dc = _derivative_coeffs(c)

    # Cauchy-bound radius, fixed angular offset so real-coefficient
    # symmetry cannot pin the iteration.
    radius = 1.0 + np.max(np.abs(c[:, :-1]), axis=1) / np.abs(c[:, -1])
    angles = 2.0 * np.pi * (np.arange(m) + 0.25) / m + 0.35
    z = radius[:, None] * np.exp(1j * angles)[None, :]

    done = np.zeros_like(z, dtype=bool)
    for _ in range(max_iter):
        pv = polyval_batch(c, z)
        dv = polyval_batch(dc, z)
        # Newton ratio; a vanishing derivative gets a deterministic kick.
        bad = np.abs(dv) < _DIFF_FLOOR
        newton = pv / np.where(bad, 1.0, dv)
        newton = np.where(bad, 0.1 * (1.0 + np.abs(z)), newton)

        diff = z[:, :, None] - z[:, None, :]
        idx = np.arange(m)
        diff[:, idx, idx] = 1.0
        small = np.abs(diff) < _DIFF_FLOOR
        inv = 1.0 / np.where(small, 1.0, diff)
        inv[:, idx, idx] = 0.0
        s = inv.sum(axis=2)

        corr = newton / (1.0 - newton * s)
        corr = np.where(np.isfinite(corr), corr, newton)
        znew = np.where(done, z, z - corr)
        done |= np.abs(corr) <= _FREEZE_TOL * (1.0 + np.abs(z))
        z = znew
        if done.all():
            break

    # One vector Newton refinement pass on the original polynomials.
    pv = polyval_batch(c, z)
    dv = polyval_batch(dc, z)
    ok = np.abs(dv) > _DIFF_FLOOR
    z = np.where(ok, z - pv / np.where(ok, dv, 1.0), z)
    return z


def solve_poly_roots(coeffs, zero_tol: float = 1e-13):
    """Roots of one polynomial of defective degree, robustly.

    Returns (finite_roots, n_infinite): exact zeros from trailing
    near-zero coefficients, Aberth roots of the deflated middle part
    (solved in the better-conditioned coefficient order), and the count
    of roots at infinity from leading near-zero coefficients.
    """
    c = np.asarray(coeffs, dtype=complex)
    scale = np.abs(c).max()
    if scale == 0.0:
        raise ValueError("zero polynomial has no root set")
    cn = c / scale
    mags = np.abs(cn)

    hi = len(cn) - 1
    while hi > 0 and mags[hi] <= zero_tol:
        hi -= 1
    n_inf = len(cn) - 1 - hi
    lo = 0
    while lo < hi and mags[lo] <= zero_tol:
        lo += 1
    zeros = np.zeros(lo, dtype=complex)
    mid = cn[lo : hi + 1]

    if len(mid) <= 1:
        return zeros, n_inf
    if abs(mid[-1]) >= abs(mid[0]):
        roots = aberth_roots(mid[None, :])[0]
    else:
        roots = 1.0 / aberth_roots(mid[None, ::-1])[0]
        # Refine in the original orientation as well.
        dmid = np.arange(1, len(mid)) * mid[1:]
        pv = polyval_batch(mid[None, :], roots[None, :])[0]
        dv = polyval_batch(dmid[None, :], roots[None, :])[0]
        ok = np.abs(dv) > _DIFF_FLOOR
        roots = np.where(ok, roots - pv / np.where(ok, dv, 1.0), roots)
    return np.concatenate([zeros, roots]), n_inf
