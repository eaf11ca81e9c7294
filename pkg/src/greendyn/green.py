"""Homogeneous Green function and the measure it carries.

G(Z) = lim d^-n log ||F^n(Z)|| for the homogeneous lift F of the map,
computed with per-step max-modulus renormalization: the discarded scale
at step j contributes d^-(j+1) log(scale) to the accumulator, which
makes the partial sum exactly d^-n log ||F^n(Z)||.  The tail after step
n is bounded by C d^-n/(d-1) with C the largest per-step |log scale|
seen so far, giving a computable stopping rule.

The maximal-entropy measure is recovered in the affine chart as
(1/2pi) * Laplacian of z -> G(z, 1), discretized on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence
from .maps import ProjPoint, RationalMap, _eval_core

__all__ = [
    "GreenValue",
    "DensityGrid",
    "green_function",
    "green_values",
    "green_increments",
    "green_density_grid",
]


@dataclass
class GreenValue:
    value: float
    n: int
    error_bound: float


def green_values(m: RationalMap, Z0, Z1, tol: float = 1e-10, max_iter: int = 200):
    """Vectorized Green function on raw homogeneous coordinate arrays.

    Returns (values, n_used, error_bounds), all shaped like the input.
    Iteration stops once the geometric tail bound drops below ``tol``;
    the bound is uniform over the whole sphere (it depends only on the
    map), so results do not depend on how the input was batched.
    """
    Z0 = np.asarray(Z0, dtype=complex)
    Z1 = np.asarray(Z1, dtype=complex)
    s0 = np.maximum(np.abs(Z0), np.abs(Z1))
    if np.any(s0 == 0.0):
        raise ValueError("(0, 0) is not a point of P^1")
    g = np.log(s0)
    z0, z1 = Z0 / s0, Z1 / s0

    d = float(m.degree)
    acc = np.zeros_like(g)
    nused = np.zeros(g.shape, dtype=int)
    bound = np.full_like(g, np.inf)
    done = np.zeros(g.shape, dtype=bool)

    # A priori bound on |log s| valid for every max-norm-1 representative:
    # s <= the larger coefficient 1-norm (triangle inequality), and
    # s >= |Res| / (2 d K) where K = max(||p||_2, ||q||_2)^(2d-1) is the
    # Hadamard bound on the Sylvester cofactors in u P + v Q = Res z^(2d-1).
    # An observed running maximum is NOT a valid constant here: a prefix of
    # s = 1 steps (e.g. q = z1^d while the orbit sits inside the unit disk)
    # would terminate the sum while later increments are still nonzero.
    amax = max(float(np.abs(m.p).sum()), float(np.abs(m.q).sum()))
    k2 = max(float(np.linalg.norm(m.p)), float(np.linalg.norm(m.q)))
    smin = m.resultant_mag / (2.0 * m.degree * k2 ** (2 * m.degree - 1))
    c_sphere = max(math.log(amax), -math.log(smin), 0.0)

    scale = 1.0 / d
    for j in range(max_iter):
        a, b, _, _ = _eval_core(m, z0, z1)
        s = np.maximum(np.abs(a), np.abs(b))
        scale *= 1.0 / d if j > 0 else 1.0  # scale = d^-(j+1)
        inc = scale * np.log(s)
        acc = np.where(done, acc, acc + inc)
        tail = c_sphere * scale / (d - 1.0)  # sum of C d^-(k+1), k > j
        newly = ~done & (tail <= tol)
        bound = np.where(newly, tail, bound)
        nused = np.where(done, nused, j + 1)
        done |= newly
        if done.all():
            break
        z0 = np.where(done, z0, a / s)
        z1 = np.where(done, z1, b / s)
    if not done.all():
        worst = c_sphere * scale / (d - 1.0)
        raise NonConvergence(
            f"Green tail bound {worst:.3e} above tol {tol:.3e} after {max_iter} steps"
        )
    return g + acc, nused, bound


def green_function(m: RationalMap, z0, z1=None, tol: float = 1e-10,
                   max_iter: int = 200) -> GreenValue:
    """Green function at one point.

    Accepts either raw homogeneous coordinates (z0, z1) - the value then
    refers to that specific representative, G(lambda Z) = G(Z) + log|lambda| -
    or a ProjPoint, which evaluates at its normalized representative.
    """
    if isinstance(z0, ProjPoint):
        pt0, pt1 = z0.z0, z0.z1
    else:
        pt0 = complex(z0)
        pt1 = 1.0 + 0.0j if z1 is None else complex(z1)
    v, n, e = green_values(m, pt0, pt1, tol=tol, max_iter=max_iter)
    return GreenValue(float(v), int(n), float(e))


def green_increments(m: RationalMap, z0, z1, n: int) -> np.ndarray:
    """The n per-step accumulator increments d^-(j+1) log s_j at a point.

    Their log-moduli decay like -log d per step; useful for convergence
    rate checks.
    """
    s0 = max(abs(complex(z0)), abs(complex(z1)))
    if s0 == 0.0:
        raise ValueError("(0, 0) is not a point of P^1")
    a = np.asarray(complex(z0) / s0)
    b = np.asarray(complex(z1) / s0)
    d = float(m.degree)
    out = np.empty(n)
    w = 1.0
    for j in range(n):
        a, b, _, _ = _eval_core(m, a, b)
        s = np.maximum(np.abs(a), np.abs(b))
        w /= d
        out[j] = w * math.log(float(s))
        a, b = a / s, b / s
    return out


@dataclass
class DensityGrid:
    """Cell-centered density of the maximal-entropy measure in a window."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int
    values: np.ndarray  # (ny, nx) cell masses, clipped at 0
    mass: float
    clipped_fraction: float

    @property
    def cell_size(self):
        return ((self.xmax - self.xmin) / self.nx,
                (self.ymax - self.ymin) / self.ny)


def green_density_grid(m: RationalMap, window, resolution,
                       tol: float = 1e-10) -> DensityGrid:
    """Grid of measure masses per cell via the discrete Laplacian of G.

    ``window`` is (xmin, xmax, ymin, ymax) in the affine chart (or a
    (lo, hi) pair for a square), ``resolution`` the cell count per axis.
    The 5-point stencil uses honestly evaluated Green values on a
    one-node halo ring outside the window, so the summed cell masses
    approximate the measure of the window itself.  Negative cells
    (discretization noise near the support) are clipped to zero and
    reported as a mass fraction.
    """
    w = tuple(float(v) for v in (window if len(window) == 4 else
                                 (window[0], window[1], window[0], window[1])))
    xmin, xmax, ymin, ymax = w
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("window must have positive extent")
    if isinstance(resolution, int):
        nx = ny = resolution
    else:
        nx, ny = (int(r) for r in resolution)
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 cells per axis")

    hx = (xmax - xmin) / nx
    hy = (ymax - ymin) / ny
    xs = xmin + (np.arange(-1, nx + 1) + 0.5) * hx
    ys = ymin + (np.arange(-1, ny + 1) + 0.5) * hy
    Z = xs[None, :] + 1j * ys[:, None]
    G, _, _ = green_values(m, Z, np.ones_like(Z), tol=tol)

    lap = ((G[1:-1, 2:] + G[1:-1, :-2] - 2.0 * G[1:-1, 1:-1]) / hx ** 2
           + (G[2:, 1:-1] + G[:-2, 1:-1] - 2.0 * G[1:-1, 1:-1]) / hy ** 2)
    cell = lap * (hx * hy) / (2.0 * math.pi)
    pos = float(cell[cell > 0].sum())
    neg = float(-cell[cell < 0].sum())
    values = np.clip(cell, 0.0, None)
    mass = float(values.sum())
    clipped = neg / pos if pos > 0 else 0.0
    return DensityGrid(xmin, xmax, ymin, ymax, nx, ny, values, mass, clipped)
