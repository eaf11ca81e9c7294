"""Ergodic statistics over sampled clouds.

Lyapunov exponents are means of the log FS-derivative against the
sampled measure.  Because each chain's recorded points are consecutive
orbit points, the chain rule makes per-chain averages telescope, which
kills most of the variance; error bars therefore come from the spread
across independent chains, never from a naive iid formula.

The correlation dimension follows Grassberger-Procaccia: count pairs
closer than r in the chordal metric, fit log C(r) against log r over
the central two decades of the pair-distance distribution.  Counting is
done in integer histograms on a fixed logarithmic grid so results are
exactly reproducible and independent of block scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRange, InsufficientSamples
from .maps import RationalMap, _fs_step, _log_abs
from .sampler import EmpiricalMeasure

__all__ = [
    "EstimateReport",
    "BoundCheck",
    "lyapunov",
    "jacobian_exponent",
    "correlation_dimension",
    "dimension_bound_check",
]

_DROP_LIMIT = 1e-3

# Fixed histogram grid for pair distances: 200 edges per decade over
# [1e-12, 1]; the chordal metric never exceeds 1.
_EDGE_EXP_LO = -12.0
_EDGES_PER_DECADE = 200
_EDGES = 10.0 ** (np.arange(0, int(-_EDGE_EXP_LO) * _EDGES_PER_DECADE + 1)
                  / _EDGES_PER_DECADE + _EDGE_EXP_LO)


@dataclass
class EstimateReport:
    """A scalar estimate with an error bar and its run parameters."""

    quantity: str
    value: float
    stderr: float
    n_samples: int
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.stderr


def _finite_mean(cloud: EmpiricalMeasure, values: np.ndarray, quantity: str,
                 drop_limit: float, params: dict) -> EstimateReport:
    good = np.isfinite(values)
    n_dropped = int((~good).sum())
    if n_dropped > drop_limit * len(values):
        raise InsufficientSamples(
            f"{quantity}: {n_dropped}/{len(values)} samples hit critical points "
            f"(limit {drop_limit:.1%}); the cloud looks degenerate")
    if n_dropped:
        # Replace the few critical hits by the mean of the rest so chain
        # bookkeeping stays aligned; they are too rare to move the estimate.
        values = values.copy()
        values[~good] = values[good].mean()
    mean, stderr = cloud.chain_mean_stderr(values)
    params = dict(params, n_dropped=n_dropped)
    return EstimateReport(quantity, mean, stderr, len(values) - n_dropped,
                          params, cloud.seed)


def lyapunov(m: RationalMap, cloud: EmpiricalMeasure,
             drop_limit: float = _DROP_LIMIT) -> EstimateReport:
    """Lyapunov exponent of the sampled measure.

    Mean of log ||df||_FS over the cloud.  Exact critical hits are
    dropped; more than ``drop_limit`` of them aborts the estimate.  The
    report flags a violation of the log(sqrt(d)) lower bound, which no
    genuine degree-d cloud should ever trigger.
    """
    if len(cloud) < 1000:
        raise InsufficientSamples(
            f"lyapunov needs a cloud of >= 1000 points, got {len(cloud)}")
    _, _, deriv = _fs_step(m, cloud.z0, cloud.z1)
    rep = _finite_mean(cloud, _log_abs(deriv), "lyapunov", drop_limit, {})
    lower = 0.5 * math.log(m.degree)
    rep.params["lower_bound"] = lower
    rep.params["lower_bound_violation"] = bool(rep.value < lower - 3 * rep.stderr)
    return rep


def jacobian_exponent(m: RationalMap, cloud: EmpiricalMeasure, n: int = 10,
                      drop_limit: float = _DROP_LIMIT) -> EstimateReport:
    """Finite-time Jacobian exponent: (1/n) log |Jac f^n| averaged over the cloud.

    The Jacobian of the underlying real surface map is |df|^2, so this
    estimates 2*lyapunov; kept as an independent consistency check of
    the one-step estimator (agreement within 3 sigma after halving).
    """
    if n < 5:
        raise InsufficientSamples(
            f"finite-time Jacobian exponent needs n >= 5 steps, got {n}")
    z0 = cloud.z0.copy()
    z1 = cloud.z1.copy()
    acc = np.zeros(len(z0))
    for _ in range(n):
        z0, z1, deriv = _fs_step(m, z0, z1)
        acc += _log_abs(deriv)
    return _finite_mean(cloud, 2.0 * acc / n, "jacobian_exponent",
                        drop_limit, {"n": n})


def _pair_counts(z0: np.ndarray, z1: np.ndarray, block: int = 512) -> np.ndarray:
    """Histogram of chordal pair distances over the fixed grid.

    Returns integer counts per searchsorted slot (len(_EDGES) + 1);
    integer accumulation makes the result independent of block order.
    """
    n = len(z0)
    norm = np.hypot(np.abs(z0), np.abs(z1))
    counts = np.zeros(len(_EDGES) + 1, dtype=np.int64)
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        a0, a1, an = z0[i0:i1], z1[i0:i1], norm[i0:i1]
        for j0 in range(i0, n, block):
            j1 = min(j0 + block, n)
            b0, b1, bn = z0[j0:j1], z1[j0:j1], norm[j0:j1]
            num = np.abs(a0[:, None] * b1[None, :] - a1[:, None] * b0[None, :])
            dist = num / (an[:, None] * bn[None, :])
            if j0 == i0:
                iu = np.triu_indices(i1 - i0, k=1)
                flat = dist[iu]
            else:
                flat = dist.ravel()
            idx = np.searchsorted(_EDGES, flat, side="right")
            counts += np.bincount(idx, minlength=len(_EDGES) + 1)
    return counts


def correlation_dimension(cloud, r_decades=None, subsample: int = 10000,
                          n_r: int = 16) -> EstimateReport:
    """Grassberger-Procaccia slope of the sampled cloud.

    The fit window defaults to the central two decades of the positive
    pair-distance distribution (quantile range [max(1e-6, 20/pairs),
    0.999], then the middle two decades); pass ``r_decades = (lo, hi)``
    in raw chordal units to override it.  C(r) is read at ``n_r``
    log-spaced radii snapped to the counting grid; radii holding fewer
    than 10 pairs are discarded.  Raises DegenerateRange when fewer
    than two decades of distances are available.
    """
    seed = None
    if isinstance(cloud, EmpiricalMeasure):
        if len(cloud) < 10000:
            raise InsufficientSamples(
                f"correlation dimension needs a cloud of >= 10^4 points, "
                f"got {len(cloud)}")
        sub = cloud.subsample(subsample)
        z0, z1 = sub.z0, sub.z1
        seed = cloud.seed
    else:
        z0, z1 = (np.asarray(c, dtype=complex) for c in cloud)
        if len(z0) > subsample:
            idx = np.arange(0, len(z0), len(z0) // subsample)[:subsample]
            z0, z1 = z0[idx], z1[idx]
        if len(z0) < 100:
            raise InsufficientSamples(
                f"correlation dimension needs >= 100 raw points, got {len(z0)}")
    n = len(z0)

    counts = _pair_counts(z0, z1)
    cum = np.cumsum(counts)[: len(_EDGES)]
    n_pairs = n * (n - 1) // 2
    n_zero = int(cum[0])
    positive = n_pairs - n_zero
    params = {"n_points": n, "n_pairs": n_pairs, "n_coincident": n_zero}
    if positive == 0:
        # Every pair coincides: a single repeated point has dimension 0.
        params.update(r_lo=0.0, r_hi=0.0, radii=[], c_values=[])
        return EstimateReport("correlation_dimension", 0.0, 0.0, n, params, seed)

    if r_decades is None:
        cum_pos = cum - n_zero
        q_lo = max(1e-6, 20.0 / positive)
        k_lo = int(np.searchsorted(cum_pos, math.ceil(q_lo * positive)))
        k_hi = int(np.searchsorted(cum_pos, math.ceil(0.999 * positive)))
        k_hi = min(k_hi, len(_EDGES) - 1)
        lo, hi = _EDGES[k_lo], _EDGES[k_hi]
        span = math.log10(hi / lo)
        if span < 2.0:
            raise DegenerateRange(
                f"pair distances span only {span:.2f} decades; "
                "the cloud is too concentrated for a slope fit")
        mid = 0.5 * (math.log10(lo) + math.log10(hi))
        lg_lo, lg_hi = mid - 1.0, mid + 1.0
    else:
        lg_lo, lg_hi = math.log10(r_decades[0]), math.log10(r_decades[1])
        if lg_hi - lg_lo < 1.0:
            raise DegenerateRange("explicit fit window narrower than one decade")

    log_r = np.linspace(lg_lo, lg_hi, n_r)
    ks = np.rint((log_r - _EDGE_EXP_LO) * _EDGES_PER_DECADE).astype(int)
    ks = np.unique(np.clip(ks, 0, len(_EDGES) - 1))
    ks = ks[cum[ks] >= 10]
    if len(ks) < 8:
        raise DegenerateRange(
            f"only {len(ks)} usable radii in the fit window; need 8")

    r = _EDGES[ks]
    c = cum[ks] / n_pairs
    x = np.log(r)
    y = np.log(c)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = len(x) - 2
    sxx = ((x - x.mean()) ** 2).sum()
    stderr = math.sqrt((resid ** 2).sum() / dof / sxx) if dof > 0 else 0.0
    params.update(r_lo=float(10.0 ** lg_lo), r_hi=float(10.0 ** lg_hi),
                  radii=[float(v) for v in r],
                  c_values=[float(v) for v in c])
    return EstimateReport("correlation_dimension", float(slope), float(stderr),
                          n, params, seed)


@dataclass
class BoundCheck:
    """Entropy-over-exponent ceiling for the correlation dimension.

    The maximal measure has entropy log(degree), so its dimension never
    exceeds log(degree)/lyapunov; slack is ceiling minus estimate.
    """

    dimension: float
    ceiling: float
    slack: float
    stderr: float
    passed: bool

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def dimension_bound_check(dim: EstimateReport, lam: EstimateReport,
                          degree: int) -> BoundCheck:
    ceiling = math.log(degree) / lam.value
    # Propagate the exponent error bar through the quotient.
    ceil_err = ceiling * lam.stderr / abs(lam.value)
    combined = dim.stderr + ceil_err
    slack = ceiling - dim.value
    ok = slack >= -(3.0 * combined + 0.05)
    return BoundCheck(dim.value, ceiling, slack, combined, ok)
