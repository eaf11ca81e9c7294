"""Backward-iteration sampling of the maximal-entropy measure.

Pulling a point back through uniformly chosen inverse branches (with
multiplicity) equidistributes toward the measure satisfying f*mu = d mu;
discarding a burn-in prefix leaves a cloud of mu-distributed samples.

Preimages of w = (w0 : w1) are the d projective roots of the binary
form  w1 * P^(z0, z1) - w0 * Q^(z0, z1).  The affine version is solved
by the simultaneous Aberth iteration; rows whose leading AND trailing
coefficients both (nearly) vanish - targets close to the common image
of 0 and infinity - take a scalar path with exact deflation instead.

Chains own independent counter-derived RNG streams keyed by
(seed, chain index), so results are reproducible and independent of
how work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, RootFindingFailure
from .maps import ProjPoint, RationalMap, _eval_pair
from .roots import aberth_roots, solve_poly_roots

__all__ = [
    "BackwardOrbit",
    "EmpiricalMeasure",
    "DiscrepancyReport",
    "TestFunction",
    "BUILTIN_TEST_FUNCTIONS",
    "preimages",
    "backward_orbit",
    "backward_sample",
    "pullback_balance_test",
    "pushforward_test",
]

_RESIDUAL_TOL = 1e-9
_DEGENERATE_ENDS = 1e-6
_PROBATION_STEPS = 5
_MULTIPLICITY_TOL = 1e-8


def _form_coeffs(m: RationalMap, w0, w1):
    """Coefficients of the preimage form w1*P - w0*Q, max-normalized; (B, d+1)."""
    w0 = np.atleast_1d(np.asarray(w0, dtype=complex))
    w1 = np.atleast_1d(np.asarray(w1, dtype=complex))
    c = np.multiply.outer(w1, m.p) - np.multiply.outer(w0, m.q)
    scale = np.abs(c).max(axis=-1, keepdims=True)
    return c / scale


def _form_residuals(c: np.ndarray, y0: np.ndarray, y1: np.ndarray) -> np.ndarray:
    """|form(y0, y1)| on normalized pairs, per root; c is (B, d+1)."""
    mask = np.abs(y0) <= np.abs(y1)
    t = np.where(mask, y0, y1) / np.where(mask, y1, y0)
    crev = c[:, ::-1]
    acc = np.where(mask, c[:, -1:], crev[:, -1:]) * np.ones_like(t)
    for j in range(c.shape[1] - 2, -1, -1):
        acc = acc * t + np.where(mask, c[:, j : j + 1], crev[:, j : j + 1])
    return np.abs(acc)


def _assemble_scalar(c: np.ndarray, d: int):
    """Robust single-target solve; returns (d, 2) point pairs."""
    finite, n_inf = solve_poly_roots(c)
    out = np.empty((d, 2), dtype=complex)
    k = 0
    for z in finite:
        s = max(abs(z), 1.0)
        out[k] = (z / s, 1.0 / s)
        k += 1
    for _ in range(n_inf):
        out[k] = (1.0, 0.0)
        k += 1
    if k != d:
        raise RootFindingFailure(f"expected {d} preimages, assembled {k}")
    return out


def preimages(m: RationalMap, w: ProjPoint) -> list[ProjPoint]:
    """All d preimages of w, with multiplicity.

    Roots closer than ~1e-8 are genuine multiple preimages (targets at
    or near critical values) and are returned as-is.  Every returned
    point satisfies the homogeneous preimage equation to 1e-9 relative;
    violations raise RootFindingFailure with the residuals attached.
    """
    c = _form_coeffs(m, w.z0, w.z1)[0]
    pairs = _assemble_scalar(c, m.degree)
    res = _form_residuals(c[None, :], pairs[None, :, 0], pairs[None, :, 1])[0]
    bad = res > _RESIDUAL_TOL
    if np.any(bad):
        raise RootFindingFailure(
            f"preimage residuals up to {res.max():.3e} exceed {_RESIDUAL_TOL:.0e}",
            residuals=res,
        )
    return [ProjPoint(p[0], p[1]) for p in pairs]


def _preimages_batch(m: RationalMap, W0: np.ndarray, W1: np.ndarray):
    """Preimage pairs for a batch of targets; returns (B, d) y0 and y1.

    Fast path: rows whose form keeps a healthy coefficient at one end
    are solved full-degree by Aberth (flipped to the better end).  Rows
    degenerate at both ends, or failing the residual check, fall back to
    the scalar path.  Row results never depend on other rows.
    """
    d = m.degree
    c = _form_coeffs(m, W0, W1)
    batch = c.shape[0]
    y0 = np.empty((batch, d), dtype=complex)
    y1 = np.empty((batch, d), dtype=complex)

    lead = np.abs(c[:, -1])
    trail = np.abs(c[:, 0])
    generic = np.maximum(lead, trail) >= _DEGENERATE_ENDS
    flip = generic & (lead < trail)

    if np.any(generic):
        cg = np.where(flip[generic, None], c[generic, ::-1], c[generic])
        roots = aberth_roots(cg)
        gflip = flip[generic]
        # Unflipped chart: root z -> (z, 1); flipped: root u = 1/z -> (1, u).
        y0[generic] = np.where(gflip[:, None], 1.0, roots)
        y1[generic] = np.where(gflip[:, None], roots, 1.0)

    scalar_rows = np.nonzero(~generic)[0].tolist()
    if np.any(generic):
        s = np.maximum(np.abs(y0[generic]), np.abs(y1[generic]))
        y0[generic] /= s
        y1[generic] /= s
        res = _form_residuals(c[generic], y0[generic], y1[generic])
        bad = np.nonzero(res.max(axis=1) > _RESIDUAL_TOL)[0]
        gidx = np.nonzero(generic)[0]
        scalar_rows.extend(gidx[bad].tolist())

    for i in sorted(scalar_rows):
        pairs = _assemble_scalar(c[i], d)
        res = _form_residuals(c[i][None, :], pairs[None, :, 0], pairs[None, :, 1])[0]
        if np.any(res > _RESIDUAL_TOL):
            raise RootFindingFailure(
                f"preimage residuals up to {res.max():.3e} exceed "
                f"{_RESIDUAL_TOL:.0e} for target row {i}",
                residuals=res,
            )
        y0[i] = pairs[:, 0]
        y1[i] = pairs[:, 1]
    return y0, y1


@dataclass
class BackwardOrbit:
    """One chain of successive preimages x_-1, x_-2, ... under the anchor."""

    anchor: ProjPoint
    points: list
    branches: np.ndarray
    seed: int

    def __len__(self):
        return len(self.points)

    @property
    def path(self) -> list:
        """Anchor followed by the backward points, oldest choice first."""
        return [self.anchor, *self.points]


def _chain_rng(seed: int, chain: int):
    return np.random.Generator(np.random.Philox(
        key=np.random.SeedSequence([seed, chain]).generate_state(2, np.uint64)))


def backward_orbit(m: RationalMap, anchor: ProjPoint, n: int, seed: int = 0) -> BackwardOrbit:
    """Walk n backward steps from a fixed anchor with seeded branch choices."""
    rng = _chain_rng(seed, 0)
    branches = rng.integers(0, m.degree, size=n)
    pts = []
    cur = anchor
    for b in branches:
        cur = preimages(m, cur)[b]
        pts.append(cur)
    return BackwardOrbit(anchor, pts, branches, seed)


@dataclass
class EmpiricalMeasure:
    """Equal-weight point cloud sampled from the maximal-entropy measure."""

    z0: np.ndarray
    z1: np.ndarray
    weights: np.ndarray
    chain_ids: np.ndarray
    chain_count: int
    burn_in: int
    seed: int

    def __len__(self):
        return len(self.z0)

    @property
    def step_ids(self) -> np.ndarray:
        return np.tile(np.arange(len(self.z0) // self.chain_count),
                       self.chain_count)

    def chart_rows(self):
        """(re, im, chart) triples: affine coords, or reciprocal past |z|=1."""
        flag = (np.abs(self.z0) > np.abs(self.z1)).astype(int)
        coord = np.where(flag == 0, self.z0 / self.z1, self.z1 / self.z0)
        return coord.real, coord.imag, flag

    def subsample(self, k: int) -> "EmpiricalMeasure":
        """Deterministic stride subsample down to at most k points."""
        n = len(self.z0)
        if k >= n:
            return self
        idx = np.arange(0, n, n // k)[:k]
        w = self.weights[idx]
        return EmpiricalMeasure(self.z0[idx], self.z1[idx], w / w.sum(),
                                self.chain_ids[idx], self.chain_count,
                                self.burn_in, self.seed)

    def chain_mean_stderr(self, values: np.ndarray):
        """(mean, stderr) of per-point values, honest about chain correlation.

        Chains are independent by construction, so the spread of the
        per-chain means estimates the error of the global mean without
        any assumption on within-chain mixing.
        """
        mean = float(values.mean())
        if self.chain_count >= 2:
            sums = np.bincount(self.chain_ids, weights=values,
                               minlength=self.chain_count)
            cnts = np.bincount(self.chain_ids, minlength=self.chain_count)
            cmeans = sums / cnts
            stderr = float(cmeans.std(ddof=1) / math.sqrt(self.chain_count))
        else:
            stderr = float(values.std(ddof=1) / math.sqrt(len(values)))
        return mean, stderr


def _draw_anchor(rng) -> np.ndarray:
    v = rng.standard_normal(4)
    pair = np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]])
    return pair / np.abs(pair).max()


def _degenerate_set(y0: np.ndarray, y1: np.ndarray) -> bool:
    """True when all returned preimages coincide (exceptional-orbit sign)."""
    num = np.abs(y0[:, None] * y1[None, :] - y1[:, None] * y0[None, :])
    den = (np.hypot(np.abs(y0), np.abs(y1))[:, None]
           * np.hypot(np.abs(y0), np.abs(y1))[None, :])
    return bool((num / den).max() < _MULTIPLICITY_TOL)


def backward_sample(m: RationalMap, count: int, chains: int = 25,
                    burn_in: int = 50, seed: int = 0) -> EmpiricalMeasure:
    """Sample chains*count points of the maximal-entropy measure.

    Each chain draws an FS-uniform random anchor, walks ``burn_in``
    discarded backward steps, then records ``count`` further steps.
    Anchors whose first 5 preimage sets all degenerate to a single point
    (totally invariant exceptional points) are re-drawn.
    """
    if count < 1 or chains < 1:
        raise ValueError("need at least one chain and one sample")
    if burn_in < 1:
        raise ValueError("burn_in must be at least 1")
    d = m.degree
    steps_total = burn_in + count
    probe = min(_PROBATION_STEPS, steps_total)
    rngs = [_chain_rng(seed, c) for c in range(chains)]

    out0 = np.empty((chains, count), dtype=complex)
    out1 = np.empty((chains, count), dtype=complex)

    # Probation: scalar-walk the first steps so a bad anchor can be
    # rejected before the batched phase.
    cur = np.empty((chains, 2), dtype=complex)
    for ci, rng in enumerate(rngs):
        for _ in range(40):
            pt = _draw_anchor(rng)
            picks = rng.integers(0, d, size=probe)
            degenerate = 0
            walked = []
            for b in picks:
                y0, y1 = _preimages_batch(m, pt[None, 0], pt[None, 1])
                if _degenerate_set(y0[0], y1[0]):
                    degenerate += 1
                pt = np.array([y0[0, b], y1[0, b]])
                walked.append(pt)
            if degenerate < probe:
                cur[ci] = pt
                for step in range(burn_in + 1, probe + 1):
                    out0[ci, step - burn_in - 1] = walked[step - 1][0]
                    out1[ci, step - burn_in - 1] = walked[step - 1][1]
                break
        else:
            raise NonConvergence(
                f"chain {ci}: no non-exceptional anchor found in 40 attempts")

    steps_after = steps_total - probe
    branches = np.stack([rng.integers(0, d, size=steps_after) for rng in rngs]) \
        if steps_after else np.empty((chains, 0), dtype=int)

    rows = np.arange(chains)
    for j in range(steps_after):
        y0, y1 = _preimages_batch(m, cur[:, 0], cur[:, 1])
        pick = branches[:, j]
        cur = np.stack([y0[rows, pick], y1[rows, pick]], axis=1)
        step = probe + 1 + j
        if step > burn_in:
            out0[:, step - burn_in - 1] = cur[:, 0]
            out1[:, step - burn_in - 1] = cur[:, 1]

    n = chains * count
    return EmpiricalMeasure(
        z0=out0.reshape(n),
        z1=out1.reshape(n),
        weights=np.full(n, 1.0 / n),
        chain_ids=np.repeat(np.arange(chains), count),
        chain_count=chains,
        burn_in=burn_in,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# invariance checks
# ---------------------------------------------------------------------------


@dataclass
class TestFunction:
    """A bounded chart-free observable on P^1, fed homogeneous pairs."""

    __test__ = False  # not a pytest item, despite the name

    name: str
    fn: object

    def __call__(self, z0, z1):
        return self.fn(z0, z1)


def _norm2(z0, z1):
    return np.abs(z0) ** 2 + np.abs(z1) ** 2


def _bump(center0: complex, center1: complex, radius: float):
    n_c = math.hypot(abs(center0), abs(center1))

    def fn(z0, z1):
        num = np.abs(z0 * center1 - z1 * center0)
        dist = num / (np.sqrt(_norm2(z0, z1)) * n_c)
        t = np.clip(1.0 - (dist / radius) ** 2, 0.0, None)
        return t * t

    return fn


BUILTIN_TEST_FUNCTIONS = [
    TestFunction("inv_one_plus_sq", lambda z0, z1: np.abs(z1) ** 2 / _norm2(z0, z1)),
    TestFunction("re_over_one_plus_sq",
                 lambda z0, z1: (z0 * np.conj(z1)).real / _norm2(z0, z1)),
    TestFunction("im_over_one_plus_sq",
                 lambda z0, z1: (z0 * np.conj(z1)).imag / _norm2(z0, z1)),
    TestFunction("bump_at_origin", _bump(0.0, 1.0, 0.5)),
    TestFunction("bump_at_one", _bump(1.0, 1.0, 0.5)),
]


@dataclass
class DiscrepancyEntry:
    name: str
    lhs: float
    rhs: float
    discrepancy: float
    stderr: float

    # Resolution floor for the sigma ratio: when a test function is
    # constant on the support (e.g. 1/(1+|z|^2) on the unit circle) both
    # the discrepancy and its stderr collapse to double-precision
    # rounding residue, and their raw ratio is meaningless noise.
    _ATOL = 1e-12

    @property
    def sigmas(self) -> float:
        return abs(self.discrepancy) / max(self.stderr, self._ATOL)


@dataclass
class DiscrepancyReport:
    kind: str
    entries: list

    def max_sigmas(self) -> float:
        return max(e.sigmas for e in self.entries)

    def passed(self, k: float = 3.0) -> bool:
        return all(e.sigmas <= k for e in self.entries)


def pullback_balance_test(m: RationalMap, cloud: EmpiricalMeasure,
                          functions=None, subsample: int = 20000) -> DiscrepancyReport:
    """Check (1/d) sum over preimages of phi against phi itself.

    Under f*mu = d mu both sides have the same mean, so the per-point
    difference averages to zero within sampling error.
    """
    funcs = functions if functions is not None else BUILTIN_TEST_FUNCTIONS
    sub = cloud.subsample(subsample)
    y0, y1 = _preimages_batch(m, sub.z0, sub.z1)
    entries = []
    for f in funcs:
        direct = f(sub.z0, sub.z1)
        pulled = f(y0, y1).mean(axis=1)
        _, stderr = sub.chain_mean_stderr(pulled - direct)
        entries.append(DiscrepancyEntry(f.name, float(pulled.mean()),
                                        float(direct.mean()),
                                        float((pulled - direct).mean()), stderr))
    return DiscrepancyReport("pullback_balance", entries)


def pushforward_test(m: RationalMap, cloud: EmpiricalMeasure,
                     functions=None) -> DiscrepancyReport:
    """Check phi(f(x)) against phi(x): invariance of mu under pushforward."""
    funcs = functions if functions is not None else BUILTIN_TEST_FUNCTIONS
    w0, w1 = _eval_pair(m, cloud.z0, cloud.z1)
    entries = []
    for f in funcs:
        direct = f(cloud.z0, cloud.z1)
        pushed = f(w0, w1)
        _, stderr = cloud.chain_mean_stderr(pushed - direct)
        entries.append(DiscrepancyEntry(f.name, float(pushed.mean()),
                                        float(direct.mean()),
                                        float((pushed - direct).mean()), stderr))
    return DiscrepancyReport("pushforward", entries)
