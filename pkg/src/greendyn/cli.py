"""Command-line front end: reproducible experiments with hashed configs.

Every run resolves its settings from defaults, then an optional INI
config file, then command-line flags (flags win).  The resolved
key-value set is serialized canonically, hashed, and embedded in every
output file; the ``verify`` subcommand recomputes those hashes later.
All randomness flows from ``run.seed``, so identical configs produce
byte-identical outputs no matter how ``--threads`` is set.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import GreendynError
from .estimators import (correlation_dimension, dimension_bound_check,
                         jacobian_exponent, lyapunov)
from .families import FamilySpec, build_map, postcritical_check
from .green import green_density_grid
from .lindiag import derivative_ratio_series, diagnostic_sweep, ratio_slope
from .maps import map_hash
from .sampler import backward_sample, pullback_balance_test, pushforward_test

__all__ = ["main"]

# Verdict thresholds: the exponent and slope tests follow the three-way
# equivalence directly; the dimension floor is calibrated to what the
# pair-counting estimator actually reads on torus-quotient measures,
# whose density singularities at the branch points depress the fitted
# slope to ~1.8 at feasible sample sizes (generic corpus maps stay
# below ~1.1, so the gap is wide).
_LATTES_DIM_MIN = 1.7
_RATIO_SLOPE_MIN = -0.02

_DEFAULTS = {
    "map.family": "",
    "map.d": "",
    "map.c": "",
    "map.g2": "",
    "map.g3": "",
    "map.coeffs_file": "",
    "run.seed": "0",
    "run.count": "100000",
    "run.chains": "25",
    "run.burn_in": "50",
    "run.threads": "1",
    "green.window": "-2.0 2.0 -2.0 2.0",
    "green.res": "128",
    "green.tol": "1e-10",
    "dimension.subsample": "10000",
    "lindiag.nmax": "40",
    "lindiag.rho": "0.4 0.2 0.1 0.05",
    "lindiag.tau": "1 2 5 10",
    "lindiag.nu": "0.5 0.2 0.1",
    "lindiag.r0": "0.5",
}

_FLAG_TO_KEY = {
    "family": "map.family",
    "d": "map.d",
    "c": "map.c",
    "g2": "map.g2",
    "g3": "map.g3",
    "coeffs_file": "map.coeffs_file",
    "seed": "run.seed",
    "count": "run.count",
    "chains": "run.chains",
    "burn_in": "run.burn_in",
    "threads": "run.threads",
    "window": "green.window",
    "res": "green.res",
    "tol": "green.tol",
    "subsample": "dimension.subsample",
    "nmax": "lindiag.nmax",
    "rho": "lindiag.rho",
    "tau": "lindiag.tau",
    "nu": "lindiag.nu",
    "r0": "lindiag.r0",
}

_SECTIONS_FOR = {
    "sample": ("map", "run"),
    "green": ("map", "run", "green"),
    "lyapunov": ("map", "run"),
    "dimension": ("map", "run", "dimension"),
    "lindiag": ("map", "run", "lindiag"),
    "lattes-make": ("map", "run"),
    "report": ("map", "run", "dimension", "lindiag"),
}


class RunConfig:
    """Resolved settings for one command, with a canonical hash."""

    def __init__(self, command: str, values: dict, out: str):
        self.command = command
        sections = _SECTIONS_FOR[command]
        # run.threads is an execution hint, not an experiment parameter:
        # outputs must be byte-identical for any thread cap, so it stays
        # out of the recorded config and its hash.
        self.values = {k: v for k, v in values.items()
                       if k.split(".", 1)[0] in sections and v != ""
                       and k != "run.threads"}
        self.out = Path(out)

    def __getitem__(self, key: str) -> str:
        return self.values[key]

    def get(self, key: str, default: str = "") -> str:
        return self.values.get(key, default)

    @property
    def canonical(self) -> str:
        items = sorted(self.values.items())
        return ";".join(f"{k}={v}" for k, v in items)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical.encode()).hexdigest()[:16]

    @property
    def seed(self) -> int:
        return int(self.get("run.seed", "0"))

    def floats(self, key: str) -> list:
        return [float(tok) for tok in self[key].split()]


def _canon(value) -> str:
    """Canonical string form for config values."""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_canon(v) for v in value)
    return str(value)


def _resolve_config(command: str, args: argparse.Namespace) -> RunConfig:
    values = dict(_DEFAULTS)
    if getattr(args, "config", None):
        parser = configparser.ConfigParser()
        parser.optionxform = str
        with open(args.config) as fh:
            parser.read_file(fh)
        for section in parser.sections():
            for key, val in parser[section].items():
                values[f"{section}.{key}"] = val.strip()
    for flag, key in _FLAG_TO_KEY.items():
        val = getattr(args, flag, None)
        if val is not None:
            values[key] = _canon(val)
    return RunConfig(command, values, getattr(args, "out", ".") or ".")


def _build_map(cfg: RunConfig):
    coeffs_file = cfg.get("map.coeffs_file")
    if coeffs_file:
        spec = FamilySpec.from_text(Path(coeffs_file).read_text())
    else:
        family = cfg.get("map.family")
        if not family:
            raise ValueError("no map given: pass --family or --coeffs-file")
        params = {}
        for name in ("d", "c", "g2", "g3"):
            val = cfg.get(f"map.{name}")
            if val:
                params[name] = val
        spec = FamilySpec(family, params)
    return build_map(spec)


def _sample_cloud(m, cfg: RunConfig):
    total = int(cfg["run.count"])
    chains = int(cfg["run.chains"])
    if total < 1 or chains < 1:
        raise ValueError("count and chains must be positive")
    per_chain = max(1, round(total / chains))
    cloud = backward_sample(m, count=per_chain, chains=chains,
                            burn_in=int(cfg["run.burn_in"]), seed=cfg.seed)
    return cloud


def _write_json(path: Path, obj: dict, cfg: RunConfig):
    obj = dict(obj)
    obj["config"] = cfg.canonical
    obj["config_hash"] = cfg.config_hash
    obj["seed"] = cfg.seed
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _csv_header_lines(cfg: RunConfig, extra: dict) -> list:
    lines = [f"# {k} = {v}" for k, v in extra.items()]
    lines.append(f"# config = {cfg.canonical}")
    lines.append(f"# config_hash = {cfg.config_hash}")
    return lines


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_sample(cfg: RunConfig) -> int:
    m = _build_map(cfg)
    cloud = _sample_cloud(m, cfg)
    re, im, chart = cloud.chart_rows()
    steps = cloud.step_ids
    cfg.out.mkdir(parents=True, exist_ok=True)
    lines = _csv_header_lines(cfg, {
        "map_hash": map_hash(m),
        "seed": cfg.seed,
        "burn_in": cfg["run.burn_in"],
    })
    lines.append("re,im,chart,chain,step")
    for i in range(len(cloud)):
        lines.append(f"{_fmt(re[i])},{_fmt(im[i])},{chart[i]},"
                     f"{cloud.chain_ids[i]},{steps[i]}")
    (cfg.out / "sample.csv").write_text("\n".join(lines) + "\n")
    _write_json(cfg.out / "sample_summary.json", {
        "quantity": "sample",
        "count": len(cloud),
        "chains": cloud.chain_count,
        "burn_in": cloud.burn_in,
        "weight_mass": float(cloud.weights.sum()),
        "map_hash": map_hash(m),
    }, cfg)
    return 0


def cmd_green(cfg: RunConfig) -> int:
    m = _build_map(cfg)
    window = cfg.floats("green.window")
    grid = green_density_grid(m, window, int(cfg["green.res"]),
                              tol=float(cfg["green.tol"]))
    cfg.out.mkdir(parents=True, exist_ok=True)
    lines = _csv_header_lines(cfg, {
        "window": f"{_fmt(grid.xmin)} {_fmt(grid.xmax)} "
                  f"{_fmt(grid.ymin)} {_fmt(grid.ymax)}",
        "resolution": f"{grid.nx} {grid.ny}",
        "map_hash": map_hash(m),
        "mass": _fmt(grid.mass),
        "clipped_fraction": _fmt(grid.clipped_fraction),
    })
    for row in grid.values:
        lines.append(",".join(_fmt(v) for v in row))
    (cfg.out / "green.csv").write_text("\n".join(lines) + "\n")
    _write_json(cfg.out / "green_summary.json", {
        "quantity": "green_density",
        "mass": float(grid.mass),
        "clipped_fraction": float(grid.clipped_fraction),
        "window": [grid.xmin, grid.xmax, grid.ymin, grid.ymax],
        "resolution": [grid.nx, grid.ny],
        "map_hash": map_hash(m),
    }, cfg)
    return 0


def _estimate_json(rep, m, verdicts):
    return {
        "quantity": rep.quantity,
        "value": rep.value,
        "stderr": rep.stderr,
        "n_samples": rep.n_samples,
        "params": rep.params,
        "map_hash": map_hash(m),
        "verdicts": verdicts,
    }


def cmd_lyapunov(cfg: RunConfig) -> int:
    m = _build_map(cfg)
    cloud = _sample_cloud(m, cfg)
    rep = lyapunov(m, cloud)
    verdicts = ["LOWER_BOUND_VIOLATION" if rep.params["lower_bound_violation"]
                else "LOWER_BOUND_OK"]
    _write_json(cfg.out / "lyapunov.json", _estimate_json(rep, m, verdicts), cfg)
    return 0


def cmd_dimension(cfg: RunConfig) -> int:
    m = _build_map(cfg)
    cloud = _sample_cloud(m, cfg)
    rep = correlation_dimension(cloud, subsample=int(cfg["dimension.subsample"]))
    lam = lyapunov(m, cloud)
    bound = dimension_bound_check(rep, lam, m.degree)
    out = _estimate_json(rep, m, [f"DIMENSION_BOUND_{bound.verdict}"])
    out["bound_check"] = {
        "ceiling": bound.ceiling,
        "slack": bound.slack,
        "stderr": bound.stderr,
        "verdict": bound.verdict,
    }
    _write_json(cfg.out / "dimension.json", out, cfg)
    return 0


def cmd_lindiag(cfg: RunConfig) -> int:
    m = _build_map(cfg)
    cloud = _sample_cloud(m, cfg)
    nmax = int(cfg["lindiag.nmax"])
    series = derivative_ratio_series(m, cloud, nmax)
    slope, slope_err = ratio_slope(series)
    small = [n for n in range(0, 5) if n <= nmax]
    coarse = list(range(5, nmax + 1, 5))
    n_values = sorted(set(small + coarse))
    sweep = diagnostic_sweep(
        m, cloud, n_values,
        rho_grid=tuple(cfg.floats("lindiag.rho")),
        tau_grid=tuple(cfg.floats("lindiag.tau")),
        nu_grid=tuple(cfg.floats("lindiag.nu")),
        r0=float(cfg["lindiag.r0"]))

    cfg.out.mkdir(parents=True, exist_ok=True)
    lines = _csv_header_lines(cfg, {"map_hash": map_hash(m)})
    lines.append("family,rho,tau,nu,r0,box,n,fraction,ci_half_width,count")
    for fam in ("bn", "dn", "vn", "recurrence"):
        for s in sweep[fam]:
            p = s.params
            for n, frac, half, cnt in zip(s.n_values, s.fractions,
                                          s.ci_half_widths, s.counts):
                row = [s.family,
                       _fmt(p["rho"]) if "rho" in p else "",
                       _fmt(p["tau"]) if "tau" in p else "",
                       _fmt(p["nu"]) if "nu" in p else "",
                       _fmt(p["r0"]) if "r0" in p else "",
                       _fmt(p["box"]) if "box" in p else "",
                       str(n), _fmt(frac), _fmt(half), str(cnt)]
                lines.append(",".join(row))
    (cfg.out / "lindiag.csv").write_text("\n".join(lines) + "\n")

    _write_json(cfg.out / "lindiag_summary.json", {
        "quantity": "lindiag",
        "ratio_slope": slope,
        "ratio_slope_stderr": slope_err,
        "n_max": nmax,
        "fraction_max_ratio_leq": {
            str(tau): series.fraction_max_leq(tau)
            for tau in cfg.floats("lindiag.tau")
        },
        "map_hash": map_hash(m),
    }, cfg)
    return 0


def cmd_lattes_make(cfg: RunConfig) -> int:
    g2 = cfg.get("map.g2")
    if not g2:
        raise ValueError("lattes-make needs --g2 (and optionally --g3)")
    spec = FamilySpec("lattes", {"g2": g2, "g3": cfg.get("map.g3", "0")})
    m = build_map(spec)
    explicit = FamilySpec("explicit", {"p": list(m.p), "q": list(m.q)})
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "lattes_map.txt").write_text(explicit.to_text())
    post = postcritical_check(m, steps=20)
    _write_json(cfg.out / "lattes_make.json", {
        "quantity": "lattes_make",
        "degree": m.degree,
        "resultant_mag": m.resultant_mag,
        "map_hash": map_hash(m),
        "postcritical_stabilized": post.stabilized,
        "postcritical_count": len(post.postcritical),
        "spec_file": "lattes_map.txt",
    }, cfg)
    return 0


def cmd_report(cfg: RunConfig) -> int:
    m = _build_map(cfg)
    cloud = _sample_cloud(m, cfg)
    half_log_d = 0.5 * math.log(m.degree)

    lam = lyapunov(m, cloud)
    dim = correlation_dimension(cloud, subsample=int(cfg["dimension.subsample"]))
    bound = dimension_bound_check(dim, lam, m.degree)
    nmax = int(cfg["lindiag.nmax"])
    series = derivative_ratio_series(m, cloud, nmax)
    slope, slope_err = ratio_slope(series)
    pull = pullback_balance_test(m, cloud)
    push = pushforward_test(m, cloud)

    lam_gap = lam.value - half_log_d
    minimal_exponent = abs(lam_gap) <= 3.0 * lam.stderr
    dim_maximal = dim.value >= _LATTES_DIM_MIN
    ratio_bounded = slope >= _RATIO_SLOPE_MIN
    if minimal_exponent and dim_maximal and ratio_bounded:
        verdict = "LATTES-LIKE"
    elif lam_gap >= 3.0 * lam.stderr:
        verdict = "GENERIC"
    else:
        verdict = "INCONCLUSIVE"

    _write_json(cfg.out / "report.json", {
        "quantity": "report",
        "verdict": verdict,
        "degree": m.degree,
        "map_hash": map_hash(m),
        "lyapunov": {"value": lam.value, "stderr": lam.stderr,
                     "gap_to_half_log_d": lam_gap,
                     "minimal_exponent": minimal_exponent},
        "dimension": {"value": dim.value, "stderr": dim.stderr,
                      "maximal": dim_maximal},
        "ratio_slope": {"value": slope, "stderr": slope_err,
                        "bounded": ratio_bounded},
        "bound_check": {"ceiling": bound.ceiling, "slack": bound.slack,
                        "verdict": bound.verdict},
        "invariance": {
            "pullback_max_sigmas": pull.max_sigmas(),
            "pushforward_max_sigmas": push.max_sigmas(),
        },
        "thresholds": {"dim_min": _LATTES_DIM_MIN,
                       "ratio_slope_min": _RATIO_SLOPE_MIN,
                       "exponent_sigmas": 3.0},
    }, cfg)
    return 0


def cmd_verify(paths) -> int:
    """Recompute embedded config hashes; nonzero exit on any mismatch."""
    results = []
    ok_all = True
    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.glob("*.json")) + sorted(p.glob("*.csv")))
        else:
            files.append(p)
    for f in files:
        canonical = stored = None
        if f.suffix == ".json":
            try:
                obj = json.loads(f.read_text())
                canonical = obj.get("config")
                stored = obj.get("config_hash")
            except (json.JSONDecodeError, OSError):
                pass
        else:
            try:
                for line in f.read_text().splitlines():
                    if line.startswith("# config = "):
                        canonical = line[len("# config = "):]
                    elif line.startswith("# config_hash = "):
                        stored = line[len("# config_hash = "):]
                    elif not line.startswith("#"):
                        break
            except OSError:
                pass
        if canonical is None or stored is None:
            results.append({"file": str(f), "status": "NO_HASH"})
            ok_all = False
            continue
        recomputed = hashlib.sha256(canonical.encode()).hexdigest()[:16]
        good = recomputed == stored
        ok_all &= good
        results.append({"file": str(f), "status": "OK" if good else "MISMATCH"})
    print(json.dumps({"quantity": "verify", "ok": ok_all,
                      "files": results}, indent=2, sort_keys=True))
    return 0 if ok_all else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _make_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="greendyn",
        description="Sampling and diagnostics for maximal-entropy measures "
                    "of rational maps on the Riemann sphere.")
    sub = top.add_subparsers(dest="command", required=True)

    mapp = argparse.ArgumentParser(add_help=False)
    mapp.add_argument("--family", help="power | chebyshev | quadratic | lattes | explicit")
    mapp.add_argument("--d", type=int, help="degree for power/chebyshev")
    mapp.add_argument("--c", help="quadratic parameter (complex as 're im' or 're')")
    mapp.add_argument("--g2", help="lattice invariant g2")
    mapp.add_argument("--g3", help="lattice invariant g3")
    mapp.add_argument("--coeffs-file", dest="coeffs_file",
                      help="map spec text file (family or explicit coefficients)")

    runp = argparse.ArgumentParser(add_help=False)
    runp.add_argument("--seed", type=int)
    runp.add_argument("--count", type=int, help="total sample count")
    runp.add_argument("--chains", type=int)
    runp.add_argument("--burn-in", dest="burn_in", type=int)
    runp.add_argument("--threads", type=int,
                      help="worker cap; outputs are identical for any value")
    runp.add_argument("--out", default=".", help="output directory")
    runp.add_argument("--config", help="INI config file; flags override it")

    sub.add_parser("sample", parents=[mapp, runp],
                   help="sample the maximal-entropy measure to CSV")
    g = sub.add_parser("green", parents=[mapp, runp],
                       help="Green-measure density grid")
    g.add_argument("--window", type=float, nargs="+",
                   help="xmin xmax [ymin ymax] (2 or 4 floats)")
    g.add_argument("--res", type=int)
    g.add_argument("--tol", type=float)
    sub.add_parser("lyapunov", parents=[mapp, runp],
                   help="Lyapunov exponent of the sampled measure")
    dparser = sub.add_parser("dimension", parents=[mapp, runp],
                             help="correlation dimension of the sampled measure")
    dparser.add_argument("--subsample", type=int)
    lparser = sub.add_parser("lindiag", parents=[mapp, runp],
                             help="linearization-set diagnostics")
    lparser.add_argument("--nmax", type=int)
    lparser.add_argument("--rho", type=float, nargs="+")
    lparser.add_argument("--tau", type=float, nargs="+")
    lparser.add_argument("--nu", type=float, nargs="+")
    lparser.add_argument("--r0", type=float)
    sub.add_parser("lattes-make", parents=[mapp, runp],
                   help="construct a duplication Lattes map and write its spec")
    rparser = sub.add_parser("report", parents=[mapp, runp],
                             help="full three-way diagnostic verdict")
    rparser.add_argument("--subsample", type=int)
    rparser.add_argument("--nmax", type=int)
    v = sub.add_parser("verify", help="check embedded config hashes")
    v.add_argument("paths", nargs="+", help="output files or directories")
    return top


_COMMANDS = {
    "sample": cmd_sample,
    "green": cmd_green,
    "lyapunov": cmd_lyapunov,
    "dimension": cmd_dimension,
    "lindiag": cmd_lindiag,
    "lattes-make": cmd_lattes_make,
    "report": cmd_report,
}


def main(argv=None) -> int:
    try:
        args = _make_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage/help; normalize the exit code
        # (help exits 0, bad flags exit 2) and emit the error as JSON too
        if exc.code in (0, None):
            return 0
        print(json.dumps({"error": "invalid command line",
                          "type": "UsageError"}), file=sys.stderr)
        return 2
    try:
        if args.command == "verify":
            return cmd_verify(args.paths)
        cfg = _resolve_config(args.command, args)
        return _COMMANDS[args.command](cfg)
    except GreendynError as exc:
        print(json.dumps({"error": str(exc),
                          "type": exc.__class__.__name__}), file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(json.dumps({"error": str(exc),
                          "type": exc.__class__.__name__}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
