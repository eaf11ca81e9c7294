"""Tools for the equilibrium measure of rational maps on the sphere.

The package samples the maximal-entropy measure of a degree-d rational
map by backward iteration, evaluates the dynamical Green function and
its distributional Laplacian on grids, estimates Lyapunov exponents and
correlation dimensions with uncertainty, and probes the linearization
sets that control how far typical orbits are from torus-quotient
behavior.  A CLI (``greendyn``) exposes the same pipeline with
config-hashed, reproducible outputs.
"""

from .errors import (DegenerateMap, DegenerateRange, GreendynError,
                     InsufficientSamples, NonConvergence, PoleAtLattice,
                     RootFindingFailure)
from .estimators import (BoundCheck, EstimateReport, correlation_dimension,
                         dimension_bound_check, jacobian_exponent, lyapunov)
from .families import (FamilySpec, LatticeInvariants, PostcriticalReport,
                       build_map, chebyshev_map, critical_points,
                       lattes_from_duplication, postcritical_check, power_map,
                       quadratic_map, weierstrass_p)
from .green import (DensityGrid, GreenValue, green_density_grid,
                    green_function, green_increments, green_values)
from .lindiag import (DiagnosticSeries, RatioSeries, bn_membership,
                      derivative_ratio_series, diagnostic_sweep, ratio_slope,
                      vn_membership, wilson_interval)
from .maps import (OrbitRecord, ProjPoint, RationalMap, as_point,
                   fs_derivative_complex, fs_derivative_log, iterate,
                   make_rational_map, map_hash)
from .roots import aberth_roots, solve_poly_roots
from .sampler import (BUILTIN_TEST_FUNCTIONS, BackwardOrbit, DiscrepancyReport,
                      EmpiricalMeasure, TestFunction, backward_orbit,
                      backward_sample, preimages, pullback_balance_test,
                      pushforward_test)

__all__ = [
    "GreendynError", "DegenerateMap", "NonConvergence", "RootFindingFailure",
    "InsufficientSamples", "DegenerateRange", "PoleAtLattice",
    "ProjPoint", "RationalMap", "OrbitRecord", "as_point", "make_rational_map",
    "iterate", "map_hash", "fs_derivative_complex", "fs_derivative_log",
    "aberth_roots", "solve_poly_roots",
    "GreenValue", "green_values", "green_function", "green_increments",
    "DensityGrid", "green_density_grid",
    "LatticeInvariants", "FamilySpec", "PostcriticalReport", "power_map",
    "chebyshev_map", "quadratic_map", "lattes_from_duplication",
    "weierstrass_p", "critical_points", "postcritical_check", "build_map",
    "BackwardOrbit", "EmpiricalMeasure", "TestFunction",
    "BUILTIN_TEST_FUNCTIONS", "DiscrepancyReport", "preimages",
    "backward_orbit", "backward_sample", "pullback_balance_test",
    "pushforward_test",
    "EstimateReport", "BoundCheck", "lyapunov", "jacobian_exponent",
    "correlation_dimension", "dimension_bound_check",
    "RatioSeries", "DiagnosticSeries", "derivative_ratio_series",
    "ratio_slope", "bn_membership", "vn_membership", "wilson_interval",
    "diagnostic_sweep",
]

__version__ = "0.1.0"
