"""Error types shared across the package.

Every anticipated numerical failure mode gets its own class so callers
(and the CLI exit-code mapping) can tell misuse apart from genuine
numerical breakdown.
"""


class GreendynError(Exception):
    """Base class for all package-specific failures."""


class DegenerateMap(GreendynError):
    """The numerator and denominator share a root (resultant ~ 0)."""


class NonConvergence(GreendynError):
    """An iterative computation failed to reach its tolerance."""


class RootFindingFailure(GreendynError):
    """The simultaneous root finder stagnated.

    Carries the best residuals seen, for diagnosis.
    """

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class InsufficientSamples(GreendynError):
    """Too few (or too corrupted) samples for the requested estimate."""


class DegenerateRange(GreendynError):
    """The pairwise-distance distribution spans fewer than 2 decades."""


class PoleAtLattice(GreendynError):
    """Weierstrass ℘ evaluated too close to a lattice point."""
