"""Exception hierarchy.

The CLI maps each family onto an exit code: configuration problems -> 2,
numerical non-convergence -> 3, rejected physical regimes -> 4.
"""


class GuideCloakError(Exception):
    """Base class for all package errors."""


class ConfigError(GuideCloakError, ValueError):
    """Malformed or schema-invalid experiment configuration."""


class InvariantError(ConfigError):
    """Configuration is well formed but violates a physical invariant."""


class NumericalError(GuideCloakError, ArithmeticError):
    """A numerical procedure did not converge."""


class RegimeError(GuideCloakError, ValueError):
    """The requested operating point is excluded by assumption."""


class NearCutoffError(RegimeError):
    """k^2 coincides (within tolerance) with a transverse eigenvalue."""


class DegenerateGammaError(RegimeError):
    """Two sums beta_j + beta_j' coincide, the multimodal design is undefined."""


class OutOfSectionError(GuideCloakError, ValueError):
    """Point lies outside the open cross-section."""


class CoincidentPointsError(GuideCloakError, ValueError):
    """Green's function requested at its singularity."""


class NonConvergentError(NumericalError):
    """Modal series cannot be truncated to the requested accuracy."""


class ExtrapolationDivergedError(NumericalError):
    """Richardson extrapolants do not contract."""


class SingularSystemError(NumericalError):
    """Foldy-Lax system is (numerically) singular: point-model resonance."""


class GradientVanishesError(RegimeError):
    """Transverse point sits at an extremum of the first eigenfunction."""


class NodalPointError(RegimeError):
    """Transverse point is too close to a nodal line of a propagating mode."""


class NonContractionError(NumericalError):
    """Fixed-point map is not contracting."""


class MaxIterError(NumericalError):
    """Fixed-point iteration exhausted its budget."""


class SingularBError(NumericalError):
    """Phase matrix of the multimodal design is not invertible."""


class SearchExhaustedError(NumericalError):
    """Could not build an invertible phase matrix above the floor."""
