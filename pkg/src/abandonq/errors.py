"""Exception types shared across the package."""


class InvalidParams(ValueError):
    """Parameters fail validation (nonpositive scale, probability outside (0,1), ...)."""


class UnsupportedFamily(InvalidParams):
    """Distribution family outside the supported set for this operation."""


class DomainError(ValueError):
    """Evaluation outside the mathematical domain of the function."""


class NotOverloaded(InvalidParams):
    """Operation requires traffic intensity rho > 1."""


class NoRoot(RuntimeError):
    """Root bracketing or refinement failed."""


class HazardUnavailable(RuntimeError):
    """Distribution has no density, so no hazard rate exists."""


class TabulationFailure(RuntimeError):
    """Adaptive table refinement could not reach its error target."""


class EventOrderViolation(RuntimeError):
    """Simulation clock moved backwards; internal invariant broken."""


class InsufficientReplications(InvalidParams):
    """Too few replications for the requested statistic."""


class MemoryBudgetExceeded(RuntimeError):
    """Expected event volume exceeds the configured cap."""


class TruncationTooSmall(InvalidParams):
    """State-space truncation would leave non-negligible probability mass."""


class SingularSystem(RuntimeError):
    """Linear solve for the stationary distribution failed."""


class NonConvergence(RuntimeError):
    """Iterative refinement failed to converge."""


class ReferenceMismatch(AssertionError):
    """Computed values disagree with shipped reference values beyond tolerance."""
