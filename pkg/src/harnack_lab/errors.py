"""Error types shared across the lab.

Each maps to a CLI exit code: ConfigError -> 2, the numerical failures -> 3.
Assertion failures of check subcommands are reported via exit code 4 without
an exception type (the checks collect pass flags instead of raising).
"""


class HarnackLabError(Exception):
    """Base class for package errors."""


class ConfigError(HarnackLabError):
    """Malformed config text, weight block, or problem file."""


class NonIntegrable(HarnackLabError):
    """Adaptive quadrature diverged; the integrand is outside the valid range."""


class BracketFailure(HarnackLabError):
    """Root bracketing failed; the requested height exceeds the reachable range."""


class CflViolation(HarnackLabError):
    """Explicit time step violates the stability bound."""


class LinearSolveFailure(HarnackLabError):
    """Implicit step could not be solved to tolerance."""


class EmptyFamily(HarnackLabError):
    """No candidate cylinder satisfies the density condition."""


class ConstructionFailure(HarnackLabError):
    """An experiment could not realize the required density target on the grid."""


class ResolutionTooCoarse(HarnackLabError):
    """The grid does not resolve the smallest requested scale."""


class DegenerateInfimum(HarnackLabError):
    """An infimum underflowed the positivity floor; the quotient is meaningless."""
