"""Exception hierarchy used across the package."""


class SemOffloadError(Exception):
    """Base class for all package errors."""


class ConfigError(SemOffloadError, ValueError):
    """Malformed or out-of-range configuration.

    ``key`` names the offending setting and ``line`` the 1-based line of the
    config file, when known.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if key is not None:
            prefix.append(f"'{key}'")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)


class ScenarioInfeasibleError(SemOffloadError):
    """The scenario cannot be built (e.g. more users on an SBS than subcarriers)."""


class ConstraintViolation(SemOffloadError, ValueError):
    """A decision variable is outside its admissible set."""


class DomainError(SemOffloadError, ValueError):
    """A model function was evaluated outside its domain."""


class BracketError(SemOffloadError, ValueError):
    """Root bracket does not contain a sign change."""


class ConvergenceError(SemOffloadError, RuntimeError):
    """Iteration cap reached; ``best`` holds the last iterate."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class BudgetInfeasibleError(SemOffloadError):
    """Minimum capacities of an SBS's offloaders exceed its budget."""


class AnchorError(SemOffloadError, ValueError):
    """SCA expansion point has a non-positive delay denominator."""


class UserInfeasibleError(SemOffloadError):
    """Some users satisfy neither the local nor the offload branch.

    ``users`` holds their indices.
    """

    def __init__(self, message, users=()):
        self.users = tuple(int(u) for u in users)
        super().__init__(f"{message}: users {list(self.users)}")


class InfeasibleRunError(UserInfeasibleError):
    """A whole optimisation run cannot produce a feasible decision."""
