"""
Exception hierarchy; every error knows the CLI exit code it maps to
"""
from typing import Any, Dict, Optional


class OpinionDefenseError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 2

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = context

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.message} ({details})"


# Input / configuration (exit 2)

class ConfigError(OpinionDefenseError):
    pass


class ParseError(OpinionDefenseError):
    """Malformed input file; context carries line or field location"""

    def __init__(self, message: str, *, path: Optional[str] = None, line: Optional[int] = None,
                 field: Optional[str] = None):
        context = {k: v for k, v in (("path", path), ("line", line), ("field", field)) if v is not None}
        super().__init__(message, **context)


class NegativeWeight(ParseError):
    pass


class AsymmetryError(ParseError):
    pass


class ZeroDegreeNode(OpinionDefenseError):
    pass


class SizeLimitExceeded(OpinionDefenseError):
    pass


class DimensionTooLarge(OpinionDefenseError):
    pass


class NonPositiveBudget(OpinionDefenseError):
    pass


class NonPositiveNu(OpinionDefenseError):
    pass


class EmptyActiveSet(OpinionDefenseError):
    pass


# Schur stability (exit 3)

class NotSchurStable(OpinionDefenseError):
    exit_code = 3

    def __init__(self, rho: float, tol: float):
        super().__init__("influence matrix A is not Schur stable", rho=rho, tol=tol)
        self.rho = rho


class SingularSystem(OpinionDefenseError):
    exit_code = 3


# Source connectivity (exit 4)

class NotIrreducible(OpinionDefenseError):
    exit_code = 4

    def __init__(self, components: list):
        listing = "; ".join("{" + ",".join(str(i + 1) for i in comp) + "}" for comp in components)
        super().__init__(f"source interaction graph is disconnected: {len(components)} components {listing}")
        self.components = components


class ZeroMass(OpinionDefenseError):
    exit_code = 4


# Budget (exit 5)

class BudgetInfeasible(OpinionDefenseError):
    exit_code = 5


class BudgetTooSmall(BudgetInfeasible):
    pass


# Numerical failures (exit 6)

class NumericalFailure(OpinionDefenseError):
    exit_code = 6


class NoConvergence(NumericalFailure):
    pass


class BracketFailure(NumericalFailure):
    pass


class NotConverged(NumericalFailure):
    pass


class GenerationFailed(NumericalFailure):
    pass


class SolverInvariantError(NumericalFailure):
    pass
