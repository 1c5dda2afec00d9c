"""Exception taxonomy for stripflow.

Every failure mode that carries meaning for a caller gets its own class so
batch drivers can map errors onto exit codes without string matching.
"""


class StripflowError(Exception):
    """Base class for all library errors."""


class SpectralValidationError(StripflowError):
    """A coupling matrix failed a positivity / sectoriality check."""

    def __init__(self, message, witness=None, worst_ratio=None):
        super().__init__(message)
        self.witness = witness
        self.worst_ratio = worst_ratio


class SingularOperatorError(StripflowError):
    """A shifted operator (A + lambda) was numerically singular."""


class DegenerateDomainError(StripflowError):
    """Interface height dropped to (or below) the degeneracy guard."""

    def __init__(self, message, h_min=None, where=None):
        super().__init__(message)
        self.h_min = h_min
        self.where = where


class EllipticityError(StripflowError):
    """Transformed principal symbol lost its positivity margin."""


class SolverError(StripflowError):
    """An elliptic solve did not converge to the requested residual."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class AdmissibilityError(StripflowError):
    """Initial profile violates the evolution admissibility gate."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class ScenarioError(StripflowError):
    """Scenario file is malformed or semantically invalid."""

    def __init__(self, message, path=None, section=None, key=None):
        parts = [message]
        if section is not None:
            parts.append(f"[section {section}]")
        if key is not None:
            parts.append(f"[key {key}]")
        super().__init__(" ".join(parts))
        self.path = path
        self.section = section
        self.key = key


class BreakdownError(StripflowError):
    """Evolution stopped on a breakdown flag where a caller demanded completion."""
