from typing import List, Optional


class VotcswError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_code = 1
    kind = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DomainError(VotcswError):
    """A well-formed request the domain cannot satisfy (exit code 1)"""

    kind = "domain-error"


class InvalidArgumentError(DomainError, ValueError):
    kind = "invalid-argument"


class ShapeMismatchError(DomainError, ValueError):
    kind = "shape-mismatch"


class FormatError(DomainError):
    kind = "format-error"


class InfeasibleError(DomainError):
    kind = "infeasible"


class GeometryError(DomainError):
    kind = "geometry-error"


class AspectError(DomainError):
    kind = "aspect-error"


class TrainingDivergedError(DomainError):
    kind = "training-diverged"


class MissingArtifactError(DomainError):
    kind = "missing-artifact"


class UsageError(VotcswError):
    """Bad command line or configuration (exit code 2)"""

    exit_code = 2
    kind = "usage-error"

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        self.violations = list(violations or [])
        if self.violations:
            message = message + "\n" + "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(message)
