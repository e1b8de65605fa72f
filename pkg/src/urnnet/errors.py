"""Exception types shared across the package."""

from __future__ import annotations


class UrnNetError(Exception):
    """Base class for all package-specific errors."""


class InvalidParamsError(UrnNetError):
    """A generator or run configuration is invalid."""


class ZeroInDegreeError(UrnNetError):
    """Some vertex has no incoming edge, so its urn is never reinforced."""

    def __init__(self, vertices):
        self.vertices = tuple(int(v) for v in vertices)
        super().__init__(f"zero in-degree at vertices {self.vertices}")


class EigenConvergenceError(UrnNetError):
    """The eigenvalue iteration did not converge."""


class SingularSylvesterError(UrnNetError):
    """Two eigenvalues of the coefficient matrix sum to zero."""


class SingularMatrixError(UrnNetError):
    """Matrix is singular or too ill-conditioned to invert."""

    def __init__(self, condition: float):
        self.condition = float(condition)
        super().__init__(f"matrix is singular (condition estimate {condition:.3e})")


class NotCriticalRegimeError(UrnNetError):
    """No eigenvalue sits on the critical line Re = 1/2."""


class NonDiagonalizableError(UrnNetError):
    """Eigenvector matrix is too ill-conditioned for a spectral solve."""


class PolyaTypeError(UrnNetError):
    """Operation is undefined for identity-type reinforcement (a = b = m)."""


class WrongRegimeError(UrnNetError):
    """A prediction or estimator was requested outside its fluctuation regime."""


class NotRegularError(UrnNetError):
    """Operation requires an undirected regular graph."""


class SingularLimitSystemError(UrnNetError):
    """The linear system for the heterogeneous limit is singular."""


class EnumerationTooLargeError(UrnNetError):
    """Exact enumeration would exceed the configured size bound."""


class InsufficientCheckpointsError(UrnNetError):
    """Not enough checkpoints for the requested regression."""
