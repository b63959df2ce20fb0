"""Typed errors and warnings shared across the toolkit.

Every error carries an ``exit_code`` used by the command-line front end:
2 schema violation, 3 geometric precondition, 4 stability guard,
5 calibration. Structured context (node index, measured value, ...) is
kept in ``context`` so reports and messages can name the offender.
"""

from __future__ import annotations


class ConeflowError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1

    def __init__(self, message: str, **context):
        self.context = context
        if context:
            detail = ", ".join(f"{k}={v}" for k, v in context.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class SchemaViolation(ConeflowError):
    """Input file or run configuration does not match its published schema."""

    exit_code = 2


class GeometryError(ConeflowError):
    """A geometric precondition failed (chart, regularity, grid pairing)."""

    exit_code = 3


class ChartBreakdown(GeometryError):
    """A chart denominator vanished (u3 -> 0, factorization pivot, Moebius)."""


class RadialPoint(GeometryError):
    """The curve is radial or off the upper cone: <u', u'>_J <= 0."""


class GridMismatch(GeometryError):
    """Two objects that must share a periodic grid do not."""


class DegenerateSpeed(GeometryError):
    """A sphere curve has a node with ||m'|| = 0."""


class PatternViolation(GeometryError):
    """A Maurer-Cartan field is off the expected sparsity pattern."""


class ProjectionDefect(GeometryError):
    """Numerical rho_x rho^-1 is too far from the Lorentz algebra shape."""


class GuardError(ConeflowError):
    """A runtime stability guard tripped."""

    exit_code = 4


class StabilityGuard(GuardError):
    """Time step exceeds the stability bound of the chosen scheme."""


class BlowupDetected(GuardError):
    """State norm grew past the blowup threshold during integration."""


class CalibrationError(ConeflowError):
    """Sign-calibration problems."""

    exit_code = 5


class CalibrationMissing(CalibrationError):
    """An operation needing sign calibration was called without one."""


class CalibrationInconsistent(CalibrationError):
    """No single sign vector works across the calibration suite."""


class UnresolvedSpectrum(UserWarning):
    """Aliasing guard: the top third of the spectrum carries real energy."""
