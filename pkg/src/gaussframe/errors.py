"""Exception types raised across the package."""


class GaussFrameError(Exception):
    """Base class for all package errors."""


class NonEllipticField(GaussFrameError):
    """Quadratic form of the coefficient matrix is not positive."""


class DomainError(GaussFrameError, ValueError):
    """Parameter outside the domain where a formula holds."""


class InvalidConfig(GaussFrameError, ValueError):
    """Lattice or run configuration violates a hard constraint."""


class SizeOverflow(GaussFrameError):
    """An enumeration or assembly exceeded its configured cap."""


class OutOfBand(GaussFrameError):
    """Input frequency content is outside the resolved annuli."""


class StepFailure(GaussFrameError):
    """Ray integration degenerated (frequency collapsed)."""


class HorizonExceeded(GaussFrameError):
    """Requested time lies outside [-T, T]."""


class DivisionDegeneracy(GaussFrameError):
    """Normalising symbol value is numerically zero."""


class IndexMismatch(GaussFrameError):
    """Operator and coefficient sequence live on different index sets."""


class NonContraction(GaussFrameError):
    """Volterra series terms failed to decay."""


class ConfigError(GaussFrameError):
    """Malformed configuration or problem file.

    Carries an optional line number so the CLI can point at the offending
    input.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
