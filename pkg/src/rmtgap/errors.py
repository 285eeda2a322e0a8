"""Exception hierarchy shared by all modules."""


class RmtGapError(Exception):
    """Base class for toolkit errors."""


class ParameterError(RmtGapError, ValueError):
    """Invalid ensemble, quadrature or solver parameters."""


class DomainError(RmtGapError, ValueError):
    """Argument outside the domain of a special function."""


class NumericalError(RmtGapError, ArithmeticError):
    """A numerical procedure failed (eigen-solver, integrator, ...).

    ``context`` carries whatever identifies the failing evaluation
    (matrix size, abscissa, frontier reached).
    """

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def __str__(self):
        base = super().__str__()
        if not self.context:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.context.items())
        return f"{base} ({extra})"


class AnchorPlacementError(RmtGapError, ValueError):
    """Anchor centre where log F cannot be fitted meaningfully."""


class WindowError(RmtGapError, ValueError):
    """CDF targets for an automatic window are not reachable."""


class BranchFailure(NumericalError):
    """Integrator collapsed inside an anchor interval."""


class CalibrationError(NumericalError):
    """Quantile inversion failed during soft-edge calibration."""
