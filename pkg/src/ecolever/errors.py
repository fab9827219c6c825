"""Exception types shared across the package."""


class EcoleverError(Exception):
    """Base class for every package-specific error."""


class ValidationError(EcoleverError):
    """Structural invariants are violated.

    Carries the complete list of violations so callers (the scenario loader in
    particular) can report every problem at once rather than the first found.
    """

    def __init__(self, violations):
        self.violations = [str(v) for v in violations]
        super().__init__("; ".join(self.violations))


class InvalidAllocationError(EcoleverError):
    """An allocation references unknown routes, breaks mass balance, or exceeds a capacity."""


class UndefinedIndexError(EcoleverError):
    """A demand-normalized index was requested for a zero-demand scenario."""


class InfeasibleError(EcoleverError):
    """The problem instance admits no feasible solution."""


class UnboundedError(EcoleverError):
    """The linear program is unbounded below."""


class NumericFailureError(EcoleverError):
    """A solver exceeded its anti-cycling or iteration budget without converging."""


class ResourceLimitError(EcoleverError):
    """A solver hit its node/iteration cap; carries the best incumbent found so far."""

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


class ResourceBoundError(EcoleverError):
    """An exhaustive oracle was asked to enumerate more points than its hard bound."""


class NoThresholdError(EcoleverError):
    """No finite tax rate can induce the requested technology switch."""


class CalibrationError(EcoleverError):
    """Calibration anchors are mutually inconsistent; lists the violated relations."""

    def __init__(self, violations):
        self.violations = [str(v) for v in violations]
        super().__init__("; ".join(self.violations))
