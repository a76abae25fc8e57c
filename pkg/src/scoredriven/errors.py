"""Exception types raised by scoredriven."""


class DomainError(ValueError):
    """Parameter or observation outside the support of a distribution."""


class SpecificationError(ValueError):
    """Inconsistent model, constraint or configuration specification."""


class UnitRootError(SpecificationError):
    """Long-term initialization is undefined because the AR coefficients sum to one."""


class EstimationStartError(RuntimeError):
    """No starting point yields a finite log-likelihood."""


class ResamplingError(RuntimeError):
    """Every bootstrap replicate or coefficient draw failed."""


class ConvergenceWarning(UserWarning):
    """The optimizer stopped on its evaluation budget."""
