"""Exception types shared across the pipeline."""


class RocError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(RocError):
    """An invariant of the core object model was violated."""


class DimensionError(ModelError):
    """Shapes of perturbation maps / uncertainty sets disagree."""


class UnsupportedSetError(RocError):
    """The requested operation has no rule for this uncertainty-set kind."""


class LoweringError(RocError):
    """A symbolic norm term cannot be lowered to LP/SOC form."""


class SolverError(RocError):
    """The solver was handed a problem it cannot process."""
