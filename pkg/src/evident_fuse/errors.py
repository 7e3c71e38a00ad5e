"""Exception hierarchy shared by all modules."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class DimensionError(ValidationError):
    """Operands disagree on class count or feature dimension."""


class InfiniteStrengthError(ValidationError):
    """A fully certain opinion (u = 0) has no finite evidence representation."""


class TotalConflictError(ValidationError):
    """Dempster's rule is undefined when the two opinions fully conflict."""


class TrainingError(RuntimeError):
    """Training diverged or could not start."""
