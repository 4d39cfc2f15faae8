"""Exception types shared across the library."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class OrderingError(ValueError):
    """Two time arguments violate the required ordering."""


class CapabilityError(TypeError):
    """The model does not support the requested capability (e.g. conditioning)."""


class EmptyClassError(ValueError):
    """A condition label matches no data points."""


class EditError(ValueError):
    """A latent manipulation is degenerate (e.g. fully clipped patch)."""


class RecordError(ValueError):
    """A noise record cannot be created or replayed as requested."""
