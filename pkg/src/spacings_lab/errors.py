"""Exception hierarchy shared by all modules."""


class SpacingsLabError(Exception):
    """Base class for errors raised by spacings_lab."""


class DomainError(SpacingsLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class RepresentationError(SpacingsLabError, ValueError):
    """A sample lacks the representation an operation needs (e.g. block sums)."""


class CapacityError(SpacingsLabError, ValueError):
    """A request would exceed the configured size or memory budget."""


class ResolutionError(SpacingsLabError, ValueError):
    """A discretisation grid is too coarse for the requested computation."""


class FitError(SpacingsLabError, ValueError):
    """A regression was requested on degenerate data."""


class ConfigError(SpacingsLabError, ValueError):
    """An experiment configuration is invalid.

    Parameters
    ----------
    field : str
        Name of the offending configuration field.
    message : str
        Human readable description.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
