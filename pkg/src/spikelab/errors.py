"""Exception types raised across the package."""


class SpikelabError(Exception):
    """Base class for library errors."""


class SingularBasis(SpikelabError, ValueError):
    pass


class NotUnimodular(SpikelabError, ValueError):
    pass


class DimensionUnsupported(SpikelabError, ValueError):
    pass


class FlowOverflow(SpikelabError, OverflowError):
    """Raised when a float-kind flow factor e^{c t} would overflow."""


class BudgetExceeded(SpikelabError):
    """An enumeration or scan would exceed its configured size budget."""


class EnumerationTooLarge(BudgetExceeded):
    pass


class DegenerateFit(SpikelabError, ValueError):
    pass


class InsufficientDepth(SpikelabError, ValueError):
    pass


class NoDip(SpikelabError, ValueError):
    pass


class EmptyIntersection(SpikelabError, ValueError):
    pass


class ScaleOutOfRange(SpikelabError, ValueError):
    pass


class ConfigError(SpikelabError, ValueError):
    pass
