class ScapmError(Exception):
    """
    Base class for every error raised by the market engines.
    """


class MarketStructureError(ScapmError):
    """
    The volatility matrix is rank deficient, or the shapes of a market and
    a path bundle do not agree.
    """


class NonViableMarketError(ScapmError):
    """
    mu - r*1 is not in the column span of sigma.
    """
    def __init__(self, residual, tolerance):
        self.residual = residual
        self.tolerance = tolerance
        super(NonViableMarketError, self).__init__(
            "market is not viable: least-squares residual {:.3e} exceeds "
            "tolerance {:.3e}".format(residual, tolerance))


class ScheduleError(ScapmError):
    """
    Schedule durations do not sum to the horizon or a segment boundary is
    off the time grid.
    """


class DomainError(ScapmError, ValueError):
    """
    An argument lies outside the domain where the quantity is defined.
    """
