"""Exception hierarchy shared by every module."""


class PadicControlError(Exception):
    """Base class for all errors raised by this package."""


class ContextMismatch(PadicControlError, ValueError):
    pass


class PrecisionExhausted(PadicControlError, ArithmeticError):
    """Cancellation or renormalization left no certified digits."""


class DivisionByZero(PadicControlError, ZeroDivisionError):
    pass


class RankAmbiguous(PadicControlError, ArithmeticError):
    """A rank decision cannot be certified at the working precision."""


class NotRegular(PadicControlError, ValueError):
    """Eigenvalue valuations collide, so the element is not regular."""


class InvalidRay(PadicControlError, ValueError):
    pass


class CapExceeded(PadicControlError, ValueError):
    pass


class NoSink(PadicControlError):
    pass


class MultipleSinks(PadicControlError):
    def __init__(self, message, sinks=()):
        super().__init__(message)
        self.sinks = list(sinks)


class NoStabilization(PadicControlError):
    def __init__(self, message, last=None, steps=0):
        super().__init__(message)
        self.last = last
        self.steps = steps
