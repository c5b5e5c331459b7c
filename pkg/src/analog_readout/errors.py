"""Exception types shared across the package."""


class ReadoutError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(ReadoutError, ValueError):
    """A parameter or input violates an operation's precondition."""


class WeightOverflowError(InvalidParameterError):
    """A readout weight exceeds the modulator gain and cannot be realized.

    Attributes:
        index: position of the first offending weight.
        value: the offending weight.
    """

    def __init__(self, index: int, value: float, gain: float):
        self.index = index
        self.value = value
        self.gain = gain
        super().__init__(
            f"weight {index} = {value:.6g} exceeds the modulator gain {gain:.6g}; "
            "rescale the weights before programming the modulator"
        )


class SolverError(ReadoutError, RuntimeError):
    """The linear solver could not produce a solution."""
