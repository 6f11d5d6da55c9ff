class IcaPrepError(Exception):
    """Base class for every error raised by the preprocessor model."""


class ContractViolation(IcaPrepError, ValueError):
    """An operation was called outside its precondition."""


class ConfigurationError(IcaPrepError, ValueError):
    """An unsupported hardware configuration (odd N, non power-of-two M, ...)."""


class ParseError(IcaPrepError, ValueError):
    """A signal or config file could not be decoded."""


class RankDeficientError(IcaPrepError, ArithmeticError):
    def __init__(self, index: int, value: float, floor: float) -> None:
        super().__init__(
            f"eigenvalue {index} = {value:.3e} is below the floor {floor:.3e}; covariance is rank deficient"
        )
        self.index = index
        self.value = value
        self.floor = floor


class ConvergenceError(IcaPrepError, ArithmeticError):
    pass
