"""Exception hierarchy shared by every submodule."""


class BlockadeError(Exception):
    """Base class for all errors raised by npblockade."""


class DimensionError(BlockadeError, ValueError):
    """A mode or operator was given an invalid dimension."""


class EmbeddingError(BlockadeError, ValueError):
    """Single-mode operator does not fit the requested slot."""


class AlgebraError(BlockadeError, ValueError):
    """Operands live on different composite spaces."""


class ParameterError(BlockadeError, ValueError):
    """Physical parameters violate a model invariant."""


class SolverError(BlockadeError, ArithmeticError):
    """The steady-state linear system could not be solved."""


class DegenerateSteadyStateError(SolverError):
    """The Liouvillian kernel is (numerically) more than one-dimensional."""


class StiffnessError(SolverError):
    """Adaptive time stepping underflowed."""


class VanishingPhotonNumberError(BlockadeError, ArithmeticError):
    """Mean photon number is too small for g(n) to be defined."""


class ConfigError(BlockadeError, ValueError):
    """Malformed run configuration; ``key`` holds the offending key path."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class ContractError(BlockadeError, ValueError):
    """A caller asked for data that the input does not carry."""


class UnsupportedModelError(BlockadeError, NotImplementedError):
    """No closed-form result exists for the requested model/order."""
