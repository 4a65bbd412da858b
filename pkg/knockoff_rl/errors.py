# knockoff_rl/errors.py


class KnockoffRLError(Exception):
    """Base class for every error raised by knockoff_rl."""


class ContractViolation(KnockoffRLError, ValueError):
    """Shape, dimension or precondition mismatch."""


class NonFiniteError(KnockoffRLError, FloatingPointError):
    """NaN or Inf in inputs, gradients, losses or parameters."""


class InsufficientDataError(KnockoffRLError):
    """Too few buffered transitions for the requested selection."""


class SelectionError(KnockoffRLError):
    pass


class ConfigError(KnockoffRLError, ValueError):
    pass
