"""Exception types shared by every entroflow package."""


class EntroflowError(Exception):
    """Base class for all domain errors."""


class CapExceeded(EntroflowError, RuntimeError):
    """Exact enumeration would exceed the configured bit cap."""

    def __init__(self, bits: float, cap: int):
        self.bits = bits
        self.cap = cap
        super().__init__(f"enumeration needs {bits:.2f} bits, cap is {cap} (ENTROFLOW_CAP_BITS)")


class BadValue(EntroflowError, ValueError):
    """A local state is outside {0, ..., q-1} or a table has the wrong size."""


class RangeError(EntroflowError, ValueError):
    """A shape does not fit on the torus without overlapping its own translate."""


class ZeroConditioning(EntroflowError, ValueError):
    """Conditioning event has probability zero."""


class PositivityError(EntroflowError, RuntimeError):
    """A logarithm of a zero cylinder probability was needed."""


class NonNullViolation(EntroflowError, RuntimeError):
    """Some single-site conditional probability vanishes."""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        super().__init__(message if t is None else f"{message} (t={t!r})")


class UnknownModel(EntroflowError, ValueError):
    """Builtin model name not recognised."""


class EmptyEnsemble(EntroflowError, ValueError):
    """Sample ensemble without samples."""


class ConfigError(EntroflowError, ValueError):
    """Experiment configuration failed validation."""
