"""Torus geometry, configurations, shapes and the shared error types."""

from .errors import (
    BadValue,
    CapExceeded,
    ConfigError,
    EmptyEnsemble,
    EntroflowError,
    NonNullViolation,
    PositivityError,
    RangeError,
    UnknownModel,
    ZeroConditioning,
)
from .torus import (
    Shape,
    SpinConfig,
    TorusGeometry,
    all_states,
    ball,
    boundary_size,
    box,
    decode,
    encode,
    enumerate_configs,
    patch,
    translate,
)

__all__ = [
    "BadValue",
    "CapExceeded",
    "ConfigError",
    "EmptyEnsemble",
    "EntroflowError",
    "NonNullViolation",
    "PositivityError",
    "RangeError",
    "UnknownModel",
    "ZeroConditioning",
    "Shape",
    "SpinConfig",
    "TorusGeometry",
    "all_states",
    "ball",
    "boundary_size",
    "box",
    "decode",
    "encode",
    "enumerate_configs",
    "patch",
    "translate",
]
