"""Computation over the wireless multiple-access channel (CoMAC) simulator."""

from .model import (ConfigurationError, DomainError, FadingMode, FrameError, FunctionKind,
                    LambdaExistenceError, NetworkConfig, NomographicFunction, PhaseMode,
                    ReadingRange, SensingRange)
from .readings import PointMass, UniformIID
from .tdma import TdmaConfig

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "DomainError", "FadingMode", "FrameError", "FunctionKind",
    "LambdaExistenceError", "NetworkConfig", "NomographicFunction", "PhaseMode",
    "ReadingRange", "SensingRange", "PointMass", "UniformIID", "TdmaConfig",
]
