"""Continuous-variable quantum Boltzmann machine: simulation, training and generation."""
from .engine import ForwardResult, QbmConfig, QiteParams, forward
from .errors import CvqbmError
from .kernels import BACKEND
from .trainer import TrainConfig, TrainResult, fidelity, generate, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CvqbmError",
    "ForwardResult",
    "QbmConfig",
    "QiteParams",
    "TrainConfig",
    "TrainResult",
    "fidelity",
    "forward",
    "generate",
    "train",
]
