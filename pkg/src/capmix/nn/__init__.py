"""Minimal reverse-mode differentiation engine for the CAPMix network."""

from .functional import batchnorm1d, bce_loss, conv1d, dropout, flatten, linear, maxpool1d, relu, softmax2
from .gradcheck import GradCheckResult, check_gradients, check_parameter_gradients, finite_difference_check
from .layers import BatchNorm1d, Conv1d, Linear, Module
from .optim import Adam
from .tensor import InvalidStateError, Parameter, Tensor

__all__ = [
    "Adam",
    "BatchNorm1d",
    "Conv1d",
    "GradCheckResult",
    "InvalidStateError",
    "Linear",
    "Module",
    "Parameter",
    "Tensor",
    "batchnorm1d",
    "bce_loss",
    "check_gradients",
    "check_parameter_gradients",
    "conv1d",
    "dropout",
    "finite_difference_check",
    "flatten",
    "linear",
    "maxpool1d",
    "relu",
    "softmax2",
]
