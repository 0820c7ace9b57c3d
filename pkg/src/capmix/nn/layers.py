"""Parameterised layers and a tiny module container."""

from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Parameter, Tensor


class Module:
    """Holds named parameters, buffers and child modules."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}
        self._buffers: dict[str, np.ndarray] = {}
        self._children: dict[str, Module] = {}

    def add_param(self, name: str, value) -> Parameter:
        p = Parameter(value, name)
        self._params[name] = p
        return p

    def add_buffer(self, name: str, value) -> np.ndarray:
        buf = np.array(value, dtype=np.float64)
        self._buffers[name] = buf
        return buf

    def add_child(self, name: str, module: Module) -> Module:
        self._children[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> dict[str, Parameter]:
        out = {prefix + k: p for k, p in self._params.items()}
        for name, child in self._children.items():
            out.update(child.named_parameters(f"{prefix}{name}."))
        return out

    def named_buffers(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {prefix + k: b for k, b in self._buffers.items()}
        for name, child in self._children.items():
            out.update(child.named_buffers(f"{prefix}{name}."))
        return out

    def zero_grad(self):
        for p in self.named_parameters().values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {k: p.data.copy() for k, p in self.named_parameters().items()}
        state.update({k: b.copy() for k, b in self.named_buffers().items()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]):
        params, buffers = self.named_parameters(), self.named_buffers()
        expected = set(params) | set(buffers)
        if set(state) != expected:
            missing, extra = sorted(expected - set(state)), sorted(set(state) - expected)
            raise KeyError(f"state mismatch; missing={missing} unexpected={extra}")
        for k, p in params.items():
            if state[k].shape != p.data.shape:
                raise KeyError(f"{k}: shape {state[k].shape} != {p.data.shape}")
            p.data = np.array(state[k], dtype=np.float64)
        for k, b in buffers.items():
            if state[k].shape != b.shape:
                raise KeyError(f"{k}: shape {state[k].shape} != {b.shape}")
            b[...] = state[k]


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv1d(Module):
    def __init__(self, c_in: int, c_out: int, kernel: int, rng: np.random.Generator, stride: int = 1, padding: int = 0):
        super().__init__()
        self.stride, self.padding = stride, padding
        self.weight = self.add_param("weight", _uniform(rng, c_in * kernel, (c_out, c_in, kernel)))
        self.bias = self.add_param("bias", _uniform(rng, c_in * kernel, (c_out,)))

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv1d(x, self.weight, self.bias, self.stride, self.padding)


class BatchNorm1d(Module):
    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.momentum, self.eps = momentum, eps
        self.gamma = self.add_param("gamma", np.ones(channels))
        self.beta = self.add_param("beta", np.zeros(channels))
        self.running_mean = self.add_buffer("running_mean", np.zeros(channels))
        self.running_var = self.add_buffer("running_var", np.ones(channels))

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return F.batchnorm1d(x, self.gamma, self.beta, self.running_mean, self.running_var,
                             training, self.momentum, self.eps)


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        super().__init__()
        self.weight = self.add_param("weight", _uniform(rng, in_dim, (out_dim, in_dim)))
        self.bias = self.add_param("bias", _uniform(rng, in_dim, (out_dim,)))

    def __call__(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)
