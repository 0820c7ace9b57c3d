"""Adam with bias correction and decoupled weight decay."""

from __future__ import annotations

import numpy as np

from .tensor import InvalidStateError, Parameter


class Adam:
    """``p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)``."""

    def __init__(
        self,
        params: dict[str, Parameter],
        lr: float = 3e-4,
        betas: tuple[float, float] = (0.9, 0.99),
        eps: float = 1e-8,
        weight_decay: float = 5e-4,
    ):
        beta1, beta2 = betas
        if not (0 < beta1 < 1 and 0 < beta2 < 1):
            raise ValueError(f"betas must lie in (0, 1), got {betas}")
        if lr <= 0 or eps <= 0 or weight_decay < 0:
            raise ValueError("lr and eps must be positive, weight_decay non-negative")
        self.params = params
        self.lr, self.beta1, self.beta2 = lr, beta1, beta2
        self.eps, self.weight_decay = eps, weight_decay
        self.steps = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self):
        missing = [k for k, p in self.params.items() if p.grad is None]
        if missing:
            raise InvalidStateError(f"no gradient for parameters {missing}")
        self.steps += 1
        c1 = 1 - self.beta1**self.steps
        c2 = 1 - self.beta2**self.steps
        for k, p in self.params.items():
            g = p.grad
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            update = (m / c1) / (np.sqrt(v / c2) + self.eps)
            p.data = p.data - self.lr * (update + self.weight_decay * p.data)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {"steps": np.array(self.steps)}
        state.update({f"m.{k}": v.copy() for k, v in self.m.items()})
        state.update({f"v.{k}": v.copy() for k, v in self.v.items()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]):
        self.steps = int(np.asarray(state["steps"]).reshape(-1)[0])
        for k in self.params:
            self.m[k] = np.array(state[f"m.{k}"], dtype=np.float64)
            self.v[k] = np.array(state[f"v.{k}"], dtype=np.float64)
