from typing import Dict

import numpy as np

from src.core.errors import ConfigError


class SGD:
    def __init__(self, learning_rate: float = 0.01):
        self.learning_rate = learning_rate

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        for key, value in params.items():
            value -= (self.learning_rate * grads[key]).astype(value.dtype)


class Adam:
    def __init__(self, learning_rate: float = 0.001, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for key, value in params.items():
            g = grads[key]
            m = self.m.get(key)
            if m is None:
                m = self.m[key] = np.zeros_like(value)
                self.v[key] = np.zeros_like(value)
            v = self.v[key]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            value -= (self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)).astype(value.dtype)


OPTIMIZERS = {'sgd': SGD, 'adam': Adam}


def make_optimizer(name: str, learning_rate: float):
    try:
        return OPTIMIZERS[name.lower()](learning_rate=learning_rate)
    except KeyError:
        raise ConfigError(f"unknown optimizer '{name}'") from None
