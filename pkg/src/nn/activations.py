import numpy as np
from scipy.special import expit, softmax as _softmax

from src.core.errors import ConfigError

ACTIVATIONS = ('linear', 'sigmoid', 'tanh', 'relu', 'leaky_relu')
LEAKY_SLOPE = 0.1


def activation(kind: str, x):
    """Apply an activation elementwise; works on scalars and arrays."""
    if kind == 'linear':
        return x
    if kind == 'sigmoid':
        return expit(x)
    if kind == 'tanh':
        return np.tanh(x)
    if kind == 'relu':
        return np.maximum(0, x)
    if kind == 'leaky_relu':
        return np.maximum(LEAKY_SLOPE * x, x)
    if kind == 'softmax':
        return softmax(x)
    raise ConfigError(f"unknown activation '{kind}'")


def activation_grad(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation given pre-activation z and output a."""
    if kind == 'linear':
        return np.ones_like(z)
    if kind == 'sigmoid':
        return a * (1 - a)
    if kind == 'tanh':
        return 1 - a * a
    if kind == 'relu':
        return (z > 0).astype(z.dtype)
    if kind == 'leaky_relu':
        return np.where(z > 0, 1, LEAKY_SLOPE).astype(z.dtype)
    raise ConfigError(f"no elementwise derivative for activation '{kind}'")


def softmax(x: np.ndarray) -> np.ndarray:
    return _softmax(x, axis=-1)
