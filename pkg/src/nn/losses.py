"""Loss functions and their gradients with respect to the output pre-activation.

Each loss is paired with the network's output activation: MSE with a linear
output, BCE with sigmoid, CCE with softmax. The pairing makes the fused
gradient dL/dz a simple difference.
"""
import numpy as np

from src.core.errors import ConfigError, ShapeMismatch

LOSSES = ('mse', 'bce', 'cce')
OUTPUT_ACTIVATION = {'mse': 'linear', 'bce': 'sigmoid', 'cce': 'softmax'}
EPSILON = 1e-12


def _check(predictions: np.ndarray, targets: np.ndarray):
    predictions = np.asarray(predictions)
    targets = np.asarray(targets, dtype=predictions.dtype if predictions.dtype.kind == 'f' else np.float64)
    if predictions.shape != targets.shape:
        raise ShapeMismatch(f"predictions {predictions.shape} and targets {targets.shape} differ")
    return predictions, targets


def loss(kind: str, predictions: np.ndarray, targets: np.ndarray) -> float:
    p, y = _check(predictions, targets)
    if kind == 'mse':
        return float(np.mean((y - p) ** 2))
    if kind == 'bce':
        p = np.clip(p, EPSILON, 1 - EPSILON)
        return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
    if kind == 'cce':
        p = np.clip(p, EPSILON, 1.0)
        n = p.shape[0] if p.ndim > 1 else 1
        return float(-np.sum(y * np.log(p)) / n)
    raise ConfigError(f"unknown loss '{kind}'")


def output_gradient(kind: str, outputs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """dL/dz for the pre-activation z of the output layer."""
    p, y = _check(outputs, targets)
    if kind == 'mse':
        return 2.0 * (p - y) / p.size
    if kind == 'bce':
        return (p - y) / p.size
    if kind == 'cce':
        n = p.shape[0] if p.ndim > 1 else 1
        return (p - y) / n
    raise ConfigError(f"unknown loss '{kind}'")
