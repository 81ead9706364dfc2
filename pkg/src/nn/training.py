"""Mini-batch training loop with per-epoch reporting."""
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from src.core.errors import ConfigError, DivergenceDetected, EmptyInput, ShapeMismatch
from .layers import Dropout
from .network import Network
from .optimizers import make_optimizer

logger = logging.getLogger(__name__)

REPORT_FIELDS = ('epoch', 'train_loss', 'val_loss', 'train_metric', 'val_metric')


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.001
    optimizer: str = 'adam'
    validation_split: float = 0.15
    seed: int = 0
    dropout: Optional[float] = None  # overrides every Dropout layer's rate when set

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.validation_split < 1:
            raise ConfigError(f"validation_split must be in [0, 1), got {self.validation_split}")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.optimizer.lower() not in ('sgd', 'adam'):
            raise ConfigError(f"unknown optimizer '{self.optimizer}'")
        if self.dropout is not None and not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    train_metric: float
    val_metric: float


@dataclass
class TrainReport:
    metric_name: str
    epochs: List[EpochRecord] = field(default_factory=list)

    @property
    def final(self) -> EpochRecord:
        return self.epochs[-1]

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(REPORT_FIELDS)
            for record in self.epochs:
                writer.writerow([record.epoch] + [repr(float(getattr(record, k))) for k in REPORT_FIELDS[1:]])
        logger.info(f"Training report written to {path}")


def encode_targets(loss: str, labels: np.ndarray, classes: Optional[int] = None) -> np.ndarray:
    """Network targets from plain labels: one-hot for CCE, a column for BCE/MSE."""
    labels = np.asarray(labels)
    if loss == 'cce':
        k = int(labels.max()) + 1 if classes is None else classes
        onehot = np.zeros((labels.size, k))
        onehot[np.arange(labels.size), labels.astype(np.int64)] = 1.0
        return onehot
    return labels.astype(np.float64).reshape(-1, 1) if labels.ndim == 1 else labels.astype(np.float64)


def decode_predictions(loss: str, outputs: np.ndarray) -> np.ndarray:
    """Class labels (classification) or values (regression) from network outputs."""
    if loss == 'cce':
        return np.argmax(outputs, axis=1)
    if loss == 'bce':
        return (outputs[:, 0] >= 0.5).astype(np.int64)
    return outputs[:, 0] if outputs.ndim == 2 and outputs.shape[1] == 1 else outputs


def batch_metric(loss: str, outputs: np.ndarray, targets: np.ndarray) -> float:
    """Accuracy for classification losses, mean absolute error for MSE."""
    if loss == 'cce':
        return float(np.mean(np.argmax(outputs, axis=1) == np.argmax(targets, axis=1)))
    if loss == 'bce':
        return float(np.mean((outputs >= 0.5) == (targets >= 0.5)))
    return float(np.mean(np.abs(outputs - targets)))


def split_validation(x: np.ndarray, y: np.ndarray, fraction: float, seed: int = 0) -> Tuple:
    """Hold out a seeded random ``fraction`` of the samples for validation."""
    n_val = int(math.floor(x.shape[0] * fraction))
    if n_val == 0:
        return x, y, x[:0], y[:0]
    order = np.random.default_rng(seed).permutation(x.shape[0])
    train_idx, val_idx = np.sort(order[n_val:]), np.sort(order[:n_val])
    return x[train_idx], y[train_idx], x[val_idx], y[val_idx]


def _evaluate(network: Network, x: np.ndarray, y: np.ndarray, batch_size: int) -> Tuple[float, float]:
    if x.shape[0] == 0:
        return math.nan, math.nan
    outputs = network.predict(x, batch_size=max(batch_size, 256))
    return network.loss_value(outputs, y), batch_metric(network.loss, outputs, y)


def train(network: Network, x: np.ndarray, y: np.ndarray, config: TrainConfig) -> TrainReport:
    """Shuffled mini-batch gradient descent; reproducible for a fixed seed."""
    x = np.asarray(x, dtype=network.dtype)
    y = np.asarray(y, dtype=network.dtype)
    if x.shape[0] == 0:
        raise EmptyInput("training set is empty")
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"{x.shape[0]} inputs but {y.shape[0]} targets")
    if config.dropout is not None:
        for layer in network.layers:
            if isinstance(layer, Dropout):
                layer.rate = config.dropout

    x_train, y_train, x_val, y_val = split_validation(x, y, config.validation_split, config.seed)
    if x_train.shape[0] == 0:
        raise EmptyInput("validation split leaves no training samples")
    network.fit_normalization(x_train)
    network.reseed(config.seed)
    optimizer = make_optimizer(config.optimizer, config.learning_rate)
    rng = np.random.default_rng(config.seed)
    params = network.parameters()
    report = TrainReport(metric_name='accuracy' if network.loss in ('bce', 'cce') else 'mae')
    n = x_train.shape[0]

    logger.info(f"Training on {n} samples ({x_val.shape[0]} validation) for {config.epochs} epochs "
                f"with {config.optimizer}, lr={config.learning_rate}")
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        total_metric = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            outputs = network.forward(xb, training=True)
            batch_loss = network.loss_value(outputs, yb)
            if not math.isfinite(batch_loss):
                logger.error(f"Loss became {batch_loss} in epoch {epoch}")
                raise DivergenceDetected(epoch, batch_loss)
            grads = network.backward(outputs, yb)
            optimizer.step(params, grads)
            total_loss += batch_loss * idx.size
            total_metric += batch_metric(network.loss, outputs, yb) * idx.size

        val_loss, val_metric = _evaluate(network, x_val, y_val, config.batch_size)
        record = EpochRecord(epoch, total_loss / n, val_loss, total_metric / n, val_metric)
        report.epochs.append(record)
        logger.info(f"Epoch {epoch}/{config.epochs}: loss={record.train_loss:.5f} "
                    f"{report.metric_name}={record.train_metric:.4f} val_loss={val_loss:.5f} "
                    f"val_{report.metric_name}={val_metric:.4f}")
    return report
