"""RUL targets, health-state labels, PCA degradation views and prediction smoothing."""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError, DegenerateData, LifeTooShort, NegativeRul, TooShort, ShapeMismatch

logger = logging.getLogger(__name__)

N_SETTINGS = 3
N_SENSORS = 21

SENSOR_NAMES = (
    'T2', 'T24', 'T30', 'T50', 'P2', 'P15', 'P30', 'Nf', 'Nc', 'epr', 'Ps30',
    'phi', 'NRf', 'NRc', 'BPR', 'farB', 'htBleed', 'Nf_dmd', 'PCNfR_dmd', 'W31', 'W32',
)


@dataclass
class RunToFailureUnit:
    """One machine's life: cycles numbered from 1, with settings and sensor readings."""
    unit_id: int
    settings: np.ndarray  # cycles x 3
    sensors: np.ndarray   # cycles x n_sensors
    cycles: np.ndarray = field(default=None)

    def __post_init__(self):
        self.settings = np.asarray(self.settings, dtype=np.float64)
        self.sensors = np.asarray(self.sensors, dtype=np.float64)
        if self.cycles is None:
            self.cycles = np.arange(1, self.settings.shape[0] + 1)
        self.cycles = np.asarray(self.cycles, dtype=np.int64)
        if self.settings.shape[0] != self.sensors.shape[0] or self.settings.shape[0] != self.cycles.size:
            raise ShapeMismatch(f"unit {self.unit_id}: settings, sensors and cycles disagree in length")

    def __len__(self) -> int:
        return self.cycles.size


class RulKind(str, Enum):
    LINEAR = 'linear'
    PIECEWISE = 'piecewise'
    POLYNOMIAL = 'polynomial'


@dataclass(frozen=True)
class RulModel:
    kind: RulKind = RulKind.LINEAR
    knee: int = 125
    p: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', RulKind(self.kind))
        if self.knee < 1:
            raise ConfigError(f"knee must be >= 1, got {self.knee}")
        if not self.p > 1:
            raise ConfigError(f"polynomial exponent must be > 1, got {self.p}")


class HealthLabel(int, Enum):
    HEALTHY = 0
    FAULTY = 1
    UNLABELED = -1


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray  # rows, orthonormal, by explained variance descending
    explained_variance: np.ndarray

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        total = self.explained_variance.sum()
        if total == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / total


def rul_target(life_length: int, model: RulModel = RulModel()) -> np.ndarray:
    """Target RUL at t = 0..L-1 under the chosen degradation model."""
    if life_length < 2:
        raise TooShort(f"life length must be >= 2, got {life_length}")
    t = np.arange(life_length, dtype=np.float64)
    L = float(life_length)
    if model.kind is RulKind.LINEAR:
        return L - t
    if model.kind is RulKind.PIECEWISE:
        return np.minimum(float(model.knee), L - t)
    return L * (1.0 - (t / L) ** model.p)


def rul_from_failure_time(t_f: float, t_c: float) -> float:
    if t_f < t_c:
        raise NegativeRul(f"failure time {t_f} precedes current time {t_c}")
    return t_f - t_c


def health_labels(snapshot_count: int, k: int = 80) -> np.ndarray:
    """First k snapshots healthy, last k faulty, the rest unlabeled."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if snapshot_count < 2 * k:
        raise LifeTooShort(f"{snapshot_count} snapshots cannot hold {k} healthy and {k} faulty")
    labels = np.full(snapshot_count, HealthLabel.UNLABELED.value, dtype=np.int64)
    labels[:k] = HealthLabel.HEALTHY.value
    labels[-k:] = HealthLabel.FAULTY.value
    return labels


def pca_fit(rows: np.ndarray, standardize: bool = True) -> PcaModel:
    """Fit PCA via the symmetric eigensolver of the covariance matrix."""
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise DegenerateData(f"PCA needs at least 2 rows and 1 column, got shape {X.shape}")
    mean = X.mean(axis=0)
    scale = np.ones(X.shape[1])
    if standardize:
        std = X.std(axis=0, ddof=1)
        constant = std == 0
        if np.any(constant):
            logger.warning(f"{int(constant.sum())} constant column(s) left unscaled")
        scale = np.where(constant, 1.0, std)
    Z = (X - mean) / scale
    cov = Z.T @ Z / (X.shape[0] - 1)
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1]
    values = np.clip(values[order], 0.0, None)
    components = vectors[:, order].T
    # deterministic sign: largest-magnitude loading is positive
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    components = components * signs[:, None]
    return PcaModel(mean=mean, scale=scale, components=components, explained_variance=values)


def pca_transform(model: PcaModel, rows: np.ndarray, components: Optional[int] = None) -> np.ndarray:
    X = np.asarray(rows, dtype=np.float64)
    m = model.components.shape[0] if components is None else components
    if not 1 <= m <= model.components.shape[0]:
        raise ConfigError(f"components must be in [1, {model.components.shape[0]}], got {m}")
    if X.ndim != 2 or X.shape[1] != model.mean.size:
        raise ShapeMismatch(f"rows have shape {X.shape}, model expects {model.mean.size} columns")
    return ((X - model.mean) / model.scale) @ model.components[:m].T


def pca_inverse_transform(model: PcaModel, projected: np.ndarray) -> np.ndarray:
    P = np.asarray(projected, dtype=np.float64)
    m = P.shape[1]
    return (P @ model.components[:m]) * model.scale + model.mean


def rul_smooth(predictions: Sequence[float], degree: int = 3) -> np.ndarray:
    """Least-squares polynomial fit of the predictions, evaluated at each cycle."""
    y = np.asarray(predictions, dtype=np.float64)
    if degree < 0:
        raise ConfigError("degree must be non-negative")
    if y.size <= degree:
        raise TooShort(f"{y.size} predictions cannot fit a degree-{degree} polynomial")
    t = np.arange(y.size, dtype=np.float64)
    poly = np.polynomial.Polynomial.fit(t, y, degree)
    return poly(t)


def total_variation(series: Sequence[float]) -> float:
    """Sum of absolute differences between consecutive values."""
    return float(np.sum(np.abs(np.diff(np.asarray(series, dtype=np.float64)))))


def unit_matrix(unit: RunToFailureUnit) -> np.ndarray:
    """Cycles x (settings + sensors) input matrix."""
    return np.hstack([unit.settings, unit.sensors])


def make_sequences(rows: np.ndarray, length: int, mask_value: float = -10.0) -> np.ndarray:
    """One window per row ending at that row, front-padded with the mask value.

    Returns an array of shape (n_rows, length, n_features).
    """
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch("rows must be a 2-D array")
    if length < 1:
        raise ConfigError("sequence length must be >= 1")
    n, d = X.shape
    padded = np.vstack([np.full((length - 1, d), mask_value), X])
    windows = np.lib.stride_tricks.sliding_window_view(padded, (length, d))[:, 0]
    return np.ascontiguousarray(windows[:n])


def health_dataset(units: List[RunToFailureUnit], k: int = 25):
    """Rows and binary labels from the first/last k cycles of every unit."""
    rows, labels = [], []
    for unit in units:
        lab = health_labels(len(unit), k)
        keep = lab != HealthLabel.UNLABELED.value
        rows.append(unit_matrix(unit)[keep])
        labels.append(lab[keep])
    return np.vstack(rows), np.concatenate(labels)
