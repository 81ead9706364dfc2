"""Classic and trigonometric health indicators and cumulative descriptors."""
import logging
import concurrent.futures
from dataclasses import dataclass, asdict
from typing import Callable, Dict, Sequence

import numpy as np

from .errors import EmptyInput, TooShort, ZeroEnergy, ZeroVariance
from .signals import Signal, savitzky_golay
from .spectral import dwt_decompose

logger = logging.getLogger(__name__)

TRIG_LEVELS = 4

FEATURE_NAMES = (
    'entropy', 'energy', 'rms', 'skewness', 'kurtosis', 'upper_bound', 'std_asinh', 'std_atan',
)


@dataclass(frozen=True)
class FeatureVector:
    entropy: float
    energy: float
    rms: float
    skewness: float
    kurtosis: float
    upper_bound: float
    std_asinh: float
    std_atan: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class FeatureSeries:
    feature_name: str
    values: np.ndarray  # ordered by snapshot time

    def __len__(self) -> int:
        return self.values.size


def _values(x) -> np.ndarray:
    x = np.asarray(getattr(x, 'samples', x), dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptyInput("feature input must be a non-empty 1-D sequence")
    return x


def energy(x) -> float:
    x = _values(x)
    return float(np.dot(x, x))


def rms(x) -> float:
    x = _values(x)
    return float(np.sqrt(energy(x) / x.size))


def _centered_moment_ratio(x, power: int) -> float:
    x = _values(x)
    n = x.size
    if n < 2:
        raise TooShort("at least two samples are required")
    sigma = np.std(x, ddof=1)
    if sigma == 0:
        raise ZeroVariance("input has zero variance")
    return float(np.sum((x - x.mean()) ** power) / ((n - 1) * sigma ** power))


def skewness(x) -> float:
    return _centered_moment_ratio(x, 3)


def kurtosis(x) -> float:
    return _centered_moment_ratio(x, 4)


def upper_bound(x) -> float:
    x = _values(x)
    if x.size < 2:
        raise TooShort("upper_bound needs at least two samples")
    hi, lo = x.max(), x.min()
    return float(hi + 0.5 * (hi - lo) / (x.size - 1))


def entropy(x) -> float:
    """Shannon energy entropy of the normalized squared samples."""
    x = _values(x)
    total = energy(x)
    if total == 0:
        raise ZeroEnergy("entropy is undefined for an all-zero input")
    p = x * x / total
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _sample_std(values: np.ndarray) -> float:
    if values.size < 2:
        raise TooShort("standard deviation needs at least two values")
    return float(np.std(values, ddof=1))


def std_asinh(x) -> float:
    return _sample_std(np.arcsinh(_values(x)))


def std_atan(x) -> float:
    return _sample_std(np.arctan(_values(x)))


def trig_coefficients(snapshot, use_details: bool = False) -> np.ndarray:
    """Level-4 db4 coefficients the trigonometric features are computed on."""
    decomposition = dwt_decompose(snapshot, 'db4', TRIG_LEVELS)
    if use_details:
        return decomposition.details[0]
    return decomposition.approximation


def extract_trig_features(snapshot, use_details: bool = False) -> Dict[str, float]:
    coeffs = trig_coefficients(snapshot, use_details)
    return {'std_asinh': std_asinh(coeffs), 'std_atan': std_atan(coeffs)}


def _safe(fn: Callable[[np.ndarray], float], x: np.ndarray, name: str) -> float:
    try:
        return fn(x)
    except (ZeroVariance, ZeroEnergy) as e:
        logger.warning(f"Feature {name} undefined for snapshot ({e}), using 0")
        return 0.0


def extract_features(snapshot, use_details: bool = False) -> FeatureVector:
    """Full feature vector of a snapshot; undefined moments on flat input map to 0."""
    x = _values(snapshot)
    trig = extract_trig_features(x, use_details)
    return FeatureVector(
        entropy=_safe(entropy, x, 'entropy'),
        energy=energy(x),
        rms=rms(x),
        skewness=_safe(skewness, x, 'skewness'),
        kurtosis=_safe(kurtosis, x, 'kurtosis'),
        upper_bound=upper_bound(x),
        std_asinh=trig['std_asinh'],
        std_atan=trig['std_atan'],
    )


def feature_series(snapshots: Sequence[Signal], use_details: bool = False,
                   workers: int = 1) -> Dict[str, FeatureSeries]:
    """Per-feature series over a unit's snapshots, in snapshot order."""
    if not snapshots:
        raise EmptyInput("no snapshots given")
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            vectors = list(executor.map(lambda s: extract_features(s, use_details), snapshots))
    else:
        vectors = [extract_features(s, use_details) for s in snapshots]
    logger.debug(f"Extracted features from {len(vectors)} snapshots")
    return {
        name: FeatureSeries(name, np.array([getattr(v, name) for v in vectors]))
        for name in FEATURE_NAMES
    }


def cumulative(series: FeatureSeries) -> FeatureSeries:
    """Running total normalized as S/sqrt(|S|); zero where the running sum is 0."""
    values = np.asarray(series.values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("cumulative of an empty series")
    s = np.cumsum(values)
    out = np.zeros_like(s)
    nz = s != 0
    out[nz] = s[nz] / np.sqrt(np.abs(s[nz]))
    return FeatureSeries(f"C-{series.feature_name}", out)


def smooth(series: FeatureSeries, window: int = 51, poly_order: int = 3) -> FeatureSeries:
    # shorter series get the largest odd window that fits
    window = min(window, series.values.size if series.values.size % 2 else series.values.size - 1)
    poly_order = min(poly_order, window - 1)
    return FeatureSeries(series.feature_name, savitzky_golay(series.values, window, poly_order))


def smooth_then_cumulate(series: FeatureSeries, window: int = 51, poly_order: int = 3) -> FeatureSeries:
    return cumulative(smooth(series, window, poly_order))


def cumulate_then_smooth(series: FeatureSeries, window: int = 51, poly_order: int = 3) -> FeatureSeries:
    return smooth(cumulative(series), window, poly_order)


def process_series(series: FeatureSeries, smoothing: bool, cumulate: bool, order: str = 'smooth-first',
                   window: int = 51, poly_order: int = 3) -> FeatureSeries:
    """Apply the optional smoothing / cumulative steps in the requested order."""
    if smoothing and cumulate:
        if order == 'smooth-first':
            return smooth_then_cumulate(series, window, poly_order)
        return cumulate_then_smooth(series, window, poly_order)
    if smoothing:
        return smooth(series, window, poly_order)
    if cumulate:
        return cumulative(series)
    return series
