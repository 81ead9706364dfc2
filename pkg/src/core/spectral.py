"""Frequency-domain and time-frequency transforms.

Covers the discrete Fourier transform (naive and fast), the Daubechies-4
filter bank with periodized boundaries, Morlet continuous wavelet
scaleograms, and bearing defect frequencies.
"""
import csv
import logging
import math
import warnings
import concurrent.futures
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Union

import cv2
import numpy as np
import pywt
from PIL import Image
from scipy.signal import fftconvolve

from .errors import ConfigError, EmptyScales, NotPowerOfTwo, ShapeMismatch, TooManyLevels, TooSmall, EmptyInput
from .signals import normalize_minmax

logger = logging.getLogger(__name__)

WAVELET = 'db4'


@dataclass(frozen=True)
class Spectrum:
    bins: np.ndarray
    resolution_hz: float

    def __len__(self) -> int:
        return self.bins.size


@dataclass(frozen=True)
class WaveletDecomposition:
    levels: int
    approximation: np.ndarray
    details: List[np.ndarray]  # deepest level first
    wavelet_name: str = WAVELET


@dataclass(frozen=True)
class Scaleogram:
    scales: np.ndarray
    times: np.ndarray
    magnitudes: np.ndarray  # len(scales) x len(times)

    @property
    def shape(self):
        return self.magnitudes.shape


def _as_real_1d(signal) -> np.ndarray:
    x = np.asarray(getattr(signal, 'samples', signal), dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptyInput("expected a non-empty 1-D signal")
    return x


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2_pad(signal) -> np.ndarray:
    """Zero-pad a signal up to the next power-of-two length."""
    x = _as_real_1d(signal)
    n = 1 << (x.size - 1).bit_length()
    return np.pad(x, (0, n - x.size))


def dft(signal, sample_rate_hz: float = 1.0) -> Spectrum:
    """Direct O(n^2) discrete Fourier transform."""
    x = _as_real_1d(signal)
    n = x.size
    t = np.arange(n)
    # reduce k*t modulo n before scaling so the phase stays exact for large n
    phase = np.outer(t, t) % n
    kernel = np.exp(-2j * np.pi * phase / n)
    return Spectrum(kernel @ x, sample_rate_hz / n)


def fft(signal, sample_rate_hz: float = 1.0) -> Spectrum:
    """Fast Fourier transform of a power-of-two length signal."""
    x = _as_real_1d(signal)
    if not is_power_of_two(x.size):
        raise NotPowerOfTwo(f"fft needs a power-of-two length, got {x.size}")
    return Spectrum(np.fft.fft(x), sample_rate_hz / x.size)


def frequency_axis(spectrum: Spectrum) -> np.ndarray:
    return np.arange(len(spectrum)) * spectrum.resolution_hz


def magnitude_spectrum(spectrum: Spectrum) -> np.ndarray:
    """One-sided magnitudes (bins 0..n//2)."""
    return np.abs(spectrum.bins[:len(spectrum) // 2 + 1])


def max_levels(length: int) -> int:
    return int(math.floor(math.log2(length))) if length >= 1 else 0


def dwt_decompose(signal, wavelet: str = WAVELET, levels: int = 1) -> WaveletDecomposition:
    """Multi-level filter-bank decomposition with periodized boundaries."""
    x = _as_real_1d(signal)
    if wavelet != WAVELET:
        raise ConfigError(f"unsupported wavelet '{wavelet}', only {WAVELET} is available")
    if levels < 1 or levels > max_levels(x.size):
        raise TooManyLevels(f"{levels} levels requested for length {x.size} (max {max_levels(x.size)})")
    with warnings.catch_warnings():
        # pywt warns once the level exceeds what the filter length makes "useful"
        warnings.simplefilter('ignore', UserWarning)
        coeffs = pywt.wavedec(x, wavelet, mode='periodization', level=levels)
    return WaveletDecomposition(levels=levels, approximation=coeffs[0],
                                details=list(coeffs[1:]), wavelet_name=wavelet)


def dwt_reconstruct(decomposition: WaveletDecomposition) -> np.ndarray:
    """Inverse filter bank of dwt_decompose."""
    approx = np.asarray(decomposition.approximation, dtype=np.float64)
    details = [np.asarray(d, dtype=np.float64) for d in decomposition.details]
    if len(details) != decomposition.levels or decomposition.levels < 1:
        raise ShapeMismatch(f"expected {decomposition.levels} detail arrays, got {len(details)}")
    if details[0].size != approx.size:
        raise ShapeMismatch("deepest detail and approximation lengths differ")
    for coarse, fine in zip(details, details[1:]):
        if fine.size not in (2 * coarse.size, 2 * coarse.size - 1):
            raise ShapeMismatch(f"detail length {fine.size} does not follow {coarse.size}")
    return pywt.waverec([approx] + details, decomposition.wavelet_name, mode='periodization')


def morlet(u: np.ndarray, omega0: float = 6.0) -> np.ndarray:
    return np.pi ** -0.25 * np.exp(1j * omega0 * u) * np.exp(-0.5 * u * u)


def log_scales(n: int, smin: float, smax: float) -> np.ndarray:
    """Logarithmically spaced ascending scales."""
    return np.geomspace(smin, smax, n)


def _cwt_row(x: np.ndarray, scale: float, omega0: float) -> np.ndarray:
    half = int(math.floor(4.0 * scale))
    k = np.arange(-half, half + 1, dtype=np.float64)
    weights = np.conj(morlet(k / scale, omega0)) / math.sqrt(scale)
    # full[tau + half] = sum_k x[tau + k] * weights[k]
    full = fftconvolve(x, weights[::-1], mode='full')
    return np.abs(full[half:half + x.size])


def cwt(signal, scales: Sequence[float], omega0: float = 6.0, workers: int = 1) -> Scaleogram:
    """Morlet continuous wavelet transform magnitudes over a +-4s support window."""
    x = _as_real_1d(signal)
    scales = np.asarray(scales, dtype=np.float64)
    if scales.size == 0:
        raise EmptyScales("at least one scale is required")
    if np.any(scales <= 0) or np.any(np.diff(scales) <= 0):
        raise ConfigError("scales must be positive and strictly ascending")
    if x.size < 8:
        raise TooSmall(f"cwt needs at least 8 samples, got {x.size}")

    magnitudes = np.empty((scales.size, x.size))
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(_cwt_row, x, s, omega0): i for i, s in enumerate(scales)}
            for future in concurrent.futures.as_completed(futures):
                magnitudes[futures[future]] = future.result()
    else:
        for i, s in enumerate(scales):
            magnitudes[i] = _cwt_row(x, s, omega0)
    return Scaleogram(scales=scales, times=np.arange(x.size), magnitudes=magnitudes)


def dataset_scales(signal_length: int, n_scales: int = 128) -> np.ndarray:
    """Scale grid used for scaleogram datasets: 2 .. signal_length/4."""
    return log_scales(n_scales, 2.0, signal_length / 4.0)


def _resample_axis(values: np.ndarray, out_len: int) -> np.ndarray:
    in_len = values.size
    pos = (np.arange(out_len) + 0.5) * in_len / out_len - 0.5
    return np.interp(np.clip(pos, 0, in_len - 1), np.arange(in_len), values)


def scaleogram_resize(s: Scaleogram, out_h: int = 128, out_w: int = 128) -> Scaleogram:
    """Bilinear resize of a scaleogram onto an out_h x out_w grid."""
    h, w = s.magnitudes.shape
    if h < 2 or w < 2:
        raise TooSmall(f"scaleogram {h}x{w} is smaller than 2x2")
    if (out_h, out_w) == (h, w):
        return Scaleogram(s.scales.copy(), s.times.copy(), s.magnitudes.copy())
    resized = cv2.resize(np.ascontiguousarray(s.magnitudes, dtype=np.float64), (out_w, out_h),
                         interpolation=cv2.INTER_LINEAR)
    return Scaleogram(scales=_resample_axis(s.scales, out_h),
                      times=_resample_axis(np.asarray(s.times, dtype=np.float64), out_w),
                      magnitudes=resized)


def scaleogram_to_pgm(s: Scaleogram, path: Union[str, Path]) -> Path:
    """Write an 8-bit binary PGM (row = scale) plus a sidecar CSV of scales."""
    path = Path(path)
    pixels = np.round(normalize_minmax(s.magnitudes, flat_value=0.0) * 255).astype(np.uint8)
    Image.fromarray(pixels, mode='L').save(path, format='PPM')
    sidecar = path.with_suffix('.scales.csv')
    with open(sidecar, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['row', 'scale'])
        for i, scale in enumerate(s.scales.tolist()):
            writer.writerow([i, repr(scale)])
    logger.info(f"Scaleogram written to {path}")
    return sidecar


class Defect(str, Enum):
    INNER_RING = 'inner_ring'
    OUTER_RING = 'outer_ring'
    CAGE_TRAIN = 'cage_train'
    ROLLING_ELEMENT = 'rolling_element'


# Defect frequency multipliers per shaft revolution (per second)
FAULT_MULTIPLIERS = {
    Defect.INNER_RING: 5.4152,
    Defect.OUTER_RING: 3.5848,
    Defect.CAGE_TRAIN: 0.3983,
    Defect.ROLLING_ELEMENT: 4.7135,
}

# Test bearing dimensions in mm. Metadata only: the pitch diameter as
# published does not agree with the other dimensions.
BEARING_GEOMETRY_MM = {
    'inner_diameter': 25.00,
    'outside_diameter': 52.00,
    'thickness': 15.00,
    'pitch_diameter': 8.03,
}


def fault_frequency(defect: Union[Defect, str], rpm: float) -> float:
    """Characteristic defect frequency in Hz for a shaft speed in rpm."""
    if not rpm > 0:
        raise ConfigError(f"rpm must be positive, got {rpm}")
    return FAULT_MULTIPLIERS[Defect(defect)] * rpm / 60.0


def peak_bin_near(spectrum: Spectrum, frequency_hz: float, tolerance_bins: int = 2) -> Optional[int]:
    """Index of the strongest local magnitude maximum within +-tolerance_bins of a frequency."""
    mags = magnitude_spectrum(spectrum)
    centre = int(round(frequency_hz / spectrum.resolution_hz))
    lo = max(centre - tolerance_bins, 1)
    hi = min(centre + tolerance_bins, mags.size - 2)
    peaks = [k for k in range(lo, hi + 1) if mags[k] >= mags[k - 1] and mags[k] >= mags[k + 1]]
    if not peaks:
        return None
    return max(peaks, key=lambda k: mags[k])
