"""Signal representation, segmentation, signal-to-image conversion and smoothing."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

import numpy as np
from scipy.signal import savgol_filter

from .errors import BadWindow, ConfigError, EmptyInput, LengthMismatch, ShapeMismatch, ToolkitError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Signal:
    """A uniformly sampled real-valued time series."""
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise EmptyInput("Signal samples must be a non-empty 1-D sequence")
        if not self.sample_rate_hz > 0:
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise ShapeMismatch("Signal samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class SignalImage:
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)  # height x width, row-major, in [0, 1]


def image_count(signal_length: int, image_pixels: int) -> int:
    """Number of whole images that fit into a signal of the given length."""
    if image_pixels < 1:
        raise ConfigError("image_pixels must be >= 1")
    return max(signal_length, 0) // image_pixels


def segment(signal: Union[Signal, np.ndarray], chunk_len: int) -> List[np.ndarray]:
    """Split into consecutive non-overlapping chunks, dropping the remainder."""
    if chunk_len < 1:
        raise ConfigError("chunk_len must be >= 1")
    samples = signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    count = image_count(samples.size, chunk_len)
    return [samples[i * chunk_len:(i + 1) * chunk_len] for i in range(count)]


def normalize_minmax(values: np.ndarray, flat_value: float = 0.5) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant array maps to ``flat_value``."""
    values = np.asarray(values, dtype=np.float64)
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.full(values.shape, flat_value)
    return (values - lo) / (hi - lo)


def signal_to_image(chunk: np.ndarray, side: int = 64) -> SignalImage:
    """Reshape a chunk of side*side samples row-major and min-max scale it."""
    chunk = np.asarray(chunk, dtype=np.float64)
    if chunk.ndim != 1 or chunk.size != side * side:
        raise LengthMismatch(f"chunk has {chunk.size} samples, expected {side * side}")
    pixels = normalize_minmax(chunk.reshape(side, side))
    return SignalImage(width=side, height=side, pixels=pixels)


def signal_to_images(signal: Union[Signal, np.ndarray], side: int = 64) -> np.ndarray:
    """Convert a whole signal into a stack of images of shape (count, side, side)."""
    chunks = segment(signal, side * side)
    if not chunks:
        return np.empty((0, side, side))
    return np.stack([signal_to_image(c, side).pixels for c in chunks])


def savitzky_golay(series: np.ndarray, window: int, poly_order: int, mode: str = 'interp') -> np.ndarray:
    """Least-squares local polynomial smoothing with length-preserving edges.

    ``mode='interp'`` fits the edge windows directly, so polynomials of degree
    up to ``poly_order`` pass through unchanged; ``mode='mirror'`` pads with the
    reflected series instead.
    """
    series = np.asarray(series, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise BadWindow(f"window must be odd and positive, got {window}")
    if poly_order < 0 or poly_order >= window:
        raise BadWindow(f"poly_order must be in [0, window), got {poly_order}")
    if series.ndim != 1 or series.size < window:
        raise BadWindow(f"series of length {series.size} is shorter than window {window}")
    if mode not in ('interp', 'mirror'):
        raise BadWindow(f"unsupported edge mode '{mode}'")
    return savgol_filter(series, window, poly_order, mode=mode)


def read_signal_csv(path: Union[str, Path]) -> Signal:
    """Read a Signal CSV: ``sample_rate_hz=<float>`` header then one amplitude per line."""
    path = Path(path)
    with open(path, 'r') as f:
        header = f.readline().strip()
        key, sep, value = header.partition('=')
        if key.strip() != 'sample_rate_hz' or not sep:
            raise ShapeMismatch(f"{path}: missing 'sample_rate_hz=' header")
        try:
            rate = float(value)
            samples = np.loadtxt(f, dtype=np.float64, ndmin=1)
        except ValueError as e:
            raise ShapeMismatch(f"{path}: non-numeric value: {e}") from e
    logger.debug(f"Read {samples.size} samples at {rate} Hz from {path}")
    try:
        return Signal(samples, rate)
    except ToolkitError as e:
        raise type(e)(f"{path}: {e}") from e


def write_signal_csv(path: Union[str, Path], signal: Signal) -> None:
    """Write a Signal CSV with full round-trip precision."""
    with open(path, 'w') as f:
        f.write(f"sample_rate_hz={signal.sample_rate_hz!r}\n")
        f.writelines(f"{v!r}\n" for v in signal.samples.tolist())
