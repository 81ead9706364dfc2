"""Deterministic synthetic bearing vibration and turbofan fleet data.

Randomness comes from numpy's PCG64 bit generator. Every unit, snapshot or
channel draws from its own stream, seeded with
``SeedSequence(seed, spawn_key=index)``, so results do not depend on the
order (or thread) in which items are generated. Gaussian noise uses the
Box-Muller transform on the uniform stream.
"""
import logging
import concurrent.futures
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError
from .prognostics import RunToFailureUnit, N_SETTINGS
from .signals import Signal
from .spectral import Defect, fault_frequency

logger = logging.getLogger(__name__)

# Resonance carrier per defect kind (Hz); distinct transmission paths
RESONANCE_HZ = {
    Defect.INNER_RING: 3000.0,
    Defect.OUTER_RING: 2200.0,
    Defect.ROLLING_ELEMENT: 3800.0,
    Defect.CAGE_TRAIN: 1600.0,
}

DIAGNOSTIC_DEFECTS = (Defect.ROLLING_ELEMENT, Defect.INNER_RING, Defect.OUTER_RING)
DIAGNOSTIC_SEVERITIES = (0.18, 0.36, 0.54)  # fault diameters in mm


def derive_seed(seed: int, *index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(i) for i in index))


def make_rng(seed: int, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *index)))


def box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard normal draws from pairs of uniforms."""
    pairs = (n + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1]
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:n]


@dataclass
class BearingSimConfig:
    fault: Optional[Defect] = Defect.INNER_RING  # None means healthy
    rpm: float = 1800.0
    sample_rate_hz: float = 25600.0
    snapshot_len: int = 2560
    snapshots: int = 200
    severity_exponent: float = 2.0
    noise: float = 0.05
    seed: int = 0
    impulse_amplitude: float = 2.0
    resonance_hz: Optional[float] = None
    resonance_decay: float = 800.0  # 1/s
    shaft_amplitude: float = 0.3
    snapshot_interval_s: float = 10.0
    defect_tone: float = 1.0  # forcing at the defect rate, relative to impulse amplitude

    def __post_init__(self):
        if self.fault is not None:
            self.fault = Defect(self.fault)
        for name in ('rpm', 'sample_rate_hz', 'snapshot_len', 'snapshots', 'severity_exponent',
                     'impulse_amplitude', 'resonance_decay', 'snapshot_interval_s'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"BearingSimConfig.{name} must be positive")
        if self.noise < 0 or self.defect_tone < 0:
            raise ConfigError("BearingSimConfig.noise and defect_tone must be non-negative")


@dataclass
class FleetSimConfig:
    units: int = 100
    sensors: int = 21
    life_range: Tuple[int, int] = (128, 362)
    drift_signs: Optional[Sequence[int]] = None
    noise: float = 0.05
    seed: int = 0
    drift_amplitude: float = 1.0

    def __post_init__(self):
        lo, hi = self.life_range
        if lo < 30 or hi < lo:
            raise ConfigError(f"life range must satisfy 30 <= min <= max, got {self.life_range}")
        if self.sensors < 2:
            raise ConfigError("at least two sensors are required")
        if self.units < 1:
            raise ConfigError("at least one unit is required")
        if self.drift_signs is None:
            self.drift_signs = [1 if j % 2 == 0 else -1 for j in range(self.sensors)]
        if len(self.drift_signs) != self.sensors:
            raise ConfigError("drift_signs must have one entry per sensor")


def _impulse_response(t: np.ndarray, carrier_hz: float, decay: float) -> np.ndarray:
    return np.where(t >= 0, np.exp(-decay * np.clip(t, 0, None)) * np.sin(2 * np.pi * carrier_hz * t), 0.0)


def _bearing_snapshot(cfg: BearingSimConfig, index: int, channel: int, amplitude: float) -> np.ndarray:
    rng = make_rng(cfg.seed, channel, index)
    fs = cfg.sample_rate_hz
    t0 = index * cfg.snapshot_interval_s
    t = t0 + np.arange(cfg.snapshot_len) / fs
    shaft_hz = cfg.rpm / 60.0
    x = cfg.shaft_amplitude * np.sin(2 * np.pi * shaft_hz * t + 0.5 * channel)

    if cfg.fault is not None and amplitude > 0:
        f_d = fault_frequency(cfg.fault, cfg.rpm)
        carrier = cfg.resonance_hz or RESONANCE_HZ[cfg.fault]
        tail = 8.0 / cfg.resonance_decay
        k_first = int(np.ceil((t[0] - tail) * f_d))
        k_last = int(np.floor(t[-1] * f_d))
        n = cfg.snapshot_len
        for k in range(k_first, k_last + 1):
            t_k = k / f_d
            i0 = max(int(np.ceil((t_k - t0) * fs)), 0)
            i1 = min(int(np.floor((t_k + tail - t0) * fs)) + 1, n)
            if i0 < i1:
                x[i0:i1] += amplitude * _impulse_response(t[i0:i1] - t_k, carrier, cfg.resonance_decay)
        x += amplitude * cfg.defect_tone * np.sin(2 * np.pi * f_d * t)

    if cfg.noise > 0:
        x += cfg.noise * box_muller(rng, cfg.snapshot_len)
    return x


def severity(cfg: BearingSimConfig, index: int) -> float:
    return (index / cfg.snapshots) ** cfg.severity_exponent


def synth_bearing_run(cfg: BearingSimConfig, channel: int = 0, workers: int = 1) -> List[Signal]:
    """Run-to-failure snapshots whose defect impulses grow with snapshot index."""
    def build(i: int) -> Signal:
        amp = cfg.impulse_amplitude * severity(cfg, i) if cfg.fault is not None else 0.0
        return Signal(_bearing_snapshot(cfg, i, channel, amp), cfg.sample_rate_hz)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            snapshots = list(executor.map(build, range(cfg.snapshots)))
    else:
        snapshots = [build(i) for i in range(cfg.snapshots)]
    logger.debug(f"Generated {len(snapshots)} snapshots (fault={cfg.fault}, channel={channel})")
    return snapshots


def synth_bearing_channels(cfg: BearingSimConfig, channels: int = 2, workers: int = 1) -> List[List[Signal]]:
    """Horizontal/vertical (or more) channels of the same run."""
    return [synth_bearing_run(cfg, channel=c, workers=workers) for c in range(channels)]


@dataclass(frozen=True)
class DiagnosticClass:
    name: str
    fault: Optional[Defect]
    diameter_mm: float


def diagnostic_classes() -> List[DiagnosticClass]:
    """Healthy baseline plus three defect kinds at three fault diameters."""
    classes = [DiagnosticClass('normal', None, 0.0)]
    for defect in DIAGNOSTIC_DEFECTS:
        for diameter in DIAGNOSTIC_SEVERITIES:
            classes.append(DiagnosticClass(f"{defect.value}_{diameter:.2f}mm", defect, diameter))
    return classes


def synth_class_signal(cls: DiagnosticClass, n_samples: int, seed: int, class_index: int,
                       rpm: float = 1797.0, sample_rate_hz: float = 12000.0, noise: float = 0.05) -> Signal:
    """One long constant-condition recording for a diagnostic class."""
    if cls.fault is None:
        cfg = BearingSimConfig(fault=None, rpm=rpm, sample_rate_hz=sample_rate_hz, snapshot_len=n_samples,
                               snapshots=1, noise=noise, seed=seed)
        x = _bearing_snapshot(cfg, 0, class_index, 0.0)
    else:
        # larger faults ring longer and hit harder
        scale = cls.diameter_mm / DIAGNOSTIC_SEVERITIES[0]
        cfg = BearingSimConfig(fault=cls.fault, rpm=rpm, sample_rate_hz=sample_rate_hz, snapshot_len=n_samples,
                               snapshots=1, noise=noise, seed=seed, impulse_amplitude=0.5 * scale,
                               resonance_decay=900.0 / scale)
        x = _bearing_snapshot(cfg, 0, class_index, cfg.impulse_amplitude)
    return Signal(x, sample_rate_hz)


def synth_turbofan_fleet(cfg: FleetSimConfig) -> List[RunToFailureUnit]:
    """Units whose sensors drift monotonically as (t/L)^2 towards failure."""
    base_rng = make_rng(cfg.seed, 0)
    baselines = 10.0 + 90.0 * base_rng.random(cfg.sensors)
    setting_levels = base_rng.random(N_SETTINGS)
    signs = np.asarray(cfg.drift_signs, dtype=np.float64)
    lo, hi = cfg.life_range

    units = []
    for u in range(cfg.units):
        rng = make_rng(cfg.seed, 1, u)
        life = int(rng.integers(lo, hi + 1))
        progress = (np.arange(life, dtype=np.float64) / life) ** 2
        drift = cfg.drift_amplitude * progress[:, None] * signs[None, :]
        sensors = baselines[None, :] + drift
        settings = np.tile(setting_levels, (life, 1))
        if cfg.noise > 0:
            sensors = sensors + cfg.noise * box_muller(rng, life * cfg.sensors).reshape(life, cfg.sensors)
            settings = settings + 0.1 * cfg.noise * box_muller(rng, life * N_SETTINGS).reshape(life, N_SETTINGS)
        units.append(RunToFailureUnit(unit_id=u + 1, settings=settings, sensors=sensors))
    logger.info(f"Generated fleet of {len(units)} units (lives {lo}..{hi})")
    return units
