"""C-MAPSS style text files and dataset manifests."""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import ConfigError, EmptyInput, MalformedRow, NonConsecutiveCycles
from src.core.prognostics import N_SETTINGS, N_SENSORS, RunToFailureUnit
from src.utils.file_utils import ensure_parent_exists
from .persistence import load_tensor

logger = logging.getLogger(__name__)

CMAPSS_FIELDS = 2 + N_SETTINGS + N_SENSORS


def load_cmapss_text(path: Union[str, Path]) -> List[RunToFailureUnit]:
    """Read whitespace-separated rows ``unit cycle settings*3 sensors*21``."""
    rows: Dict[int, List[Tuple[int, np.ndarray]]] = {}
    with open(path, 'r') as f:
        for line_no, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != CMAPSS_FIELDS:
                raise MalformedRow(line_no, f"expected {CMAPSS_FIELDS} fields, found {len(fields)}")
            try:
                values = np.array([float(v) for v in fields])
            except ValueError as e:
                raise MalformedRow(line_no, str(e)) from e
            if not np.all(np.isfinite(values)):
                raise MalformedRow(line_no, "non-finite value")
            unit_id, cycle = values[0], values[1]
            if unit_id != int(unit_id) or cycle != int(cycle):
                raise MalformedRow(line_no, "unit and cycle must be integers")
            rows.setdefault(int(unit_id), []).append((int(cycle), values[2:]))

    units = []
    for unit_id in sorted(rows):
        entries = rows[unit_id]
        cycles = np.array([c for c, _ in entries], dtype=np.int64)
        if np.any(np.diff(cycles) != 1):
            bad = int(np.argmax(np.diff(cycles) != 1))
            raise NonConsecutiveCycles(unit_id, f"cycle {cycles[bad]} followed by {cycles[bad + 1]}")
        data = np.vstack([v for _, v in entries])
        units.append(RunToFailureUnit(unit_id=unit_id, settings=data[:, :N_SETTINGS],
                                      sensors=data[:, N_SETTINGS:], cycles=cycles))
    logger.info(f"Loaded {len(units)} units from {path}")
    return units


def write_cmapss_text(path: Union[str, Path], units: Iterable[RunToFailureUnit]) -> Path:
    """Write units in the format ``load_cmapss_text`` reads (values round-trip exactly)."""
    path = Path(path)
    ensure_parent_exists(path)
    count = 0
    with open(path, 'w') as f:
        for unit in units:
            if unit.sensors.shape[1] != N_SENSORS:
                raise ConfigError(f"unit {unit.unit_id} has {unit.sensors.shape[1]} sensors, "
                                  f"the text format needs {N_SENSORS}")
            for cycle, settings, sensors in zip(unit.cycles, unit.settings, unit.sensors):
                values = ' '.join(repr(float(v)) for v in np.concatenate([settings, sensors]))
                f.write(f"{unit.unit_id} {int(cycle)} {values}\n")
            count += 1
    logger.info(f"Wrote {count} units to {path}")
    return path


class TaskKind(str, Enum):
    FAULT_IMAGE_CLASS = 'FaultImageClass'
    SCALEOGRAM_HEALTH = 'ScaleogramHealth'
    RUL_REGRESSION = 'RulRegression'
    ENGINE_HEALTH = 'EngineHealth'


@dataclass
class Sample:
    path: str
    label: Optional[int] = None
    target: Optional[float] = None
    unit: Optional[int] = None


@dataclass
class DatasetManifest:
    task: TaskKind
    samples: List[Sample]
    splits: Dict[str, float] = field(default_factory=lambda: {'train': 0.8, 'test': 0.2})
    validation_split: float = 0.15
    seed: int = 0
    classes: Optional[List[str]] = None
    root: Path = field(default=Path('.'), repr=False)

    def __post_init__(self):
        self.task = TaskKind(self.task)
        if set(self.splits) != {'train', 'test'}:
            raise ConfigError(f"splits must name 'train' and 'test', got {sorted(self.splits)}")
        if abs(sum(self.splits.values()) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {self.splits}")
        if not 0 <= self.validation_split < 1:
            raise ConfigError("validation_split must be in [0, 1)")

    @property
    def test_fraction(self) -> float:
        return self.splits['test']

    def resolve(self, sample: Sample) -> Path:
        return self.root / sample.path

    def to_dict(self) -> dict:
        samples = []
        for s in self.samples:
            entry = {'path': s.path}
            for key in ('label', 'target', 'unit'):
                if getattr(s, key) is not None:
                    entry[key] = getattr(s, key)
            samples.append(entry)
        data = {'task': self.task.value, 'samples': samples, 'splits': self.splits,
                'validation_split': self.validation_split, 'seed': self.seed}
        if self.classes is not None:
            data['classes'] = self.classes
        return data


def save_manifest(path: Union[str, Path], manifest: DatasetManifest) -> Path:
    path = Path(path)
    ensure_parent_exists(path)
    with open(path, 'w') as f:
        json.dump(manifest.to_dict(), f, indent=2, sort_keys=True)
    logger.info(f"Manifest with {len(manifest.samples)} samples written to {path}")
    return path


def load_manifest(path: Union[str, Path], check_files: bool = True) -> DatasetManifest:
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"manifest {path} is not valid JSON: {e}") from e
    try:
        samples = [Sample(**entry) for entry in data['samples']]
        manifest = DatasetManifest(task=data['task'], samples=samples,
                                   splits=data.get('splits', {'train': 0.8, 'test': 0.2}),
                                   validation_split=data.get('validation_split', 0.15),
                                   seed=data.get('seed', 0), classes=data.get('classes'), root=path.parent)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"manifest {path} is incomplete: {e}") from e
    if check_files:
        missing = [s.path for s in manifest.samples if not manifest.resolve(s).is_file()]
        if missing:
            raise ConfigError(f"manifest {path} lists {len(missing)} missing files, e.g. {missing[0]}")
    return manifest


def split_key(sample: Sample, task: TaskKind) -> str:
    """Run-to-failure data is split by unit so one unit never spans both sides."""
    if task in (TaskKind.RUL_REGRESSION, TaskKind.ENGINE_HEALTH) and sample.unit is not None:
        return f"unit:{sample.unit}"
    return sample.path


def assign_split(seed: int, key: str, test_fraction: float) -> str:
    """'train' or 'test', a pure function of the seed and the sample key."""
    digest = hashlib.sha256(f"{seed}:{key}".encode('utf-8')).digest()
    u = int.from_bytes(digest[:8], 'big') / 2.0 ** 64
    return 'test' if u < test_fraction else 'train'


def split_samples(manifest: DatasetManifest) -> Dict[str, List[Sample]]:
    parts: Dict[str, List[Sample]] = {'train': [], 'test': []}
    for sample in manifest.samples:
        key = split_key(sample, manifest.task)
        parts[assign_split(manifest.seed, key, manifest.test_fraction)].append(sample)
    logger.debug(f"Split {len(manifest.samples)} samples into {len(parts['train'])} train "
                 f"and {len(parts['test'])} test")
    return parts


def load_arrays(manifest: DatasetManifest, samples: Sequence[Sample]) -> Tuple[np.ndarray, np.ndarray]:
    """Stack tensor files into an input batch and gather labels or targets."""
    if not samples:
        raise EmptyInput("no samples to load")
    x = np.stack([load_tensor(manifest.resolve(s)) for s in samples])
    if manifest.task is TaskKind.RUL_REGRESSION:
        y = np.array([s.target for s in samples], dtype=np.float64)
    else:
        y = np.array([s.label for s in samples], dtype=np.int64)
    return x, y
