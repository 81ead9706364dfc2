"""Prognostic fitness of health indicators: monotonicity and trendability."""
import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from .errors import TooShort, EmptyInput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitnessScore:
    feature_name: str
    monotonicity: float
    trendability: float


def monotonicity(series: Sequence[float]) -> float:
    """|#positive diffs - #negative diffs| / (n - 1); flat steps count for neither."""
    x = np.asarray(series, dtype=np.float64)
    if x.size < 2:
        raise TooShort("monotonicity needs at least two values")
    d = np.diff(x)
    return abs(int(np.sum(d > 0)) - int(np.sum(d < 0))) / (x.size - 1)


def trend_statistic(series: Sequence[float]) -> float:
    """Fraction of rising first differences plus fraction of positive second differences."""
    x = np.asarray(series, dtype=np.float64)
    if x.size < 3:
        raise TooShort("trendability needs series of at least three values")
    d1 = np.diff(x)
    d2 = np.diff(d1)
    return np.sum(d1 > 0) / (x.size - 1) + np.sum(d2 > 0) / (x.size - 2)


def trendability(population: Sequence[Sequence[float]]) -> float:
    """1 - population std of the per-series trend statistics."""
    if len(population) == 0:
        raise EmptyInput("trendability needs at least one series")
    t = np.array([trend_statistic(s) for s in population])
    return float(1.0 - np.std(t))


def fitness_table(features: Dict[str, Sequence[Sequence[float]]]) -> List[FitnessScore]:
    """Population-averaged monotonicity and trendability per feature, sorted by name."""
    table = []
    for name in sorted(features):
        population = features[name]
        mono = float(np.mean([monotonicity(s) for s in population]))
        trend = trendability(population)
        logger.debug(f"Fitness of {name}: monotonicity={mono:.3f}, trendability={trend:.3f}")
        table.append(FitnessScore(name, mono, trend))
    return table


def write_fitness_csv(path: Union[str, Path], table: List[FitnessScore]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['feature', 'monotonicity', 'trendability'])
        for score in table:
            writer.writerow([score.feature_name, repr(score.monotonicity), repr(score.trendability)])
    logger.info(f"Fitness table with {len(table)} features written to {path}")


def read_fitness_csv(path: Union[str, Path]) -> List[FitnessScore]:
    with open(path, 'r', newline='') as f:
        return [FitnessScore(row['feature'], float(row['monotonicity']), float(row['trendability']))
                for row in csv.DictReader(f)]
