"""Handlers for the command-line subcommands.

Every handler takes the parsed arguments and the effective ``Settings`` and
returns nothing; errors propagate as ``ToolkitError``/``OSError`` and are
turned into exit codes by ``src.main``.
"""
import csv
import logging
import re
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from src.core.errors import ConfigError, EmptyInput, ShapeMismatch
from src.core.evalmetrics import evaluate_classifier, mae, roc_auc, write_metrics_csv, write_regression_csv
from src.core.features import FEATURE_NAMES, feature_series, process_series
from src.core.fitness import fitness_table, write_fitness_csv
from src.core.prognostics import (
    RulKind, RulModel, health_labels, make_sequences, pca_fit, pca_transform, rul_smooth,
    rul_target, total_variation, unit_matrix,
)
from src.core.settings import Settings
from src.core.signals import Signal, read_signal_csv, signal_to_images, normalize_minmax, write_signal_csv
from src.core.spectral import (
    Scaleogram, cwt, dataset_scales, scaleogram_resize, scaleogram_to_pgm,
)
from src.core.synthgen import (
    DIAGNOSTIC_DEFECTS, BearingSimConfig, FleetSimConfig, derive_seed, diagnostic_classes,
    synth_bearing_channels, synth_class_signal, synth_turbofan_fleet,
)
from src.data.loaders import (
    DatasetManifest, Sample, TaskKind, load_arrays, load_cmapss_text, load_manifest, save_manifest,
    split_samples, write_cmapss_text,
)
from src.data.persistence import load_model, load_tensor, save_model, save_tensor
from src.nn.architecture import load_architecture, parse_architecture
from src.nn.layers import LSTM
from src.nn.network import Network
from src.nn.training import TrainConfig, decode_predictions, encode_targets, train
from src.utils.file_utils import clean_filename, ensure_dir_exists, sorted_files, sorted_subdirs
from src.utils import plots

logger = logging.getLogger(__name__)

SNAPSHOT_PATTERN = re.compile(r'snapshot_(\d+)_([a-z])\.csv$')
CHANNELS = ('h', 'v')


# ---------------------------------------------------------------- gen-synth

def _sub_seed(seed: int, index: int) -> int:
    return int(derive_seed(seed, index).generate_state(1, dtype=np.uint64)[0])


def generate_bearings(out: Path, seed: int, bearings: int, snapshots: int, snapshot_len: int,
                      noise: float, workers: int = 1) -> List[Path]:
    """Run-to-failure bearings, one directory each, two channels per snapshot."""
    written = []
    for b in range(bearings):
        cfg = BearingSimConfig(fault=DIAGNOSTIC_DEFECTS[b % len(DIAGNOSTIC_DEFECTS)], snapshots=snapshots,
                               snapshot_len=snapshot_len, noise=noise, seed=_sub_seed(seed, b))
        directory = out / f"bearing_{b + 1:02d}"
        ensure_dir_exists(directory)
        for channel, run in zip(CHANNELS, synth_bearing_channels(cfg, len(CHANNELS), workers)):
            for i, snapshot in enumerate(run):
                write_signal_csv(directory / f"snapshot_{i:04d}_{channel}.csv", snapshot)
        logger.info(f"Bearing {b + 1}: {snapshots} snapshots with {cfg.fault.value} defect in {directory}")
        written.append(directory)
    return written


def generate_classes(out: Path, seed: int, samples_per_class: int, noise: float) -> List[Path]:
    """One long recording per diagnostic class, in ``<out>/<class>/signal.csv``."""
    written = []
    for index, cls in enumerate(diagnostic_classes()):
        signal = synth_class_signal(cls, samples_per_class, seed, index, noise=noise)
        directory = out / clean_filename(cls.name)
        ensure_dir_exists(directory)
        write_signal_csv(directory / 'signal.csv', signal)
        written.append(directory)
    logger.info(f"Wrote {len(written)} diagnostic classes to {out}")
    return written


def run_gen_synth(args, settings: Settings) -> None:
    seed = settings.get('seed')
    out = Path(args.out)
    if args.kind == 'bearing':
        generate_bearings(out, seed, args.bearings, args.snapshots, args.snapshot_len, args.noise, args.workers)
    elif args.kind == 'bearing-classes':
        generate_classes(out, seed, args.samples_per_class, args.noise)
    else:
        cfg = FleetSimConfig(units=args.units, life_range=(args.min_life, args.max_life), noise=args.noise,
                             seed=seed)
        path = out if out.suffix else out / 'fleet.txt'
        write_cmapss_text(path, synth_turbofan_fleet(cfg))


# ---------------------------------------------------------------- img-dataset

def build_image_dataset(input_dir: Path, out: Path, side: int, settings: Settings) -> DatasetManifest:
    """Cut every class's signals into side x side images stored as (1, side, side) tensors."""
    class_dirs = sorted_subdirs(input_dir)
    if not class_dirs:
        raise EmptyInput(f"{input_dir} has no class subdirectories")
    samples = []
    for label, class_dir in enumerate(class_dirs):
        count = 0
        for csv_path in sorted_files(class_dir, '.csv'):
            images = signal_to_images(read_signal_csv(csv_path), side)
            for image in images:
                rel = Path(class_dir.name) / f"{csv_path.stem}_{count:05d}.ptk"
                save_tensor(out / rel, image[None, :, :])
                samples.append(Sample(path=rel.as_posix(), label=label))
                count += 1
        logger.info(f"Class {class_dir.name}: {count} images")
    manifest = DatasetManifest(
        task=TaskKind.FAULT_IMAGE_CLASS, samples=samples, splits=_splits(settings),
        validation_split=settings.get('validation_split'), seed=settings.get('seed'),
        classes=[d.name for d in class_dirs], root=out,
    )
    save_manifest(out / 'manifest.json', manifest)
    return manifest


def _splits(settings: Settings) -> Dict[str, float]:
    test = settings.get('test_fraction')
    return {'train': 1.0 - test, 'test': test}


def run_img_dataset(args, settings: Settings) -> None:
    build_image_dataset(Path(args.input), Path(args.out), settings.get('image_side'), settings)


# ---------------------------------------------------------------- scaleogram-dataset

def bearing_snapshots(directory: Path) -> List[Dict[str, Path]]:
    """Snapshot files of one bearing grouped by index: ``[{'h': path, 'v': path}, ...]``."""
    grouped: Dict[int, Dict[str, Path]] = {}
    for path in sorted_files(directory, '.csv'):
        match = SNAPSHOT_PATTERN.search(path.name)
        if match:
            grouped.setdefault(int(match.group(1)), {})[match.group(2)] = path
    return [grouped[i] for i in sorted(grouped)]


def channel_scaleograms(channels: List[Signal], size: int, n_scales: int, omega0: float,
                        workers: int = 1) -> List[Scaleogram]:
    """Resized scaleogram of every channel on the dataset scale grid."""
    return [scaleogram_resize(cwt(signal, dataset_scales(len(signal), n_scales), omega0, workers), size, size)
            for signal in channels]


def scaleogram_tensor(scaleograms: List[Scaleogram]) -> np.ndarray:
    """channels x size x size stack, each channel min-max normalized."""
    return np.stack([normalize_minmax(s.magnitudes) for s in scaleograms])


def build_scaleogram_dataset(input_dir: Path, out: Path, settings: Settings, workers: int = 1,
                             pgm: bool = False) -> DatasetManifest:
    size = settings.get('scaleogram_size')
    n_scales = settings.get('n_scales')
    k = settings.get('health_k')
    omega0 = settings.get('omega0')
    samples = []
    bearing_dirs = sorted_subdirs(input_dir)
    if not bearing_dirs:
        raise EmptyInput(f"{input_dir} has no bearing directories")
    for unit, directory in enumerate(bearing_dirs, start=1):
        snapshots = bearing_snapshots(directory)
        labels = health_labels(len(snapshots), k)
        for i, (files, label) in enumerate(zip(snapshots, labels)):
            if label < 0:
                continue
            missing = [c for c in CHANNELS if c not in files]
            if missing:
                raise ShapeMismatch(f"{directory.name} snapshot {i} lacks channel(s) {missing}")
            signals = [read_signal_csv(files[c]) for c in CHANNELS]
            scaleograms = channel_scaleograms(signals, size, n_scales, omega0, workers)
            tensor = scaleogram_tensor(scaleograms)
            rel = Path(directory.name) / f"scaleogram_{i:04d}.ptk"
            save_tensor(out / rel, tensor)
            if pgm:
                scaleogram_to_pgm(scaleograms[0], out / directory.name / f"scaleogram_{i:04d}_h.pgm")
            samples.append(Sample(path=rel.as_posix(), label=int(label), unit=unit))
        logger.info(f"{directory.name}: {2 * k} labelled scaleograms from {len(snapshots)} snapshots")
    manifest = DatasetManifest(
        task=TaskKind.SCALEOGRAM_HEALTH, samples=samples, splits=_splits(settings),
        validation_split=settings.get('validation_split'), seed=settings.get('seed'),
        classes=['healthy', 'faulty'], root=out,
    )
    save_manifest(out / 'manifest.json', manifest)
    return manifest


def run_scaleogram_dataset(args, settings: Settings) -> None:
    build_scaleogram_dataset(Path(args.input), Path(args.out), settings, args.workers, args.pgm)


# ---------------------------------------------------------------- rul-dataset

def build_rul_dataset(cmapss_path: Path, out: Path, settings: Settings) -> DatasetManifest:
    """One (cycles x 24) tensor per unit; targets are derived at training time."""
    samples = []
    for unit in load_cmapss_text(cmapss_path):
        rel = f"unit_{unit.unit_id:04d}.ptk"
        save_tensor(out / rel, unit_matrix(unit))
        samples.append(Sample(path=rel, unit=unit.unit_id))
    manifest = DatasetManifest(
        task=TaskKind.RUL_REGRESSION, samples=samples, splits=_splits(settings),
        validation_split=settings.get('validation_split'), seed=settings.get('seed'), root=out,
    )
    save_manifest(out / 'manifest.json', manifest)
    return manifest


def build_engine_health_dataset(cmapss_path: Path, out: Path, settings: Settings) -> DatasetManifest:
    """One 24-value row tensor per labelled cycle: first k healthy, last k faulty."""
    k = settings.get('engine_health_k')
    samples = []
    for unit in load_cmapss_text(cmapss_path):
        rows = unit_matrix(unit)
        labels = health_labels(len(unit), k)
        for i in np.flatnonzero(labels >= 0):
            rel = f"unit_{unit.unit_id:04d}/cycle_{int(unit.cycles[i]):04d}.ptk"
            save_tensor(out / rel, rows[i])
            samples.append(Sample(path=rel, label=int(labels[i]), unit=unit.unit_id))
    logger.info(f"{len(samples)} labelled cycles ({k} healthy and {k} faulty per unit)")
    manifest = DatasetManifest(
        task=TaskKind.ENGINE_HEALTH, samples=samples, splits=_splits(settings),
        validation_split=settings.get('validation_split'), seed=settings.get('seed'),
        classes=['healthy', 'faulty'], root=out,
    )
    save_manifest(out / 'manifest.json', manifest)
    return manifest


def run_rul_dataset(args, settings: Settings) -> None:
    if args.task == 'health':
        build_engine_health_dataset(Path(args.input), Path(args.out), settings)
    else:
        build_rul_dataset(Path(args.input), Path(args.out), settings)


# ---------------------------------------------------------------- features / fitness

def bearing_feature_table(directory: Path, channel: str, settings: Settings, smooth: bool, cumulate: bool,
                          order: str, use_details: bool, workers: int = 1) -> Dict[str, np.ndarray]:
    files = [snap[channel] for snap in bearing_snapshots(directory) if channel in snap]
    if not files:
        raise EmptyInput(f"{directory} has no '{channel}' channel snapshots")
    series = feature_series([read_signal_csv(p) for p in files], use_details, workers)
    table = {}
    for name in FEATURE_NAMES:
        processed = process_series(series[name], smooth, cumulate, order,
                                   settings.get('sg_window'), settings.get('sg_order'))
        table[processed.feature_name] = processed.values
    return table


def write_feature_csv(path: Path, table: Dict[str, np.ndarray]) -> None:
    names = list(table)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['snapshot_index'] + names)
        for i in range(len(table[names[0]])):
            writer.writerow([i] + [repr(float(table[n][i])) for n in names])
    logger.info(f"Feature series written to {path}")


def read_feature_csv(path: Path) -> Dict[str, np.ndarray]:
    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise EmptyInput(f"{path} holds no rows")
    data = np.array(rows)
    return {name: data[:, j] for j, name in enumerate(header) if j > 0}


def run_features(args, settings: Settings) -> None:
    out = Path(args.out)
    ensure_dir_exists(out)
    for directory in sorted_subdirs(Path(args.input)):
        table = bearing_feature_table(directory, args.channel, settings, args.smooth, args.cumulative,
                                      args.order, args.use_details, args.workers)
        write_feature_csv(out / f"{directory.name}.csv", table)


def run_fitness(args, settings: Settings) -> None:
    files = sorted_files(Path(args.input), '.csv')
    if not files:
        raise EmptyInput(f"no feature CSV files in {args.input}")
    population: Dict[str, List[np.ndarray]] = {}
    for path in files:
        for name, values in read_feature_csv(path).items():
            population.setdefault(name, []).append(values)
    table = fitness_table(population)
    write_fitness_csv(args.out, table)
    if args.svg:
        plots.fitness_scatter(args.svg, [s.feature_name for s in table],
                              [s.monotonicity for s in table], [s.trendability for s in table])


# ---------------------------------------------------------------- train / eval / predict-rul

def _uses_sequences(network: Network) -> bool:
    return any(isinstance(layer, LSTM) for layer in network.layers)


def rul_arrays(manifest: DatasetManifest, samples: List[Sample], settings: Settings,
               sequence_length: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Per-cycle inputs (rows, or windows when ``sequence_length``) and piecewise RUL targets."""
    if not samples:
        raise EmptyInput("no units to load")
    model = RulModel(RulKind.PIECEWISE, knee=settings.get('rul_knee'))
    xs, ys = [], []
    for sample in samples:
        rows = load_tensor(manifest.resolve(sample)).astype(np.float64)
        xs.append(make_sequences(rows, sequence_length, settings.get('mask_value')) if sequence_length else rows)
        ys.append(rul_target(rows.shape[0], model))
    return np.concatenate(xs), np.concatenate(ys)


def train_from_manifest(manifest_path: Path, arch_path: Path, settings: Settings) -> Tuple[Network, object]:
    manifest = load_manifest(manifest_path)
    train_samples = split_samples(manifest)['train']
    seed = settings.get('seed')
    if manifest.task is TaskKind.RUL_REGRESSION:
        n_features = load_tensor(manifest.resolve(manifest.samples[0])).shape[1]
        _, specs = parse_architecture(Path(arch_path).read_text())
        length = settings.get('sequence_length') if any(kind == LSTM.kind for kind, _ in specs) else 0
        shape = (length, n_features) if length else (n_features,)
        network = load_architecture(arch_path, input_shape=shape, seed=seed)
        x, rul = rul_arrays(manifest, train_samples, settings, length)
        network.target_scale = float(settings.get('rul_knee'))
        y = encode_targets('mse', rul / network.target_scale)
    else:
        x, labels = load_arrays(manifest, train_samples)
        network = load_architecture(arch_path, input_shape=x.shape[1:], seed=seed)
        classes = len(manifest.classes) if manifest.classes else int(labels.max()) + 1
        y = encode_targets(network.loss, labels, classes)
    config = TrainConfig(epochs=settings.get('epochs'), batch_size=settings.get('batch_size'),
                         learning_rate=settings.get('learning_rate'), optimizer=settings.get('optimizer'),
                         validation_split=manifest.validation_split, seed=seed)
    report = train(network, x, y, config)
    return network, report


def run_train(args, settings: Settings) -> None:
    network, report = train_from_manifest(Path(args.manifest), Path(args.arch), settings)
    save_model(args.model, network)
    report.write_csv(args.report)
    logger.debug(f"Network summary:\n{network.summary()}")


def evaluate_model(manifest_path: Path, model_path: Path, out: Path, settings: Settings) -> Dict[str, float]:
    manifest = load_manifest(manifest_path)
    network = load_model(model_path)
    test_samples = split_samples(manifest)['test']
    ensure_dir_exists(out)
    if manifest.task is TaskKind.RUL_REGRESSION:
        length = network.input_shape[0] if _uses_sequences(network) else 0
        x, rul = rul_arrays(manifest, test_samples, settings, length)
        pred = network.predict(x)[:, 0].astype(np.float64) * network.target_scale
        values = {'mae': mae(pred, rul), 'rmse': float(np.sqrt(np.mean((pred - rul) ** 2))),
                  'samples': float(rul.size)}
        write_regression_csv(out / 'metrics.csv', values)
        return values

    x, labels = load_arrays(manifest, test_samples)
    outputs = network.predict(x).astype(np.float64)
    predicted = decode_predictions(network.loss, outputs)
    k = len(manifest.classes) if manifest.classes else outputs.shape[1]
    scores = None
    if k == 2:
        scores = outputs[:, 0] if network.loss == 'bce' else outputs[:, 1]
    matrix, report = evaluate_classifier(labels, predicted, k, scores)
    write_metrics_csv(out / 'metrics.csv', report)
    plots.confusion_plot(out / 'confusion.svg', matrix.counts, manifest.classes)
    if scores is not None and np.unique(labels).size == 2:
        curve, auc = roc_auc(scores, labels)
        plots.roc_plot(out / 'roc.svg', curve.fpr, curve.tpr, auc)
    logger.info(f"Test accuracy {report.accuracy:.4f}, macro F1 {report.macro_f1:.4f} on {labels.size} samples")
    return {'accuracy': report.accuracy, 'macro_f1': report.macro_f1, 'roc_auc': report.auc}


def run_eval(args, settings: Settings) -> None:
    evaluate_model(Path(args.manifest), Path(args.model), Path(args.out), settings)


def predict_unit_rul(network: Network, rows: np.ndarray, settings: Settings) -> Dict[str, np.ndarray]:
    """Per-cycle predictions, their polynomial smoothing and the piecewise target."""
    if _uses_sequences(network):
        x = make_sequences(rows, network.input_shape[0], settings.get('mask_value'))
    else:
        x = rows
    predicted = network.predict(x)[:, 0].astype(np.float64) * network.target_scale
    smoothed = rul_smooth(predicted, settings.get('smooth_degree'))
    actual = rul_target(rows.shape[0], RulModel(RulKind.PIECEWISE, knee=settings.get('rul_knee')))
    return {'cycle': np.arange(1, rows.shape[0] + 1), 'predicted_rul': predicted,
            'smoothed_rul': smoothed, 'actual_rul': actual}


def run_predict_rul(args, settings: Settings) -> None:
    network = load_model(args.model)
    units = {u.unit_id: u for u in load_cmapss_text(args.input)}
    if args.unit not in units:
        raise ConfigError(f"unit {args.unit} not found in {args.input}; available: {sorted(units)[:10]}...")
    result = predict_unit_rul(network, unit_matrix(units[args.unit]), settings)
    with open(args.out, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(list(result))
        for i in range(result['cycle'].size):
            writer.writerow([int(result['cycle'][i])] + [repr(float(result[k][i])) for k in list(result)[1:]])
    logger.info(f"Unit {args.unit}: total variation {total_variation(result['predicted_rul']):.1f} raw, "
                f"{total_variation(result['smoothed_rul']):.1f} smoothed; written to {args.out}")
    if args.svg:
        plots.line_plot(args.svg, result['cycle'], {k: result[k] for k in list(result)[1:]},
                        title=f"Unit {args.unit}", xlabel='Cycle', ylabel='RUL')


# ---------------------------------------------------------------- plot / pca

def read_csv_columns(path: Path) -> Dict[str, np.ndarray]:
    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header:
            raise EmptyInput(f"{path} is empty")
        rows = [row for row in reader if row]
    try:
        data = np.array([[float(v) for v in row] for row in rows]).reshape(len(rows), len(header))
    except ValueError as e:
        raise ShapeMismatch(f"{path} has non-numeric or ragged rows: {e}") from e
    return {name: data[:, j] for j, name in enumerate(header)}


def run_plot(args, settings: Settings) -> None:
    columns = read_csv_columns(Path(args.input))
    x_name = args.x or next(iter(columns))
    if x_name not in columns:
        raise ConfigError(f"column '{x_name}' not in {args.input}")
    y_names = args.y or [n for n in columns if n != x_name]
    unknown = [n for n in y_names if n not in columns]
    if unknown:
        raise ConfigError(f"unknown column(s) {unknown} in {args.input}")
    plots.line_plot(args.out, columns[x_name], {n: columns[n] for n in y_names},
                    title=args.title or '', xlabel=x_name)


def run_pca(args, settings: Settings) -> None:
    units = load_cmapss_text(args.input)
    selected = [u for u in units if args.unit is None or u.unit_id == args.unit]
    if not selected:
        raise ConfigError(f"unit {args.unit} not found in {args.input}")
    rows = np.vstack([unit_matrix(u) for u in selected])
    cycles = np.concatenate([u.cycles for u in selected])
    model = pca_fit(rows)
    projected = pca_transform(model, rows, 2)
    ratio = model.explained_variance_ratio[:2]
    logger.info(f"First two components explain {ratio[0]:.3f} and {ratio[1]:.3f} of the variance")
    with open(args.out, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['cycle', 'pc1', 'pc2'])
        for cycle, (p1, p2) in zip(cycles, projected):
            writer.writerow([int(cycle), repr(float(p1)), repr(float(p2))])
    if args.svg:
        plots.pca_scatter(args.svg, projected, cycles)


COMMANDS = {
    'gen-synth': run_gen_synth,
    'img-dataset': run_img_dataset,
    'scaleogram-dataset': run_scaleogram_dataset,
    'rul-dataset': run_rul_dataset,
    'features': run_features,
    'fitness': run_fitness,
    'train': run_train,
    'eval': run_eval,
    'predict-rul': run_predict_rul,
    'plot': run_plot,
    'pca': run_pca,
}
