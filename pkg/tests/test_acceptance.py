"""Full-size pipelines on synthetic data, checked against the accuracy gates."""
from pathlib import Path

import pytest

from src.cli.commands import (
    build_engine_health_dataset, build_image_dataset, build_rul_dataset, build_scaleogram_dataset,
    evaluate_model, generate_bearings, generate_classes, predict_unit_rul, train_from_manifest,
)
from src.core.prognostics import total_variation
from src.core.settings import Settings
from src.core.synthgen import FleetSimConfig, synth_turbofan_fleet
from src.data.loaders import load_manifest, split_samples, write_cmapss_text
from src.data.persistence import load_tensor, save_model

CONFIGS = Path(__file__).parent.parent / 'configs'

pytestmark = pytest.mark.slow


def _settings(**overrides):
    settings = Settings()
    settings.update(overrides)
    return settings


def _train_and_evaluate(tmp_path, manifest, arch, settings, name):
    network, _ = train_from_manifest(manifest, CONFIGS / arch, settings)
    model = save_model(tmp_path / f'{name}.ptkm', network)
    return network, evaluate_model(manifest, model, tmp_path / f'eval_{name}', settings)


@pytest.fixture(scope='module')
def fleet(tmp_path_factory):
    path = tmp_path_factory.mktemp('fleet') / 'fleet.txt'
    write_cmapss_text(path, synth_turbofan_fleet(FleetSimConfig(units=100, life_range=(128, 362), seed=0)))
    return path


def test_fault_image_classifier(tmp_path):
    settings = _settings(epochs=30)
    generate_classes(tmp_path / 'classes', seed=0, samples_per_class=120 * 4096, noise=0.05)
    manifest = build_image_dataset(tmp_path / 'classes', tmp_path / 'images', 64, settings)
    assert len(manifest.samples) == 10 * 120

    _, metrics = _train_and_evaluate(tmp_path, tmp_path / 'images' / 'manifest.json', 'fault_cnn.arch',
                                     settings, 'fault')
    assert metrics['accuracy'] >= 0.95


def test_scaleogram_health_classifier(tmp_path):
    settings = _settings(epochs=20)
    generate_bearings(tmp_path / 'bearings', seed=0, bearings=3, snapshots=200, snapshot_len=2560, noise=0.05)
    manifest = build_scaleogram_dataset(tmp_path / 'bearings', tmp_path / 'scaleograms', settings)
    assert len(manifest.samples) == 3 * 2 * 80
    assert load_tensor(manifest.resolve(manifest.samples[0])).shape == (2, 128, 128)

    _, metrics = _train_and_evaluate(tmp_path, tmp_path / 'scaleograms' / 'manifest.json', 'health_cnn.arch',
                                     settings, 'health')
    assert metrics['accuracy'] >= 0.95
    assert metrics['roc_auc'] >= 0.98
    assert (tmp_path / 'eval_health' / 'roc.svg').exists()


def test_rul_regressors(tmp_path, fleet):
    settings = _settings(rul_knee=125, sequence_length=30)
    build_rul_dataset(fleet, tmp_path / 'rul', settings)
    manifest_path = tmp_path / 'rul' / 'manifest.json'

    dense, dense_metrics = _train_and_evaluate(tmp_path, manifest_path, 'rul_dense.arch', settings, 'dense')
    assert dense_metrics['mae'] <= 30.0
    lstm, _ = _train_and_evaluate(tmp_path, manifest_path, 'rul_lstm.arch', settings, 'lstm')

    manifest = load_manifest(manifest_path)
    test_units = split_samples(manifest)['test']
    assert test_units
    tv_dense = tv_lstm = 0.0
    for sample in test_units:
        rows = load_tensor(manifest.resolve(sample))
        tv_dense += total_variation(predict_unit_rul(dense, rows, settings)['predicted_rul'])
        tv_lstm += total_variation(predict_unit_rul(lstm, rows, settings)['predicted_rul'])
    assert tv_lstm <= 0.7 * tv_dense


def test_engine_health_classifier(tmp_path, fleet):
    settings = _settings(engine_health_k=25)
    manifest = build_engine_health_dataset(fleet, tmp_path / 'health', settings)
    assert len(manifest.samples) == 100 * 2 * 25

    _, metrics = _train_and_evaluate(tmp_path, tmp_path / 'health' / 'manifest.json', 'engine_health.arch',
                                     settings, 'engine')
    assert metrics['accuracy'] >= 0.95
    assert metrics['roc_auc'] >= 0.98
    assert (tmp_path / 'eval_engine' / 'roc.svg').exists()
