import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Add the project root to the Python path
project_root = str(Path(__file__).parent.parent)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from src.utils.logging_config import setup_logging
from src.core.errors import ToolkitError
from src.core.settings import Settings
from src.cli.commands import COMMANDS

logger = logging.getLogger('src.main')

# flags that override a setting of the same name when given
SETTING_FLAGS = (
    'seed', 'sg_window', 'sg_order', 'omega0', 'n_scales', 'scaleogram_size', 'image_side', 'health_k',
    'engine_health_k', 'rul_knee', 'smooth_degree', 'test_fraction', 'validation_split', 'mask_value',
    'sequence_length', 'epochs', 'batch_size', 'learning_rate', 'optimizer',
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='JSON settings file layered over the defaults')
    parser.add_argument('--seed', type=int, help='seed for every random choice (default 0)')
    parser.add_argument('--verbose', '-v', action='store_true', help='debug logging')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='ptk', description='Vibration diagnostics and remaining-useful-life toolkit')
    sub = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

    p = sub.add_parser('gen-synth', help='generate synthetic bearing or turbofan data')
    _add_common(p)
    p.add_argument('--kind', choices=('bearing', 'bearing-classes', 'fleet'), default='bearing')
    p.add_argument('--out', required=True, help='output directory (or .txt file for fleet)')
    p.add_argument('--bearings', type=int, default=6)
    p.add_argument('--snapshots', type=int, default=200)
    p.add_argument('--snapshot-len', type=int, default=2560)
    p.add_argument('--samples-per-class', type=int, default=120 * 4096)
    p.add_argument('--units', type=int, default=100)
    p.add_argument('--min-life', type=int, default=128)
    p.add_argument('--max-life', type=int, default=362)
    p.add_argument('--noise', type=float, default=0.05)
    p.add_argument('--workers', type=int, default=1)

    p = sub.add_parser('img-dataset', help='cut class signals into image tensors')
    _add_common(p)
    p.add_argument('--input', required=True, help='directory with one subdirectory of signal CSVs per class')
    p.add_argument('--out', required=True)
    p.add_argument('--image-side', type=int)
    p.add_argument('--test-fraction', type=float)

    p = sub.add_parser('scaleogram-dataset', help='healthy/faulty scaleogram tensors from bearing runs')
    _add_common(p)
    p.add_argument('--input', required=True, help='directory with one subdirectory per bearing')
    p.add_argument('--out', required=True)
    p.add_argument('--health-k', type=int)
    p.add_argument('--scaleogram-size', type=int)
    p.add_argument('--n-scales', type=int)
    p.add_argument('--omega0', type=float)
    p.add_argument('--test-fraction', type=float)
    p.add_argument('--pgm', action='store_true', help='also write a PGM of the first channel')
    p.add_argument('--workers', type=int, default=1)

    p = sub.add_parser('rul-dataset', help='per-unit tensors from a C-MAPSS text file')
    _add_common(p)
    p.add_argument('--input', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--task', choices=('rul', 'health'), default='rul',
                   help='rul: one tensor per unit; health: labelled first/last cycles for classification')
    p.add_argument('--engine-health-k', type=int)
    p.add_argument('--test-fraction', type=float)

    p = sub.add_parser('features', help='per-snapshot feature series of every bearing')
    _add_common(p)
    p.add_argument('--input', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--channel', choices=('h', 'v'), default='h')
    p.add_argument('--smooth', action='store_true', help='Savitzky-Golay smoothing')
    p.add_argument('--cumulative', action='store_true', help='cumulative descriptors')
    p.add_argument('--order', choices=('smooth-first', 'cumulate-first'), default='smooth-first')
    p.add_argument('--sg-window', type=int)
    p.add_argument('--sg-order', type=int)
    p.add_argument('--use-details', action='store_true',
                   help='compute the trigonometric features on the level-4 detail coefficients instead of the approximation')
    p.add_argument('--workers', type=int, default=1)

    p = sub.add_parser('fitness', help='monotonicity and trendability of feature series')
    _add_common(p)
    p.add_argument('--input', required=True, help='directory of feature CSVs, one per bearing')
    p.add_argument('--out', required=True)
    p.add_argument('--svg')

    p = sub.add_parser('train', help='train a network on a dataset manifest')
    _add_common(p)
    p.add_argument('--manifest', required=True)
    p.add_argument('--arch', required=True, help='architecture text file')
    p.add_argument('--model', required=True, help='output model file')
    p.add_argument('--report', required=True, help='output training report CSV')
    p.add_argument('--epochs', type=int)
    p.add_argument('--batch-size', type=int)
    p.add_argument('--learning-rate', type=float)
    p.add_argument('--optimizer', choices=('sgd', 'adam'))
    p.add_argument('--sequence-length', type=int)
    p.add_argument('--rul-knee', type=int)

    p = sub.add_parser('eval', help='evaluate a model on the test split')
    _add_common(p)
    p.add_argument('--manifest', required=True)
    p.add_argument('--model', required=True)
    p.add_argument('--out', required=True, help='output directory for metrics and plots')
    p.add_argument('--rul-knee', type=int)

    p = sub.add_parser('predict-rul', help='RUL predictions for one unit')
    _add_common(p)
    p.add_argument('--model', required=True)
    p.add_argument('--input', required=True, help='C-MAPSS text file')
    p.add_argument('--unit', type=int, required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--svg')
    p.add_argument('--smooth-degree', type=int)
    p.add_argument('--rul-knee', type=int)

    p = sub.add_parser('plot', help='line plot of CSV columns')
    _add_common(p)
    p.add_argument('--input', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--x')
    p.add_argument('--y', nargs='+')
    p.add_argument('--title')

    p = sub.add_parser('pca', help='two-component PCA projection of C-MAPSS units')
    _add_common(p)
    p.add_argument('--input', required=True)
    p.add_argument('--unit', type=int)
    p.add_argument('--out', required=True)
    p.add_argument('--svg')
    return parser


def load_settings(args: argparse.Namespace) -> Settings:
    """Settings file first, then explicit command-line flags."""
    settings = Settings(args.config)
    settings.update({key: getattr(args, key, None) for key in SETTING_FLAGS})
    return settings


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(logging.DEBUG if args.verbose else logging.INFO)
    try:
        settings = load_settings(args)
        COMMANDS[args.command](args, settings)
    except (ToolkitError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
