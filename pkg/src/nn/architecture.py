"""Plain-text network architecture files.

Example::

    # 10-class fault classifier
    input=1,64,64
    loss=cce
    conv2d filters=16 kernel=3 activation=relu
    maxpool2d
    flatten
    dense units=64 activation=relu
    dropout rate=0.25
    dense units=10

Header lines are ``key=value``; every other line is a layer kind followed by
``key=value`` options. ``#`` starts a comment.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.core.errors import ConfigError
from .layers import LAYER_TYPES, layer_from_config
from .network import Network

logger = logging.getLogger(__name__)


def _parse_value(text: str) -> Any:
    lowered = text.lower()
    if lowered in ('true', 'false'):
        return lowered == 'true'
    if lowered in ('none', 'null'):
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_architecture(text: str) -> Tuple[Dict[str, Any], List[Tuple[str, Dict[str, Any]]]]:
    """Split an architecture description into header values and layer specs."""
    header: Dict[str, Any] = {}
    layers: List[Tuple[str, Dict[str, Any]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) == 1 and '=' in tokens[0]:
            key, value = tokens[0].split('=', 1)
            if key == 'input':
                try:
                    header['input'] = tuple(int(v) for v in value.split(','))
                except ValueError:
                    raise ConfigError(f"line {line_no}: bad input shape '{value}'") from None
            else:
                header[key] = _parse_value(value)
            continue
        kind = tokens[0].lower()
        if kind not in LAYER_TYPES:
            raise ConfigError(f"line {line_no}: unknown layer kind '{tokens[0]}'")
        options = {}
        for token in tokens[1:]:
            if '=' not in token:
                raise ConfigError(f"line {line_no}: expected key=value, got '{token}'")
            key, value = token.split('=', 1)
            options[key] = _parse_value(value)
        layers.append((kind, options))
    if not layers:
        raise ConfigError("architecture defines no layers")
    return header, layers


def build_network(text: str, input_shape: Optional[Tuple[int, ...]] = None, seed: int = 0,
                  dtype=np.float32) -> Network:
    """Build a network from architecture text; ``input_shape`` overrides the header."""
    header, specs = parse_architecture(text)
    shape = input_shape or header.get('input')
    if shape is None:
        raise ConfigError("architecture needs an input=... line or an explicit input shape")
    try:
        layers = [layer_from_config(kind, options) for kind, options in specs]
        network = Network(layers, loss=header.get('loss', 'mse'), input_shape=tuple(shape), seed=seed, dtype=dtype)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid architecture: {e}") from e
    logger.info(f"Built network with {len(layers)} layers and {network.parameter_count()} parameters")
    return network


def load_architecture(path, input_shape: Optional[Tuple[int, ...]] = None, seed: int = 0) -> Network:
    return build_network(Path(path).read_text(), input_shape=input_shape, seed=seed)
