"""Binary tensor (``PTK1``) and model (``PTKM``) files.

Both formats are little-endian. A tensor file is::

    b'PTK1' | version u32 | rank u32 | dims u32 * rank | float32 * prod(dims)

A model file is::

    b'PTKM' | version u32 | header length u32 | JSON header (utf-8)
    | one tensor body (rank, dims, data) per parameter, in header order

The JSON header records the loss, input shape and every layer's kind,
options and parameter names.
"""
import json
import logging
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from src.core.errors import BadMagic, TruncatedFile
from src.nn.layers import layer_from_config
from src.nn.network import Network
from src.utils.file_utils import ensure_parent_exists

logger = logging.getLogger(__name__)

TENSOR_MAGIC = b'PTK1'
MODEL_MAGIC = b'PTKM'
FORMAT_VERSION = 1
_FLOAT = np.dtype('<f4')


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedFile(f"expected {n} bytes of {what}, found {len(data)}")
    return data


def _read_u32(f: BinaryIO, what: str) -> int:
    return struct.unpack('<I', _read_exact(f, 4, what))[0]


def _write_body(f: BinaryIO, array: np.ndarray) -> None:
    array = np.asarray(array)
    f.write(struct.pack('<I', array.ndim))
    if array.ndim:
        f.write(struct.pack(f'<{array.ndim}I', *array.shape))
    f.write(np.ascontiguousarray(array, dtype=_FLOAT).tobytes())


def _read_body(f: BinaryIO) -> np.ndarray:
    rank = _read_u32(f, 'rank')
    dims = struct.unpack(f'<{rank}I', _read_exact(f, 4 * rank, 'dims')) if rank else ()
    count = int(np.prod(dims)) if rank else 1
    payload = _read_exact(f, 4 * count, 'tensor data')
    return np.frombuffer(payload, dtype=_FLOAT).reshape(dims).astype(np.float32)


def _check_header(f: BinaryIO, magic: bytes) -> None:
    found = f.read(4)
    if found != magic:
        raise BadMagic(f"expected magic {magic!r}, found {found!r}")
    version = _read_u32(f, 'version')
    if version != FORMAT_VERSION:
        raise BadMagic(f"unsupported format version {version}")


def save_tensor(path, tensor: np.ndarray) -> Path:
    path = Path(path)
    ensure_parent_exists(path)
    with open(path, 'wb') as f:
        f.write(TENSOR_MAGIC)
        f.write(struct.pack('<I', FORMAT_VERSION))
        _write_body(f, tensor)
    logger.debug(f"Saved tensor {np.shape(tensor)} to {path}")
    return path


def load_tensor(path) -> np.ndarray:
    with open(path, 'rb') as f:
        _check_header(f, TENSOR_MAGIC)
        return _read_body(f)


def save_model(path, network: Network) -> Path:
    """Write architecture and parameters; parameters are stored as float32."""
    path = Path(path)
    ensure_parent_exists(path)
    header = {
        'loss': network.loss,
        'input_shape': list(network.input_shape),
        'target_scale': network.target_scale,
        'layers': [
            {'kind': layer.kind, 'config': layer.config(), 'params': list(layer.params)}
            for layer in network.layers
        ],
    }
    encoded = json.dumps(header, sort_keys=True).encode('utf-8')
    with open(path, 'wb') as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack('<II', FORMAT_VERSION, len(encoded)))
        f.write(encoded)
        for layer in network.layers:
            for value in layer.params.values():
                _write_body(f, value)
    logger.info(f"Saved model ({network.parameter_count()} parameters) to {path}")
    return path


def load_model(path) -> Network:
    with open(path, 'rb') as f:
        _check_header(f, MODEL_MAGIC)
        length = _read_u32(f, 'header length')
        try:
            header = json.loads(_read_exact(f, length, 'model header').decode('utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise TruncatedFile(f"model header is not valid JSON: {e}") from e
        layers = [layer_from_config(spec['kind'], spec['config']) for spec in header['layers']]
        network = Network(layers, loss=header['loss'], input_shape=tuple(header['input_shape']))
        network.target_scale = float(header.get('target_scale', 1.0))
        for layer, spec in zip(network.layers, header['layers']):
            for name in spec['params']:
                value = _read_body(f)
                if value.shape != layer.params[name].shape:
                    raise TruncatedFile(f"parameter {name} of {layer.kind} has shape {value.shape}, "
                                        f"expected {layer.params[name].shape}")
                layer.params[name] = value
    logger.debug(f"Loaded model from {path}")
    return network
