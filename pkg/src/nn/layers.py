"""Layer kinds of the network engine.

Every layer works on batches (batch dimension first), caches what its
backward pass needs during ``forward`` and writes parameter gradients into
``self.grads`` during ``backward``.
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from src.core.errors import ConfigError, ShapeMismatch
from .activations import ACTIVATIONS, activation, activation_grad

logger = logging.getLogger(__name__)

Shape = Tuple[int, ...]


def he_uniform(rng: np.random.Generator, shape: Shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def glorot_uniform(rng: np.random.Generator, shape: Shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_weights(rng, shape, fan_in, fan_out, act):
    if act in ('relu', 'leaky_relu'):
        return he_uniform(rng, shape, fan_in)
    return glorot_uniform(rng, shape, fan_in, fan_out)


class Layer:
    kind = 'layer'
    trainable = True

    def __init__(self):
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.input_shape: Optional[Shape] = None
        self.output_shape: Optional[Shape] = None
        self.rng: Optional[np.random.Generator] = None

    def build(self, input_shape: Shape, rng: np.random.Generator, dtype) -> Shape:
        self.input_shape = tuple(input_shape)
        self.output_shape = self.input_shape
        return self.output_shape

    def config(self) -> Dict[str, Any]:
        return {}

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_input(self, x: np.ndarray) -> None:
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeMismatch(f"{self.kind} expects input {self.input_shape}, got {tuple(x.shape[1:])}")

    def cast(self, dtype) -> None:
        for name in self.params:
            self.params[name] = self.params[name].astype(dtype)

    def __repr__(self) -> str:
        cfg = ', '.join(f"{k}={v}" for k, v in self.config().items())
        return f"{self.__class__.__name__}({cfg})"


class Dense(Layer):
    kind = 'dense'

    def __init__(self, units: int, activation: str = 'linear'):
        super().__init__()
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{activation}'")
        self.units = int(units)
        self.activation = activation

    def config(self):
        return {'units': self.units, 'activation': self.activation}

    def build(self, input_shape, rng, dtype):
        if len(input_shape) != 1:
            raise ShapeMismatch(f"dense layer needs flat input, got {tuple(input_shape)}")
        super().build(input_shape, rng, dtype)
        fan_in = input_shape[0]
        self.params = {
            'W': init_weights(rng, (self.units, fan_in), fan_in, self.units, self.activation).astype(dtype),
            'b': np.zeros(self.units, dtype=dtype),
        }
        self.output_shape = (self.units,)
        return self.output_shape

    def forward(self, x, training=False):
        self._check_input(x)
        z = x @ self.params['W'].T + self.params['b']
        a = activation(self.activation, z)
        self._cache = (x, z, a)
        return a

    def backward(self, dy):
        x, z, a = self._cache
        dz = dy * activation_grad(self.activation, z, a)
        self.grads = {'W': dz.T @ x, 'b': dz.sum(axis=0)}
        return dz @ self.params['W']


class Conv2D(Layer):
    """Stride-1 cross-correlation with zero 'same' padding."""
    kind = 'conv2d'

    def __init__(self, filters: int, kernel: int = 3, activation: str = 'relu'):
        super().__init__()
        if kernel % 2 == 0 or kernel < 1:
            raise ShapeMismatch(f"same padding needs an odd kernel size, got {kernel}")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{activation}'")
        self.filters = int(filters)
        self.kernel = int(kernel)
        self.activation = activation

    def config(self):
        return {'filters': self.filters, 'kernel': self.kernel, 'activation': self.activation}

    def build(self, input_shape, rng, dtype):
        if len(input_shape) != 3:
            raise ShapeMismatch(f"conv2d needs (channels, height, width) input, got {tuple(input_shape)}")
        super().build(input_shape, rng, dtype)
        c, h, w = input_shape
        k = self.kernel
        self.params = {
            'K': init_weights(rng, (self.filters, c, k, k), c * k * k, self.filters * k * k,
                              self.activation).astype(dtype),
            'b': np.zeros(self.filters, dtype=dtype),
        }
        self.output_shape = (self.filters, h, w)
        return self.output_shape

    def _columns(self, x):
        n, c, h, w = x.shape
        p = self.kernel // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        windows = sliding_window_view(xp, (self.kernel, self.kernel), axis=(2, 3))
        return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * self.kernel * self.kernel)

    def forward(self, x, training=False):
        self._check_input(x)
        n, _, h, w = x.shape
        cols = self._columns(x)
        kmat = self.params['K'].reshape(self.filters, -1)
        z = (cols @ kmat.T + self.params['b']).reshape(n, h, w, self.filters).transpose(0, 3, 1, 2)
        a = activation(self.activation, z)
        self._cache = (x.shape, cols, z, a)
        return a

    def backward(self, dy):
        shape, cols, z, a = self._cache
        n, c, h, w = shape
        k = self.kernel
        p = k // 2
        dz = (dy * activation_grad(self.activation, z, a)).transpose(0, 2, 3, 1).reshape(-1, self.filters)
        kmat = self.params['K'].reshape(self.filters, -1)
        self.grads = {'K': (dz.T @ cols).reshape(self.params['K'].shape), 'b': dz.sum(axis=0)}
        dcols = (dz @ kmat).reshape(n, h, w, c, k, k)
        dxp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=dz.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + h, j:j + w] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, p:p + h, p:p + w]


class MaxPool2D(Layer):
    """2x2 max pooling, stride 2; odd sizes are padded on the right with -inf."""
    kind = 'maxpool2d'
    trainable = False

    def build(self, input_shape, rng, dtype):
        if len(input_shape) != 3:
            raise ShapeMismatch(f"maxpool2d needs (channels, height, width) input, got {tuple(input_shape)}")
        super().build(input_shape, rng, dtype)
        c, h, w = input_shape
        self.output_shape = (c, (h + 1) // 2, (w + 1) // 2)
        return self.output_shape

    def forward(self, x, training=False):
        self._check_input(x)
        n, c, h, w = x.shape
        ph, pw = h % 2, w % 2
        if ph or pw:
            x = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)), constant_values=-np.inf)
        h2, w2 = x.shape[2] // 2, x.shape[3] // 2
        blocks = x.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
        # argmax keeps the first maximum in row-major block order
        arg = np.argmax(blocks, axis=-1)
        self._cache = ((n, c, h, w), arg)
        return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        (n, c, h, w), arg = self._cache
        h2, w2 = arg.shape[2], arg.shape[3]
        blocks = np.zeros((n, c, h2, w2, 4), dtype=dy.dtype)
        np.put_along_axis(blocks, arg[..., None], dy[..., None], axis=-1)
        dx = blocks.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * h2, 2 * w2)
        return dx[:, :, :h, :w]


class Dropout(Layer):
    """Inverted dropout: active only in training mode."""
    kind = 'dropout'
    trainable = False

    def __init__(self, rate: float = 0.5):
        super().__init__()
        if not 0 <= rate < 1:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = float(rate)

    def config(self):
        return {'rate': self.rate}

    def forward(self, x, training=False):
        self._check_input(x)
        if not training or self.rate == 0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) < keep).astype(x.dtype) / x.dtype.type(keep)
        return x * self._mask

    def backward(self, dy):
        return dy if self._mask is None else dy * self._mask


class Flatten(Layer):
    kind = 'flatten'
    trainable = False

    def build(self, input_shape, rng, dtype):
        super().build(input_shape, rng, dtype)
        self.output_shape = (int(np.prod(input_shape)),)
        return self.output_shape

    def forward(self, x, training=False):
        self._check_input(x)
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape((dy.shape[0],) + self.input_shape)


class Normalize(Layer):
    """Fixed per-feature standardization fitted on training data.

    For sequence input, time steps equal to ``mask_value`` pass through untouched
    so downstream recurrent layers still recognise them.
    """
    kind = 'normalize'
    trainable = False

    def __init__(self, mask_value: Optional[float] = None):
        super().__init__()
        self.mask_value = mask_value

    def config(self):
        return {'mask_value': self.mask_value}

    def build(self, input_shape, rng, dtype):
        super().build(input_shape, rng, dtype)
        d = input_shape[-1]
        self.params = {'mean': np.zeros(d, dtype=dtype), 'scale': np.ones(d, dtype=dtype)}
        return self.output_shape

    def _masked(self, x):
        if self.mask_value is None:
            return None
        return np.all(x == self.mask_value, axis=-1)

    def fit(self, x: np.ndarray) -> None:
        rows = x.reshape(-1, x.shape[-1])
        masked = self._masked(rows)
        if masked is not None:
            rows = rows[~masked]
        std = rows.std(axis=0)
        dtype = self.params['mean'].dtype
        self.params['mean'] = rows.mean(axis=0).astype(dtype)
        self.params['scale'] = np.where(std == 0, 1.0, std).astype(dtype)
        logger.debug(f"Normalization fitted on {rows.shape[0]} rows")

    def forward(self, x, training=False):
        self._check_input(x)
        y = (x - self.params['mean']) / self.params['scale']
        masked = self._masked(x)
        if masked is not None:
            y[masked] = x[masked]
        self._masked_cache = masked
        return y

    def backward(self, dy):
        dx = dy / self.params['scale']
        if self._masked_cache is not None:
            dx[self._masked_cache] = dy[self._masked_cache]
        return dx


LSTM_GATES = ('i', 'f', 'o', 'c')


def lstm_step(params: Dict[str, np.ndarray], x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    """One step of the peephole LSTM cell.

    The input and forget gates look at the previous cell state, the output
    gate at the new one. Returns ``(h_t, c_t, cache)``.
    """
    P = params
    i = expit(x_t @ P['W_xi'].T + h_prev @ P['W_hi'].T + c_prev @ P['W_ci'].T + P['b_i'])
    f = expit(x_t @ P['W_xf'].T + h_prev @ P['W_hf'].T + c_prev @ P['W_cf'].T + P['b_f'])
    g = np.tanh(x_t @ P['W_xc'].T + h_prev @ P['W_hc'].T + P['b_c'])
    c_t = f * c_prev + i * g
    o = expit(x_t @ P['W_xo'].T + h_prev @ P['W_ho'].T + c_t @ P['W_co'].T + P['b_o'])
    tc = np.tanh(c_t)
    h_t = o * tc
    return h_t, c_t, (x_t, h_prev, c_prev, i, f, g, c_t, o, tc)


class LSTM(Layer):
    """Peephole LSTM over (time, features) sequences with sentinel masking.

    A time step whose features all equal ``mask_value`` leaves the state
    unchanged. With ``return_sequences`` the output is every hidden state,
    otherwise the last one.
    """
    kind = 'lstm'

    def __init__(self, units: int, return_sequences: bool = False, mask_value: Optional[float] = -10.0):
        super().__init__()
        self.units = int(units)
        self.return_sequences = bool(return_sequences)
        self.mask_value = mask_value

    def config(self):
        return {'units': self.units, 'return_sequences': self.return_sequences, 'mask_value': self.mask_value}

    def build(self, input_shape, rng, dtype):
        if len(input_shape) != 2:
            raise ShapeMismatch(f"lstm needs (time, features) input, got {tuple(input_shape)}")
        super().build(input_shape, rng, dtype)
        t, d = input_shape
        h = self.units
        params = {}
        for gate in LSTM_GATES:
            params[f'W_x{gate}'] = glorot_uniform(rng, (h, d), d, h)
            params[f'W_h{gate}'] = glorot_uniform(rng, (h, h), h, h)
            if gate != 'c':
                params[f'W_c{gate}'] = glorot_uniform(rng, (h, h), h, h)
            params[f'b_{gate}'] = np.ones(h) if gate == 'f' else np.zeros(h)
        self.params = {k: v.astype(dtype) for k, v in params.items()}
        self.output_shape = (t, h) if self.return_sequences else (h,)
        return self.output_shape

    def _mask(self, x):
        if self.mask_value is None:
            return np.ones(x.shape[:2], dtype=x.dtype)
        return (~np.all(x == self.mask_value, axis=-1)).astype(x.dtype)

    def forward(self, x, training=False):
        self._check_input(x)
        n, steps, _ = x.shape
        h = np.zeros((n, self.units), dtype=x.dtype)
        c = np.zeros((n, self.units), dtype=x.dtype)
        mask = self._mask(x)
        caches = []
        outputs = np.empty((n, steps, self.units), dtype=x.dtype)
        for t in range(steps):
            h_new, c_new, cache = lstm_step(self.params, x[:, t], h, c)
            m = mask[:, t, None]
            h = m * h_new + (1 - m) * h
            c = m * c_new + (1 - m) * c
            caches.append(cache)
            outputs[:, t] = h
        self._cache = (x.shape, mask, caches)
        return outputs if self.return_sequences else h

    def backward(self, dy):
        (n, steps, d), mask, caches = self._cache
        P = self.params
        grads = {k: np.zeros_like(v) for k, v in P.items()}
        dx = np.zeros((n, steps, d), dtype=dy.dtype)
        dh_next = np.zeros((n, self.units), dtype=dy.dtype)
        dc_next = np.zeros((n, self.units), dtype=dy.dtype)
        for t in reversed(range(steps)):
            x_t, h_prev, c_prev, i, f, g, c_t, o, tc = caches[t]
            m = mask[:, t, None]
            dh = dh_next + (dy[:, t] if self.return_sequences else (dy if t == steps - 1 else 0))
            dh_cell = m * dh
            dc_cell = m * dc_next

            da_o = dh_cell * tc * o * (1 - o)
            dc = dc_cell + dh_cell * o * (1 - tc * tc) + da_o @ P['W_co']
            da_i = dc * g * i * (1 - i)
            da_c = dc * i * (1 - g * g)
            da_f = dc * c_prev * f * (1 - f)

            for gate, da in (('i', da_i), ('f', da_f), ('o', da_o), ('c', da_c)):
                grads[f'W_x{gate}'] += da.T @ x_t
                grads[f'W_h{gate}'] += da.T @ h_prev
                grads[f'b_{gate}'] += da.sum(axis=0)
            grads['W_ci'] += da_i.T @ c_prev
            grads['W_cf'] += da_f.T @ c_prev
            grads['W_co'] += da_o.T @ c_t

            dx[:, t] = da_i @ P['W_xi'] + da_f @ P['W_xf'] + da_o @ P['W_xo'] + da_c @ P['W_xc']
            dh_next = (da_i @ P['W_hi'] + da_f @ P['W_hf'] + da_o @ P['W_ho'] + da_c @ P['W_hc']
                       + (1 - m) * dh)
            dc_next = dc * f + da_i @ P['W_ci'] + da_f @ P['W_cf'] + (1 - m) * dc_next
        self.grads = grads
        return dx


LAYER_TYPES = {cls.kind: cls for cls in (Dense, Conv2D, MaxPool2D, Dropout, Flatten, Normalize, LSTM)}


def layer_from_config(kind: str, config: Dict[str, Any]) -> Layer:
    try:
        cls = LAYER_TYPES[kind]
    except KeyError:
        raise ConfigError(f"unknown layer kind '{kind}'") from None
    return cls(**config)
