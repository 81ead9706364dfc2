"""Sequential network: an ordered list of layers plus a loss.

The loss fixes the output activation (linear for MSE, sigmoid for BCE,
softmax for CCE), applied on top of the last layer. The backward pass starts
from the fused gradient with respect to the last layer's output.
"""
import copy
import logging
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ConfigError, ShapeMismatch
from .activations import activation
from .layers import Layer, Normalize
from .losses import LOSSES, OUTPUT_ACTIVATION, loss as loss_value, output_gradient

logger = logging.getLogger(__name__)


class Network:
    def __init__(self, layers: Sequence[Layer], loss: str = 'mse',
                 input_shape: Optional[Tuple[int, ...]] = None, seed: int = 0, dtype=np.float32):
        if loss not in LOSSES:
            raise ConfigError(f"unknown loss '{loss}'")
        self.layers: List[Layer] = list(layers)
        self.loss = loss
        self.dtype = np.dtype(dtype)
        self.input_shape: Optional[Tuple[int, ...]] = None
        self.seed = seed
        # regression outputs are in units of target_scale (e.g. the RUL knee)
        self.target_scale = 1.0
        if input_shape is not None:
            self.build(input_shape, seed)

    @property
    def output_activation(self) -> str:
        return OUTPUT_ACTIVATION[self.loss]

    @property
    def output_shape(self) -> Tuple[int, ...]:
        return self.layers[-1].output_shape if self.layers else self.input_shape

    def build(self, input_shape: Sequence[int], seed: int = 0) -> None:
        """Initialise every layer's parameters from a seeded generator."""
        rng = np.random.default_rng(seed)
        shape = tuple(int(s) for s in input_shape)
        self.input_shape = shape
        for layer in self.layers:
            shape = layer.build(shape, rng, self.dtype)
        self.reseed(seed)
        logger.debug(f"Built network {self.input_shape} -> {self.output_shape}, "
                     f"{self.parameter_count()} parameters")

    def reseed(self, seed: int) -> None:
        """Give each layer its own dropout stream derived from ``seed``."""
        children = np.random.SeedSequence(seed).spawn(len(self.layers))
        for layer, child in zip(self.layers, children):
            layer.rng = np.random.default_rng(child)

    def _check_built(self):
        if self.input_shape is None:
            raise ShapeMismatch("network has not been built; call build(input_shape) first")

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        """Pass a batch through every layer and the loss's output activation."""
        self._check_built()
        x = np.asarray(x, dtype=self.dtype)
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeMismatch(f"network expects input {self.input_shape}, got {tuple(x.shape[1:])}")
        for layer in self.layers:
            x = layer.forward(x, training=training)
        return activation(self.output_activation, x)

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[0] == 0:
            return np.empty((0,) + self.output_shape, dtype=self.dtype)
        return np.concatenate([self.forward(x[i:i + batch_size]) for i in range(0, x.shape[0], batch_size)])

    def loss_value(self, outputs: np.ndarray, targets: np.ndarray) -> float:
        return loss_value(self.loss, outputs, targets)

    def backward(self, outputs: np.ndarray, targets: np.ndarray) -> Dict[str, np.ndarray]:
        """Reverse-mode gradients after a ``forward`` call on the same batch."""
        dy = output_gradient(self.loss, outputs, np.asarray(targets, dtype=outputs.dtype))
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return self.gradients()

    def parameters(self) -> Dict[str, np.ndarray]:
        """Trainable parameter arrays keyed ``'<index>.<name>'`` (live references)."""
        return {key: value for key, value, _ in self._walk()}

    def gradients(self) -> Dict[str, np.ndarray]:
        return {key: layer.grads[name] for key, _, (layer, name) in self._walk()}

    def _walk(self) -> Iterator:
        for i, layer in enumerate(self.layers):
            if not layer.trainable:
                continue
            for name, value in layer.params.items():
                yield f"{i}.{name}", value, (layer, name)

    def parameter_count(self) -> int:
        return int(sum(v.size for v in self.parameters().values()))

    def fit_normalization(self, x: np.ndarray) -> None:
        """Fit every leading Normalize layer on training inputs."""
        for layer in self.layers:
            if not isinstance(layer, Normalize):
                break
            layer.fit(np.asarray(x, dtype=self.dtype))

    def astype(self, dtype) -> 'Network':
        """A deep copy whose parameters and computations use ``dtype``."""
        clone = copy.deepcopy(self)
        clone.dtype = np.dtype(dtype)
        for layer in clone.layers:
            layer.cast(clone.dtype)
        return clone

    def summary(self) -> str:
        lines = [f"input {self.input_shape}"]
        for i, layer in enumerate(self.layers):
            count = sum(v.size for v in layer.params.values()) if layer.trainable else 0
            lines.append(f"{i:>2} {layer!r:<50} -> {layer.output_shape}  params={count}")
        lines.append(f"loss {self.loss} (output {self.output_activation}), "
                     f"trainable params {self.parameter_count()}")
        return '\n'.join(lines)
