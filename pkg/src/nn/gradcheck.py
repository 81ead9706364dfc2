"""Central-difference verification of the analytic gradients."""
import logging

import numpy as np

from .network import Network

logger = logging.getLogger(__name__)

MAX_FULL_CHECK = 10_000


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)


def grad_check(network: Network, x: np.ndarray, y: np.ndarray, eps: float = 1e-5,
               max_params: int = MAX_FULL_CHECK, seed: int = 0) -> float:
    """Largest relative error between backprop and finite differences.

    Runs on a 64-bit copy of ``network`` in inference mode. Networks with more
    than ``max_params`` parameters are checked on a seeded random subsample.
    """
    net = network.astype(np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    params = net.parameters()
    total = sum(v.size for v in params.values())
    if total == 0:
        return 0.0

    outputs = net.forward(x)
    analytic = {k: g.copy() for k, g in net.backward(outputs, y).items()}

    coords = [(key, i) for key, value in params.items() for i in range(value.size)]
    if total > max_params:
        rng = np.random.default_rng(seed)
        picks = rng.choice(total, size=max_params, replace=False)
        coords = [coords[i] for i in np.sort(picks)]

    worst = 0.0
    for key, i in coords:
        flat = params[key].reshape(-1)
        original = flat[i]
        flat[i] = original + eps
        plus = net.loss_value(net.forward(x), y)
        flat[i] = original - eps
        minus = net.loss_value(net.forward(x), y)
        flat[i] = original
        numeric = (plus - minus) / (2 * eps)
        err = relative_error(float(analytic[key].reshape(-1)[i]), numeric)
        if err > worst:
            worst = err
    logger.debug(f"Gradient check over {len(coords)} of {total} parameters: max relative error {worst:.3e}")
    return worst
