import math
from pathlib import Path

import numpy as np
import pytest
from scipy.special import expit

from src.core.errors import ConfigError, DivergenceDetected, ShapeMismatch
from src.nn.activations import activation, activation_grad, softmax
from src.nn.architecture import build_network, load_architecture, parse_architecture
from src.nn.gradcheck import grad_check
from src.nn.layers import LSTM, Conv2D, Dense, Dropout, Flatten, MaxPool2D, Normalize, lstm_step
from src.nn.losses import loss, output_gradient
from src.nn.network import Network
from src.nn.training import TrainConfig, decode_predictions, encode_targets, split_validation, train

CONFIGS = Path(__file__).parent.parent / 'configs'


class TestActivationsAndLosses:
    def test_activation_values(self):
        assert activation('relu', np.array([-1.0, 2.0])).tolist() == [0.0, 2.0]
        assert activation('leaky_relu', np.array([-1.0, 2.0])).tolist() == pytest.approx([-0.1, 2.0])
        assert activation('sigmoid', 0.0) == 0.5
        assert np.allclose(softmax(np.array([[1.0, 2.0, 3.0]])).sum(axis=1), 1.0)
        assert np.allclose(softmax(np.array([[1000.0, 1000.0]])), 0.5)

    def test_activation_grads_match_differences(self, rng):
        z = rng.normal(size=20)
        for kind in ('linear', 'sigmoid', 'tanh'):
            numeric = (activation(kind, z + 1e-6) - activation(kind, z - 1e-6)) / 2e-6
            assert np.allclose(activation_grad(kind, z, activation(kind, z)), numeric, atol=1e-6)

    def test_unknown_activation(self):
        with pytest.raises(ValueError):
            activation('swish', 1.0)

    def test_loss_values(self):
        assert loss('mse', np.array([[1.0], [3.0]]), np.array([[0.0], [1.0]])) == 2.5
        assert loss('bce', np.array([[0.5]]), np.array([[1.0]])) == pytest.approx(math.log(2))
        assert loss('cce', np.array([[0.9, 0.1]]), np.array([[1.0, 0.0]])) == pytest.approx(-math.log(0.9))
        assert math.isfinite(loss('bce', np.array([[0.0]]), np.array([[1.0]])))

    def test_loss_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            loss('mse', np.zeros((2, 1)), np.zeros((3, 1)))

    def test_fused_gradients(self):
        p = np.array([[0.2, 0.8]])
        y = np.array([[1.0, 0.0]])
        assert np.allclose(output_gradient('cce', p, y), [[-0.8, 0.8]])
        assert np.allclose(output_gradient('mse', p, y), [[-0.8, 0.8]])


class TestLayers:
    def test_dense_forward(self):
        net = Network([Dense(1)], input_shape=(2,))
        net.layers[0].params['W'][:] = [[1.0, 2.0]]
        net.layers[0].params['b'][:] = [0.5]
        assert net.forward(np.array([[1.0, 1.0]])).tolist() == [[3.5]]

    def test_conv_identity_and_zero_kernel(self, rng):
        layer = Conv2D(1, 3, activation='linear')
        layer.build((1, 6, 7), rng, np.float64)
        x = rng.normal(size=(2, 1, 6, 7))
        layer.params['K'][:] = 0
        assert np.array_equal(layer.forward(x), np.zeros_like(x))
        layer.params['K'][0, 0, 1, 1] = 1
        assert np.allclose(layer.forward(x), x)

    def test_conv_matches_loops(self, rng):
        layer = Conv2D(3, 3, activation='linear')
        layer.build((2, 4, 5), rng, np.float64)
        layer.params['b'][:] = rng.normal(size=3)
        x = rng.normal(size=(1, 2, 4, 5))
        padded = np.pad(x[0], ((0, 0), (1, 1), (1, 1)))
        K, b = layer.params['K'], layer.params['b']
        expected = np.zeros((3, 4, 5))
        for f in range(3):
            for r in range(4):
                for c in range(5):
                    expected[f, r, c] = np.sum(padded[:, r:r + 3, c:c + 3] * K[f]) + b[f]
        assert np.allclose(layer.forward(x)[0], expected)

    def test_even_kernel_rejected(self):
        with pytest.raises(ShapeMismatch):
            Conv2D(4, kernel=2)

    def test_maxpool(self, rng):
        layer = MaxPool2D()
        assert layer.build((1, 5, 5), rng, np.float64) == (1, 3, 3)
        layer = MaxPool2D()
        layer.build((1, 2, 2), rng, np.float64)
        out = layer.forward(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
        assert out.tolist() == [[[[4.0]]]]
        dx = layer.backward(np.array([[[[1.0]]]]))
        assert dx.tolist() == [[[[0.0, 0.0], [0.0, 1.0]]]]

    def test_dropout_inverted_scaling(self, rng):
        layer = Dropout(0.5)
        layer.build((10000,), rng, np.float64)
        layer.rng = np.random.default_rng(7)
        x = np.ones((100, 10000))
        assert abs(layer.forward(x, training=True).mean() - 1.0) < 0.01
        assert layer.forward(x, training=False) is x

    def test_normalize_masks_sentinel_rows(self, rng):
        layer = Normalize(mask_value=-10.0)
        layer.build((3, 2), rng, np.float64)
        x = np.array([[[-10.0, -10.0], [1.0, 2.0], [3.0, 6.0]]])
        layer.fit(x)
        assert layer.params['mean'].tolist() == [2.0, 4.0]
        out = layer.forward(x)
        assert out[0, 0].tolist() == [-10.0, -10.0]
        assert out[0, 1:].tolist() == [[-1.0, -1.0], [1.0, 1.0]]

    def test_lstm_zero_weights_give_zero_state(self, rng):
        layer = LSTM(4)
        layer.build((6, 3), rng, np.float64)
        for value in layer.params.values():
            value[:] = 0
        assert np.array_equal(layer.forward(rng.normal(size=(2, 6, 3))), np.zeros((2, 4)))

    def test_lstm_matches_cell_equations(self, rng):
        layer = LSTM(3, return_sequences=True, mask_value=None)
        layer.build((4, 2), rng, np.float64)
        P = layer.params
        x = rng.normal(size=(1, 4, 2))
        h, c = np.zeros(3), np.zeros(3)
        expected = []
        for t in range(4):
            xt = x[0, t]
            i = expit(P['W_xi'] @ xt + P['W_hi'] @ h + P['W_ci'] @ c + P['b_i'])
            f = expit(P['W_xf'] @ xt + P['W_hf'] @ h + P['W_cf'] @ c + P['b_f'])
            c = f * c + i * np.tanh(P['W_xc'] @ xt + P['W_hc'] @ h + P['b_c'])
            o = expit(P['W_xo'] @ xt + P['W_ho'] @ h + P['W_co'] @ c + P['b_o'])
            h = o * np.tanh(c)
            expected.append(h)
        assert np.allclose(layer.forward(x)[0], np.array(expected))

    def test_lstm_masked_steps_keep_state(self, rng):
        layer = LSTM(3, mask_value=-10.0)
        layer.build((4, 2), rng, np.float64)
        x = rng.normal(size=(1, 3, 2))
        padded = np.concatenate([np.full((1, 1, 2), -10.0), x], axis=1)
        reference = LSTM(3, mask_value=-10.0)
        reference.build((3, 2), rng, np.float64)
        reference.params = {k: v.copy() for k, v in layer.params.items()}
        assert np.allclose(layer.forward(padded), reference.forward(x))

    def test_lstm_step_shapes(self, rng):
        layer = LSTM(5)
        layer.build((2, 3), rng, np.float64)
        h, c, _ = lstm_step(layer.params, np.ones((4, 3)), np.zeros((4, 5)), np.zeros((4, 5)))
        assert h.shape == c.shape == (4, 5)

    def test_forward_rejects_wrong_shape(self):
        net = Network([Dense(2)], input_shape=(3,))
        with pytest.raises(ShapeMismatch):
            net.forward(np.zeros((1, 4)))


def _data(rng, shape, n=4):
    return rng.normal(size=(n,) + shape)


class TestGradCheck:
    def test_dense_mse(self, rng):
        net = Network([Dense(4, 'tanh'), Dense(2)], 'mse', (3,))
        assert grad_check(net, _data(rng, (3,)), rng.normal(size=(4, 2))) <= 1e-4

    def test_conv_bce(self, rng):
        net = Network([Conv2D(2, 3, 'tanh'), Flatten(), Dense(1)], 'bce', (1, 5, 5))
        y = np.array([[0.0], [1.0], [1.0], [0.0]])
        assert grad_check(net, _data(rng, (1, 5, 5)), y) <= 1e-4

    def test_maxpool_cce(self, rng):
        net = Network([Conv2D(2, 3, 'tanh'), MaxPool2D(), Flatten(), Dense(3)], 'cce', (1, 5, 5))
        y = encode_targets('cce', np.array([0, 1, 2, 1]), 3)
        assert grad_check(net, _data(rng, (1, 5, 5)), y) <= 1e-4

    def test_dropout_in_inference(self, rng):
        net = Network([Dense(4, 'tanh'), Dropout(0.5), Dense(1)], 'mse', (3,))
        assert grad_check(net, _data(rng, (3,)), rng.normal(size=(4, 1))) <= 1e-4

    def test_lstm(self, rng):
        net = Network([LSTM(3), Dense(1)], 'mse', (5, 2))
        assert grad_check(net, _data(rng, (5, 2)), rng.normal(size=(4, 1))) <= 1e-4

    def test_lstm_sequences_with_mask(self, rng):
        net = Network([LSTM(3, return_sequences=True), Flatten(), Dense(1)], 'bce', (5, 2))
        x = _data(rng, (5, 2))
        x[:2, :2] = -10.0
        y = np.array([[1.0], [0.0], [0.0], [1.0]])
        assert grad_check(net, x, y) <= 1e-4

    def test_normalize_passes_gradients(self, rng):
        net = Network([Dense(3, 'tanh'), Normalize(), Dense(1)], 'mse', (2,))
        net.layers[1].params['mean'][:] = [0.1, -0.2, 0.3]
        net.layers[1].params['scale'][:] = [0.5, 2.0, 1.5]
        assert grad_check(net, _data(rng, (2,)), rng.normal(size=(4, 1))) <= 1e-4

    def test_corrupted_gradient_is_caught(self, rng):
        class BrokenDense(Dense):
            def backward(self, dy):
                dx = super().backward(dy)
                self.grads['W'] = self.grads['W'] * 1.5
                return dx

        net = Network([BrokenDense(2, 'tanh'), Dense(1)], 'mse', (3,))
        assert grad_check(net, _data(rng, (3,)), rng.normal(size=(4, 1))) > 1e-2

    def test_parameterless_network(self, rng):
        net = Network([Flatten()], 'mse', (2, 2))
        assert grad_check(net, _data(rng, (2, 2)), rng.normal(size=(4, 4))) == 0.0

    def test_subsampled_check(self, rng):
        net = Network([Dense(8, 'tanh'), Dense(1)], 'mse', (6,))
        assert grad_check(net, _data(rng, (6,)), rng.normal(size=(4, 1)), max_params=10) <= 1e-4


def _clusters(rng, n=100):
    x = np.concatenate([rng.normal(-2, 0.5, size=(n, 2)), rng.normal(2, 0.5, size=(n, 2))])
    labels = np.repeat([0, 1], n)
    return x, labels


class TestTraining:
    def test_separable_clusters(self, rng):
        x, labels = _clusters(rng)
        net = Network([Dense(8, 'tanh'), Dense(1)], 'bce', (2,), seed=3)
        config = TrainConfig(epochs=40, batch_size=16, learning_rate=0.05, validation_split=0.0, seed=3)
        report = train(net, x, encode_targets('bce', labels), config)
        assert np.mean(decode_predictions('bce', net.predict(x)) == labels) == 1.0
        assert report.final.train_metric == 1.0
        assert math.isnan(report.final.val_loss)

    def test_least_squares(self, rng):
        x = rng.normal(size=(64, 3))
        y = x @ np.array([[1.5], [-2.0], [0.5]]) + 0.25
        net = Network([Dense(1)], 'mse', (3,))
        config = TrainConfig(epochs=300, batch_size=64, learning_rate=0.1, optimizer='sgd', validation_split=0.0)
        train(net, x, y, config)
        assert np.allclose(net.layers[0].params['W'], [[1.5, -2.0, 0.5]], atol=1e-2)
        assert net.layers[0].params['b'][0] == pytest.approx(0.25, abs=1e-2)

    def test_zero_learning_rate_leaves_parameters(self, rng):
        x, labels = _clusters(rng, 20)
        for optimizer in ('sgd', 'adam'):
            net = Network([Dense(4, 'relu'), Dense(1)], 'bce', (2,))
            before = {k: v.copy() for k, v in net.parameters().items()}
            train(net, x, encode_targets('bce', labels),
                  TrainConfig(epochs=2, learning_rate=0.0, optimizer=optimizer))
            for key, value in net.parameters().items():
                assert np.array_equal(value, before[key])

    def test_deterministic_for_fixed_seed(self, rng):
        x, labels = _clusters(rng, 30)
        y = encode_targets('cce', labels, 2)
        results = []
        for _ in range(2):
            net = Network([Dense(6, 'relu'), Dropout(0.3), Dense(2)], 'cce', (2,), seed=11)
            report = train(net, x, y, TrainConfig(epochs=3, seed=5))
            results.append((net.parameters(), report.final.train_loss))
        assert results[0][1] == results[1][1]
        for key, value in results[0][0].items():
            assert np.array_equal(value, results[1][0][key])

    def test_divergence(self, rng):
        x = rng.normal(size=(32, 2)) * 100
        y = rng.normal(size=(32, 1)) * 100
        net = Network([Dense(16, 'relu'), Dense(1)], 'mse', (2,))
        with np.errstate(all='ignore'), pytest.raises(DivergenceDetected) as info:
            train(net, x, y, TrainConfig(epochs=50, learning_rate=1e6, optimizer='sgd', validation_split=0.0))
        assert info.value.epoch >= 1

    def test_validation_split_is_seeded_subset(self, rng):
        x = np.arange(20.0).reshape(-1, 1)
        x_tr, _, x_val, _ = split_validation(x, x, 0.25, seed=1)
        assert x_val.shape[0] == 5 and x_tr.shape[0] == 15
        assert sorted(np.concatenate([x_tr, x_val])[:, 0].tolist()) == list(range(20))
        assert np.array_equal(x_val, split_validation(x, x, 0.25, seed=1)[2])

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            TrainConfig(batch_size=0)
        with pytest.raises(ConfigError):
            TrainConfig(validation_split=1.0)

    def test_report_csv(self, rng, tmp_path):
        x, labels = _clusters(rng, 10)
        net = Network([Dense(1)], 'bce', (2,))
        report = train(net, x, encode_targets('bce', labels), TrainConfig(epochs=2))
        report.write_csv(tmp_path / 'report.csv')
        lines = (tmp_path / 'report.csv').read_text().splitlines()
        assert lines[0] == 'epoch,train_loss,val_loss,train_metric,val_metric'
        assert len(lines) == 3


class TestArchitecture:
    def test_parse(self):
        header, layers = parse_architecture("input=3\nloss=bce  # binary\n\ndense units=4 activation=tanh\ndense units=1\n")
        assert header == {'input': (3,), 'loss': 'bce'}
        assert layers == [('dense', {'units': 4, 'activation': 'tanh'}), ('dense', {'units': 1})]

    @pytest.mark.parametrize('name', ['fault_cnn.arch', 'health_cnn.arch', 'rul_dense.arch', 'rul_lstm.arch'])
    def test_shipped_configs_build(self, name):
        shapes = {'rul_dense.arch': (24,), 'rul_lstm.arch': (30, 24)}
        net = load_architecture(CONFIGS / name, input_shape=shapes.get(name))
        assert net.parameter_count() > 0

    def test_errors(self):
        with pytest.raises(ConfigError):
            parse_architecture("input=3\nconv3d filters=2\n")
        with pytest.raises(ConfigError):
            parse_architecture("input=3\ndense 4\n")
        with pytest.raises(ConfigError):
            parse_architecture("input=3\n")
        with pytest.raises(ConfigError):
            build_network("dense units=1\n")
        with pytest.raises(ConfigError):
            build_network("input=3,3\ndense units=1\n")
