import math

import numpy as np
import pytest

from ltidetect.forecast import ForecastModel, GRULayer, NetworkTopology, gru_cell_forward
from ltidetect.forecast.gru import Adam, layer_forward
from ltidetect.forecast.model import sequence_loss_and_grads, targets


def _sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def hand_gru(x, h, W, U, b):
    """Scalar loops over the gate equations; rows are [update, reset, candidate]."""
    H = len(h)

    def row(k):
        return (sum(W[k][j] * x[j] for j in range(len(x))) + b[k],
                sum(U[k][j] * h[j] for j in range(H)))

    out = []
    for i in range(H):
        zx, zh = row(i)
        rx, rh = row(H + i)
        nx, nh = row(2 * H + i)
        z, r = _sig(zx + zh), _sig(rx + rh)
        n = math.tanh(nx + r * nh)
        out.append((1 - z) * n + z * h[i])
    return out


def test_zero_everything_gives_zero():
    lay = GRULayer(np.zeros((6, 3)), np.zeros((6, 2)), np.zeros(6))
    assert np.all(gru_cell_forward(np.zeros(3), np.zeros(2), lay) == 0.0)


def test_saturated_update_gate_keeps_state(rng):
    lay = GRULayer.init(3, 2, rng)
    lay.b[:2] = 1e3
    h = np.array([0.3, -0.7])
    np.testing.assert_allclose(gru_cell_forward(rng.normal(size=3), h, lay), h, atol=1e-12)


def test_cell_matches_hand_evaluation(rng):
    lay = GRULayer(rng.normal(size=(6, 3)), rng.normal(size=(6, 2)), rng.normal(size=6))
    x, h = rng.normal(size=3), rng.normal(size=2)
    ref = hand_gru(x.tolist(), h.tolist(), lay.W.tolist(), lay.U.tolist(), lay.b.tolist())
    np.testing.assert_allclose(gru_cell_forward(x, h, lay), ref, rtol=0, atol=1e-12)


def test_cell_shape_mismatch(rng):
    lay = GRULayer.init(3, 2, rng)
    with pytest.raises(ValueError):
        gru_cell_forward(np.zeros(4), np.zeros(2), lay)
    with pytest.raises(ValueError):
        gru_cell_forward(np.zeros(3), np.zeros(3), lay)


def test_layer_forward_equals_repeated_cell(rng):
    lay = GRULayer.init(3, 4, rng)
    xs = rng.normal(size=(9, 3))
    hs, _ = layer_forward(xs, np.zeros(4), lay)
    h = np.zeros(4)
    for t in range(9):
        h = gru_cell_forward(xs[t], h, lay)
        np.testing.assert_allclose(hs[t], h, rtol=0, atol=1e-15)


def test_finite_difference_gradients():
    rng = np.random.default_rng(3)
    topo = NetworkTopology(m=2, L=2, hidden_width=4, depth=2, seasonal=False)
    model = ForecastModel.init(topo, seed=3)
    T = 6
    vals = rng.uniform(0, 1, (T + topo.L, topo.m))
    X = vals[:T]
    Y, mask = targets(vals, topo.L)
    Y, mask = Y[:T], mask[:T]
    mask[-1] = False  # exercise the mask
    h0 = [rng.normal(0, 0.3, 4) for _ in range(topo.depth)]
    _, grads, _ = sequence_loss_and_grads(model, X, Y, mask, h0)
    eps = 1e-6
    worst = 0.0
    for p, g in zip(model.parameters(), grads):
        assert g.shape == p.shape
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            lp = sequence_loss_and_grads(model, X, Y, mask, h0)[0]
            p[idx] = old - eps
            lm = sequence_loss_and_grads(model, X, Y, mask, h0)[0]
            p[idx] = old
            num = (lp - lm) / (2 * eps)
            denom = max(abs(num), abs(g[idx]), 1e-7)
            worst = max(worst, abs(num - g[idx]) / denom)
    assert worst <= 1e-4


def test_adam_coupled_decay_single_step():
    p = np.array([1.0, -2.0])
    opt = Adam([p], lr=0.1, weight_decay=0.5)
    opt.step([np.array([0.2, 0.0])])
    # bias-corrected first step moves each coordinate by lr * sign(g + wd * p)
    g = np.array([0.2, 0.0]) + 0.5 * np.array([1.0, -2.0])
    np.testing.assert_allclose(p, np.array([1.0, -2.0]) - 0.1 * g / (np.abs(g) + 1e-8), rtol=1e-12)
