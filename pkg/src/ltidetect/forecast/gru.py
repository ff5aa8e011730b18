"""Stacked GRU in numpy: single-step cell, layer-sequence forward/backward, Adam.

Gate convention (rows of the stacked ``W``/``U``/``b`` are ``[update, reset, candidate]``)::

    z  = sigmoid(W_z x + U_z h + b_z)
    r  = sigmoid(W_r x + U_r h + b_r)
    n  = tanh(W_n x + r * (U_n h) + b_n)
    h' = (1 - z) * n + z * h
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(x):
    # exp of non-positive arguments only
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class GRULayer:
    W: np.ndarray  # (3H, in)
    U: np.ndarray  # (3H, H)
    b: np.ndarray  # (3H,)

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @classmethod
    def init(cls, n_in: int, hidden: int, rng: np.random.Generator) -> "GRULayer":
        k = 1.0 / np.sqrt(hidden)
        return cls(rng.uniform(-k, k, (3 * hidden, n_in)),
                   rng.uniform(-k, k, (3 * hidden, hidden)),
                   rng.uniform(-k, k, 3 * hidden))


def gru_cell_forward(x, h, layer: GRULayer) -> np.ndarray:
    """One step. ``x`` is (in,) or (B, in); ``h`` is (H,) or (B, H)."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    H = layer.hidden
    if x.shape[-1] != layer.W.shape[1] or h.shape[-1] != H:
        raise ValueError(f"shape mismatch: x {x.shape}, h {h.shape} for layer "
                         f"in={layer.W.shape[1]} hidden={H}")
    ax = x @ layer.W.T + layer.b
    ah = h @ layer.U.T
    z = sigmoid(ax[..., :H] + ah[..., :H])
    r = sigmoid(ax[..., H:2 * H] + ah[..., H:2 * H])
    n = np.tanh(ax[..., 2 * H:] + r * ah[..., 2 * H:])
    return n + z * (h - n)  # same arithmetic as layer_forward


def layer_forward(xs: np.ndarray, h0: np.ndarray, layer: GRULayer):
    """Run one layer over a (T, in) sequence. Returns (T, H) outputs and a cache for backward."""
    T = len(xs)
    H = layer.hidden
    ax = xs @ layer.W.T + layer.b  # input projections for all steps at once
    hs = np.empty((T + 1, H))
    hs[0] = h0
    zs = np.empty((T, H))
    rs = np.empty((T, H))
    ns = np.empty((T, H))
    hn = np.empty((T, H))
    U = layer.U
    for t in range(T):
        ah = U @ hs[t]
        z = sigmoid(ax[t, :H] + ah[:H])
        r = sigmoid(ax[t, H:2 * H] + ah[H:2 * H])
        n = np.tanh(ax[t, 2 * H:] + r * ah[2 * H:])
        hs[t + 1] = n + z * (hs[t] - n)
        zs[t], rs[t], ns[t], hn[t] = z, r, n, ah[2 * H:]
    return hs[1:], (xs, hs, zs, rs, ns, hn)


def layer_backward(dhs: np.ndarray, cache, layer: GRULayer):
    """Backprop through a layer sequence.

    ``dhs`` is dLoss/d(output h_t) from above, (T, H). Returns gradients
    ``(dW, dU, db)``, dLoss/d(inputs) (T, in) and dLoss/d(h0).
    """
    xs, hs, zs, rs, ns, hn = cache
    T, H = dhs.shape
    U = layer.U
    dax = np.empty((T, 3 * H))
    dah = np.empty((T, 3 * H))
    dh_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        dh = dhs[t] + dh_next
        z, r, n = zs[t], rs[t], ns[t]
        dn = dh * (1.0 - z)
        dz = dh * (hs[t] - n)
        dan = dn * (1.0 - n * n)
        daz = dz * z * (1.0 - z)
        dar = dan * hn[t] * r * (1.0 - r)
        dax[t, :H], dax[t, H:2 * H], dax[t, 2 * H:] = daz, dar, dan
        dah[t, :H], dah[t, H:2 * H], dah[t, 2 * H:] = daz, dar, dan * r
        dh_next = dh * z + dah[t] @ U
    dW = dax.T @ xs
    dU = dah.T @ hs[:-1]
    db = dax.sum(axis=0)
    dxs = dax @ layer.W
    return (dW, dU, db), dxs, dh_next


class Adam:
    """Adam with coupled L2 weight decay (``grad += wd * param``)."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3, betas=(0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = params
        self.lr, self.eps, self.wd = lr, eps, weight_decay
        self.b1, self.b2 = betas
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if self.wd:
                g = g + self.wd * p
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
