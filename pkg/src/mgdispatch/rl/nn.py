"""Minimal numpy differentiation toolkit: MLPs with dropout, Adam, grad checks.

Parameters are plain lists of ``np.ndarray``; gradients mirror that layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

HIDDEN_SIZES = (512, 128, 64)


class ShapeMismatch(ValueError):
    pass


def init_mlp(sizes: Sequence[int], rng: np.random.Generator, out_scale: float = 1.0) -> list[np.ndarray]:
    """He-initialised weights ``[W0, b0, W1, b1, ...]``; the last layer is scaled by ``out_scale``."""
    params = []
    n_layers = len(sizes) - 1
    for i in range(n_layers):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        std = np.sqrt(2.0 / fan_in)
        if i == n_layers - 1:
            std = out_scale / np.sqrt(fan_in)
        params.append(rng.normal(0.0, std, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


@dataclass
class MLPCache:
    inputs: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    masks: list = field(default_factory=list)


def mlp_forward(params: Sequence[np.ndarray], x: np.ndarray, dropout_rate: float = 0.0,
                train_mode: bool = False, rng: np.random.Generator | None = None):
    """ReLU hidden layers, each followed by inverted dropout in train mode.

    Returns ``(output, cache)``; ``x`` may be a single vector or a batch.
    """
    h = np.atleast_2d(np.asarray(x, dtype=float))
    if h.shape[1] != params[0].shape[0]:
        raise ShapeMismatch(f"input width {h.shape[1]} != first layer {params[0].shape[0]}")
    cache = MLPCache()
    n_layers = len(params) // 2
    for i in range(n_layers):
        W, b = params[2 * i], params[2 * i + 1]
        cache.inputs.append(h)
        z = h @ W + b
        if i == n_layers - 1:
            return z, cache
        cache.pre.append(z)
        h = np.maximum(z, 0.0)
        if train_mode and dropout_rate > 0.0:
            if rng is None:
                raise ValueError("train-mode dropout needs an rng")
            mask = (rng.random(h.shape) >= dropout_rate) / (1.0 - dropout_rate)
            h = h * mask
        else:
            mask = None
        cache.masks.append(mask)
    raise ShapeMismatch("MLP needs at least one layer")


def mlp_backward(params: Sequence[np.ndarray], cache: MLPCache, grad_out: np.ndarray):
    """Gradients w.r.t. params and the input, given dLoss/dOutput."""
    grads = [None] * len(params)
    g = np.atleast_2d(grad_out)
    n_layers = len(params) // 2
    for i in reversed(range(n_layers)):
        W = params[2 * i]
        h_in = cache.inputs[i]
        grads[2 * i] = h_in.T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ W.T
        if i > 0:
            mask = cache.masks[i - 1]
            if mask is not None:
                g = g * mask
            g = g * (cache.pre[i - 1] > 0)
    return grads, g


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_by_global_norm(grads: list[np.ndarray], max_norm: float | None) -> tuple[list[np.ndarray], float]:
    norm = global_norm(grads)
    if max_norm is not None and norm > max_norm > 0:
        scale = max_norm / (norm + 1e-12)
        grads = [g * scale for g in grads]
    return grads, norm


class Adam:
    def __init__(self, params: Sequence[np.ndarray], beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: Sequence[np.ndarray], lr: float) -> list[np.ndarray]:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / (1 - b1 ** self.t)
            v_hat = self.v[i] / (1 - b2 ** self.t)
            out.append(p - lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return out

    def state(self) -> dict:
        return {"t": self.t, "m": [a.copy() for a in self.m], "v": [a.copy() for a in self.v]}

    def load_state(self, st: dict) -> None:
        self.t = st["t"]
        self.m = [a.copy() for a in st["m"]]
        self.v = [a.copy() for a in st["v"]]


def finite_difference_check(loss: Callable[[list[np.ndarray]], float], params: list[np.ndarray],
                            grads: Sequence[np.ndarray], n_coords: int, rng: np.random.Generator,
                            h: float = 1e-6) -> list[tuple[int, tuple, float, float, float]]:
    """Compare analytic ``grads`` to central differences at random coordinates.

    Returns ``(array_index, coord, analytic, numeric, rel_error)`` tuples.
    """
    sizes = np.array([p.size for p in params])
    results = []
    for _ in range(n_coords):
        k = int(rng.choice(len(params), p=sizes / sizes.sum()))
        idx = tuple(int(rng.integers(s)) for s in params[k].shape)
        plus = [p.copy() for p in params]
        minus = [p.copy() for p in params]
        plus[k][idx] += h
        minus[k][idx] -= h
        num = (loss(plus) - loss(minus)) / (2 * h)
        ana = float(grads[k][idx])
        rel = abs(num - ana) / max(abs(num), abs(ana), 1e-8)
        results.append((k, idx, ana, num, rel))
    return results
