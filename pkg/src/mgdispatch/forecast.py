"""Ten-lag one-step forecasters: persistence, linear AR and single-head attention.

All models work on min-max normalised values in ``[0, 1]`` and clamp their
output to that range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .binio import dump_blob, load_blob
from .core import TimeSeries, seeded_rng

CONTEXT_LEN = 10
KINDS = ("persistence", "linear_ar", "attention")
MAGIC = b"MGFCAST\x00"
FORMAT_VERSION = 1


class TooShort(ValueError):
    pass


class BadContextLength(ValueError):
    pass


class NotNormalized(ValueError):
    pass


@dataclass(frozen=True)
class MinMaxScaler:
    lo: float
    hi: float

    @classmethod
    def fit(cls, values) -> "MinMaxScaler":
        v = np.asarray(values, dtype=float)
        return cls(float(v.min()), float(v.max()))

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def transform(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if self.span <= 0:
            return np.zeros_like(v)
        return (v - self.lo) / self.span

    def inverse(self, values) -> np.ndarray:
        return self.lo + np.asarray(values, dtype=float) * self.span


@dataclass(frozen=True)
class AttentionConfig:
    d_model: int = 16
    iterations: int = 1500
    lr: float = 1e-2
    seed: int = 0


@dataclass
class ForecastModel:
    kind: str
    params: dict = field(default_factory=dict)
    context_len: int = CONTEXT_LEN
    output_dim: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown forecaster kind {self.kind!r}")
        if self.context_len != CONTEXT_LEN:
            raise ValueError("context length is fixed at 10")


@dataclass(frozen=True)
class FitReport:
    mse: float
    train_mse: float
    n_train: int
    n_test: int


def windows(values: np.ndarray, context_len: int = CONTEXT_LEN) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(values, dtype=float)
    n = v.size - context_len
    idx = np.arange(context_len)[None, :] + np.arange(n)[:, None]
    return v[idx], v[context_len:]


# ---------------------------------------------------------------- attention


def init_attention(d: int, rng: np.random.Generator) -> dict:
    s = 1.0 / np.sqrt(d)
    return {
        "w_embed": rng.normal(0, 1.0, d),
        "b_embed": rng.normal(0, 0.1, d),
        "pos": rng.normal(0, 0.5, (CONTEXT_LEN, d)),
        "Wq": rng.normal(0, s, (d, d)),
        "Wk": rng.normal(0, s, (d, d)),
        "Wv": rng.normal(0, s, (d, d)),
        "w_out": rng.normal(0, s, d),
        "b_out": np.array([0.5]),
    }


def attention_forward(p: dict, X: np.ndarray):
    """Last-token query attends over the embedded lags; linear head on the result."""
    X = np.atleast_2d(X)
    d = p["w_embed"].size
    E = X[:, :, None] * p["w_embed"] + p["b_embed"] + p["pos"]
    q = E[:, -1, :] @ p["Wq"]
    K = E @ p["Wk"]
    V = E @ p["Wv"]
    scale = 1.0 / np.sqrt(d)
    s = np.einsum("nld,nd->nl", K, q) * scale
    s = s - s.max(axis=1, keepdims=True)
    a = np.exp(s)
    a /= a.sum(axis=1, keepdims=True)
    h = np.einsum("nl,nld->nd", a, V)
    y = h @ p["w_out"] + p["b_out"][0]
    return y, (X, E, q, K, V, a, h, scale)


def attention_backward(p: dict, cache, dy: np.ndarray) -> dict:
    X, E, q, K, V, a, h, scale = cache
    g = {"w_out": h.T @ dy, "b_out": np.array([dy.sum()])}
    dh = dy[:, None] * p["w_out"][None, :]
    da = np.einsum("nd,nld->nl", dh, V)
    dV = a[:, :, None] * dh[:, None, :]
    ds = a * (da - (a * da).sum(axis=1, keepdims=True))
    dK = ds[:, :, None] * q[:, None, :] * scale
    dq = np.einsum("nl,nld->nd", ds, K) * scale
    g["Wq"] = E[:, -1, :].T @ dq
    g["Wk"] = np.einsum("nld,nle->de", E, dK)
    g["Wv"] = np.einsum("nld,nle->de", E, dV)
    dE = dK @ p["Wk"].T + dV @ p["Wv"].T
    dE[:, -1, :] += dq @ p["Wq"].T
    g["w_embed"] = np.einsum("nld,nl->d", dE, X)
    g["b_embed"] = dE.sum(axis=(0, 1))
    g["pos"] = dE.sum(axis=0)
    return g


def attention_loss_and_grad(p: dict, X: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
    pred, cache = attention_forward(p, X)
    err = pred - y
    loss = float(np.mean(err ** 2))
    grads = attention_backward(p, cache, 2.0 * err / err.size)
    return loss, grads


def _fit_attention(X, y, cfg: AttentionConfig) -> dict:
    from .rl.nn import Adam  # deferred: the rl package imports env, which imports this module

    rng = seeded_rng(cfg.seed)
    p = init_attention(cfg.d_model, rng)
    names = sorted(p)
    opt = Adam([p[k] for k in names])
    best, best_loss = p, np.inf
    for it in range(cfg.iterations):
        lr = cfg.lr * (0.05 + 0.95 * 0.5 * (1 + np.cos(np.pi * it / cfg.iterations)))
        loss, g = attention_loss_and_grad(p, X, y)
        if loss < best_loss:
            best, best_loss = {k: v.copy() for k, v in p.items()}, loss
        new = opt.step([p[k] for k in names], [g[k] for k in names], lr)
        p = dict(zip(names, new))
    loss, _ = attention_loss_and_grad(p, X, y)
    return p if loss <= best_loss else best


# ---------------------------------------------------------------- public API


def _as_values(series) -> np.ndarray:
    v = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    return np.asarray(v, dtype=float).reshape(-1)


def fit(kind: str, series, train_cfg: AttentionConfig | None = None) -> tuple[ForecastModel, FitReport]:
    """Fit a forecaster on a normalised series; MSE is reported on the last 20% of windows."""
    if kind not in KINDS:
        raise ValueError(f"unknown forecaster kind {kind!r}")
    v = _as_values(series)
    if v.size < 50:
        raise TooShort(f"need at least 50 points, got {v.size}")
    if v.min() < -1e-12 or v.max() > 1 + 1e-12:
        raise NotNormalized("series must be min-max normalised to [0, 1] before fitting")
    X, y = windows(v)
    n_test = max(1, int(round(0.2 * len(y))))
    Xtr, ytr, Xte, yte = X[:-n_test], y[:-n_test], X[-n_test:], y[-n_test:]

    if kind == "persistence":
        model = ForecastModel(kind)
    elif kind == "linear_ar":
        A = np.hstack([Xtr, np.ones((len(Xtr), 1))])
        coef, *_ = np.linalg.lstsq(A, ytr, rcond=None)
        model = ForecastModel(kind, {"weights": coef[:-1], "bias": coef[-1:]})
    else:
        model = ForecastModel(kind, _fit_attention(Xtr, ytr, train_cfg or AttentionConfig()))

    report = FitReport(
        mse=float(np.mean((predict_batch(model, Xte) - yte) ** 2)),
        train_mse=float(np.mean((predict_batch(model, Xtr) - ytr) ** 2)),
        n_train=len(ytr),
        n_test=n_test,
    )
    return model, report


def predict_batch(model: ForecastModel, contexts) -> np.ndarray:
    C = np.atleast_2d(np.asarray(contexts, dtype=float))
    if C.shape[1] != model.context_len:
        raise BadContextLength(f"context must hold {model.context_len} values, got {C.shape[1]}")
    if not np.all(np.isfinite(C)):
        raise BadContextLength("context values must be finite")
    if model.kind == "persistence":
        out = C[:, -1]
    elif model.kind == "linear_ar":
        out = C @ model.params["weights"] + model.params["bias"][0]
    else:
        out, _ = attention_forward(model.params, C)
    return np.clip(out, 0.0, 1.0)


def predict(model: ForecastModel, context) -> float:
    c = np.asarray(context, dtype=float).reshape(-1)
    if c.size != model.context_len:
        raise BadContextLength(f"context must hold {model.context_len} values, got {c.size}")
    return float(predict_batch(model, c[None, :])[0])


def predict_horizon(model: ForecastModel, context, steps: int) -> list[float]:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return [float(x) for x in predict_horizon_batch(model, np.asarray(context, dtype=float)[None, :], steps)[0]]


def predict_horizon_batch(model: ForecastModel, contexts, steps: int) -> np.ndarray:
    """Recursive multi-step rollout; each prediction is appended to the window."""
    C = np.atleast_2d(np.asarray(contexts, dtype=float)).copy()
    out = np.empty((C.shape[0], steps))
    for k in range(steps):
        nxt = predict_batch(model, C)
        out[:, k] = nxt
        C = np.hstack([C[:, 1:], nxt[:, None]])
    return out


def rolling_contexts(values, context_len: int = CONTEXT_LEN) -> np.ndarray:
    """Context ending at each index; the start is padded with the first value."""
    v = np.asarray(values, dtype=float)
    padded = np.concatenate([np.full(context_len - 1, v[0]), v])
    idx = np.arange(context_len)[None, :] + np.arange(v.size)[:, None]
    return padded[idx]


def save(model: ForecastModel, path) -> None:
    arrays = {k: np.asarray(model.params[k], dtype=float) for k in sorted(model.params)}
    dump_blob(path, MAGIC, FORMAT_VERSION,
              {"kind": model.kind, "context_len": model.context_len, "output_dim": model.output_dim},
              arrays)


def load(path) -> ForecastModel:
    _, meta, arrays = load_blob(path, MAGIC, FORMAT_VERSION)
    return ForecastModel(meta["kind"], arrays, meta["context_len"], meta["output_dim"])
