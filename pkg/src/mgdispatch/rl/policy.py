"""Actor-critic parameters and the action distributions they induce."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import HIDDEN_SIZES, init_mlp, mlp_forward

LOG_2PI = float(np.log(2 * np.pi))
KINDS = ("discrete", "continuous")


@dataclass
class PolicyParams:
    """Policy MLP (action head), value MLP (scalar head) and, for continuous
    actions, a state-independent ``log_std`` vector."""

    kind: str
    policy: list[np.ndarray]
    value: list[np.ndarray]
    log_std: np.ndarray | None = None
    dropout_rate: float = 0.1
    hidden: tuple = HIDDEN_SIZES

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.kind == "continuous" and self.log_std is None:
            raise ValueError("continuous policies need log_std")

    @classmethod
    def init(cls, obs_dim: int, act_dim: int, kind: str, rng: np.random.Generator,
             hidden=HIDDEN_SIZES, dropout_rate: float = 0.1, init_log_std: float = -0.5) -> "PolicyParams":
        hidden = tuple(int(h) for h in hidden)
        pol = init_mlp((obs_dim, *hidden, act_dim), rng, out_scale=0.01)
        val = init_mlp((obs_dim, *hidden, 1), rng, out_scale=1.0)
        log_std = np.full(act_dim, float(init_log_std)) if kind == "continuous" else None
        return cls(kind, pol, val, log_std, dropout_rate, hidden)

    @property
    def obs_dim(self) -> int:
        return self.policy[0].shape[0]

    @property
    def act_dim(self) -> int:
        return self.policy[-1].shape[0]

    def arrays(self) -> list[np.ndarray]:
        """Flat list in a fixed order: policy, value, then ``log_std`` if present."""
        out = list(self.policy) + list(self.value)
        if self.log_std is not None:
            out.append(self.log_std)
        return out

    def with_arrays(self, arrays: list[np.ndarray]) -> "PolicyParams":
        n_p, n_v = len(self.policy), len(self.value)
        log_std = arrays[n_p + n_v] if self.log_std is not None else None
        return PolicyParams(self.kind, list(arrays[:n_p]), list(arrays[n_p:n_p + n_v]), log_std,
                            self.dropout_rate, self.hidden)

    def copy(self) -> "PolicyParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


# ---------------------------------------------------------------- distributions

def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def categorical_entropy(logp: np.ndarray) -> np.ndarray:
    return -(np.exp(logp) * logp).sum(axis=-1)


def gaussian_log_prob(actions: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    z = (actions - mean) * np.exp(-log_std)
    return (-0.5 * z * z - log_std - 0.5 * LOG_2PI).sum(axis=-1)


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float(np.sum(0.5 * (1.0 + LOG_2PI) + log_std))


@dataclass
class PolicyOutput:
    head: np.ndarray           # logits or means, (n, act_dim)
    value: np.ndarray          # (n,)
    caches: tuple = field(default=(None, None), repr=False)


def forward(params: PolicyParams, obs: np.ndarray, train_mode: bool = False,
            rng: np.random.Generator | None = None) -> PolicyOutput:
    rate = params.dropout_rate if train_mode else 0.0
    head, pc = mlp_forward(params.policy, obs, rate, train_mode, rng)
    v, vc = mlp_forward(params.value, obs, rate, train_mode, rng)
    return PolicyOutput(head, v[:, 0], (pc, vc))


def log_prob(params: PolicyParams, head: np.ndarray, actions: np.ndarray) -> np.ndarray:
    if params.kind == "discrete":
        a = np.asarray(actions, dtype=int).reshape(-1)
        return log_softmax(head)[np.arange(a.size), a]
    return gaussian_log_prob(np.asarray(actions, dtype=float).reshape(head.shape), head, params.log_std)


def entropy(params: PolicyParams, head: np.ndarray) -> np.ndarray:
    if params.kind == "discrete":
        return categorical_entropy(log_softmax(head))
    return np.full(head.shape[0], gaussian_entropy(params.log_std))


def act(params: PolicyParams, obs: np.ndarray, rng: np.random.Generator, deterministic: bool = False,
        train_mode: bool = False):
    """One action for a single observation: ``(action, log_prob, value)``."""
    out = forward(params, obs, train_mode=train_mode, rng=rng)
    head = out.head[0]
    if params.kind == "discrete":
        logp = log_softmax(head)
        a = int(np.argmax(logp)) if deterministic else int(rng.choice(logp.size, p=np.exp(logp)))
        return a, float(logp[a]), float(out.value[0])
    if deterministic:
        a = head.copy()
    else:
        a = head + np.exp(params.log_std) * rng.standard_normal(head.shape)
    lp = float(gaussian_log_prob(a[None, :], head[None, :], params.log_std)[0])
    return a, lp, float(out.value[0])
