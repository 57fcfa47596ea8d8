"""Proximal policy optimisation with clipped surrogate, GAE and minibatch epochs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..core import EmptyTrace, MicrogridError
from ..env.reward import METRIC_KEYS, episode_metrics
from .nn import HIDDEN_SIZES, Adam, clip_by_global_norm, mlp_backward
from .policy import PolicyParams, act, entropy, forward, log_prob, log_softmax


class NaNLoss(MicrogridError, FloatingPointError):
    """A loss or gradient became non-finite; parameters were left untouched."""


@dataclass(frozen=True)
class PPOConfig:
    clip_eps: float = 0.2
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 10
    minibatch_size: int = 64
    lr_initial: float = 3e-4
    lr_final: float = 1e-4
    max_policy_std: float = 1.0
    std_reset_value: float = 0.5
    rollout_len: int = 2016
    max_grad_norm: float = 0.5
    target_kl: float | None = 0.03
    dropout_rate: float = 0.1
    hidden: tuple = HIDDEN_SIZES
    init_log_std: float = -0.5
    normalize_advantages: bool = True
    reward_scale: float = 1.0
    sample_train_mode: bool = False  # dropout while collecting rollouts
    update_train_mode: bool = True   # dropout inside the gradient steps

    def __post_init__(self):
        if not 0 < self.clip_eps < 1:
            raise ValueError("clip_eps must lie in (0, 1)")
        if not (0 < self.gamma <= 1 and 0 < self.gae_lambda <= 1):
            raise ValueError("gamma and gae_lambda must lie in (0, 1]")
        if self.lr_final > self.lr_initial:
            raise ValueError("lr_final must not exceed lr_initial")
        if not 0 < self.std_reset_value <= self.max_policy_std:
            raise ValueError("std_reset_value must lie in (0, max_policy_std]")
        if self.epochs < 1 or self.minibatch_size < 1 or self.rollout_len < 1:
            raise ValueError("epochs, minibatch_size and rollout_len must be positive")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.as_dict(), sort_keys=True).encode()).hexdigest()


def lr_schedule(progress: float, lr_initial: float, lr_final: float) -> float:
    if not 0.0 <= progress <= 1.0:
        raise ValueError("progress must lie in [0, 1]")
    return lr_initial + progress * (lr_final - lr_initial)


def std_clamp_callback(params: PolicyParams, max_policy_std: float, std_reset_value: float) -> PolicyParams:
    """When any std exceeds the maximum, set every std to ``min(std, reset)``."""
    if params.log_std is None:
        raise ValueError("std clamp needs a continuous policy")
    std = np.exp(params.log_std)
    if not np.any(std > max_policy_std):
        return params
    out = params.copy()
    out.log_std = np.log(np.minimum(std, std_reset_value))
    return out


# ---------------------------------------------------------------- GAE & buffer

def gae(rewards, values, dones, gamma: float, lam: float, last_value: float = 0.0):
    """Advantages and returns. ``dones[t]`` stops bootstrapping past step ``t``;
    ``last_value`` bootstraps after the final step."""
    r = np.asarray(rewards, dtype=float)
    v = np.asarray(values, dtype=float)
    d = np.asarray(dones, dtype=float)
    if not (r.shape == v.shape == d.shape):
        raise ValueError("rewards, values and dones must have equal lengths")
    n = r.size
    adv = np.zeros(n)
    nxt_adv = 0.0
    for t in reversed(range(n)):
        nxt_v = last_value if t == n - 1 else v[t + 1]
        keep = 1.0 - d[t]
        delta = r[t] + gamma * nxt_v * keep - v[t]
        nxt_adv = delta + gamma * lam * keep * nxt_adv
        adv[t] = nxt_adv
    return adv, adv + v


class RolloutBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_shape: tuple = ()):
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, *act_shape))
        self.log_probs = np.zeros(capacity)
        self.rewards = np.zeros(capacity)
        self.values = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.advantages = np.zeros(capacity)
        self.returns = np.zeros(capacity)
        self.size = 0
        self.ready = False

    @property
    def full(self) -> bool:
        return self.size == self.capacity

    def add(self, obs, action, log_prob_old, reward, value, done) -> None:
        if self.full:
            raise IndexError("rollout buffer is full")
        i = self.size
        self.obs[i] = obs
        self.actions[i] = action
        self.log_probs[i] = log_prob_old
        self.rewards[i] = reward
        self.values[i] = value
        self.dones[i] = float(done)
        self.size += 1

    def compute(self, last_value: float, gamma: float, lam: float, normalize: bool = True) -> None:
        if not self.full:
            raise ValueError("buffer must be full before computing advantages")
        adv, ret = gae(self.rewards, self.values, self.dones, gamma, lam, last_value)
        self.returns = ret
        if normalize:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        self.advantages = adv
        self.ready = True

    def batch(self, idx) -> "Batch":
        return Batch(self.obs[idx], self.actions[idx], self.log_probs[idx], self.advantages[idx],
                     self.returns[idx])


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    log_prob_old: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray


# ---------------------------------------------------------------- losses

@dataclass
class LossInfo:
    L_clip: float
    L_vf: float
    entropy: float
    L_total: float
    approx_kl: float
    grads: list | None = field(default=None, repr=False)


def clipped_surrogate(ratio, advantages, eps: float) -> np.ndarray:
    ratio = np.asarray(ratio, dtype=float)
    adv = np.asarray(advantages, dtype=float)
    return np.minimum(ratio * adv, np.clip(ratio, 1 - eps, 1 + eps) * adv)


def ppo_losses(batch: Batch, params: PolicyParams, config: PPOConfig, with_grads: bool = False,
               train_mode: bool = False, rng: np.random.Generator | None = None) -> LossInfo:
    """Losses ``L_clip`` (to maximise), ``L_vf``, mean entropy and the minimised
    ``L_total = -L_clip + vf_coef * L_vf - ent_coef * entropy``."""
    n = batch.obs.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    if not np.all(np.isfinite(batch.log_prob_old)):
        raise ValueError("log_prob_old must be finite")
    out = forward(params, batch.obs, train_mode=train_mode, rng=rng)
    logp = log_prob(params, out.head, batch.actions)
    ratio = np.exp(logp - batch.log_prob_old)
    A = batch.advantages
    surr = clipped_surrogate(ratio, A, config.clip_eps)
    L_clip = float(surr.mean())
    err = out.value - batch.returns
    L_vf = float(np.mean(err * err))
    ent = entropy(params, out.head)
    S = float(ent.mean())
    L_total = -L_clip + config.vf_coef * L_vf - config.ent_coef * S
    kl = float(np.mean(batch.log_prob_old - logp))
    info = LossInfo(L_clip, L_vf, S, L_total, kl)
    if not np.isfinite([L_clip, L_vf, S, L_total]).all():
        raise NaNLoss(f"non-finite loss: L_clip={L_clip}, L_vf={L_vf}, entropy={S}")
    if not with_grads:
        return info

    # d L_total / d logp: only samples where the unclipped branch is selected
    unclipped = ratio * A <= np.clip(ratio, 1 - config.clip_eps, 1 + config.clip_eps) * A
    g_logp = -np.where(unclipped, ratio * A, 0.0) / n
    g_value = config.vf_coef * 2.0 * err / n

    grad_log_std = None
    if params.kind == "discrete":
        lsm = log_softmax(out.head)
        p = np.exp(lsm)
        onehot = np.zeros_like(p)
        onehot[np.arange(n), np.asarray(batch.actions, dtype=int).reshape(-1)] = 1.0
        g_head = g_logp[:, None] * (onehot - p)
        dS_dz = -p * (lsm + ent[:, None])
        g_head += (-config.ent_coef / n) * dS_dz
    else:
        inv_var = np.exp(-2.0 * params.log_std)
        diff = batch.actions.reshape(out.head.shape) - out.head
        g_head = g_logp[:, None] * diff * inv_var
        g_ls = (g_logp[:, None] * (diff * diff * inv_var - 1.0)).sum(axis=0)
        grad_log_std = g_ls - config.ent_coef * np.ones_like(params.log_std)

    g_pol, _ = mlp_backward(params.policy, out.caches[0], g_head)
    g_val, _ = mlp_backward(params.value, out.caches[1], g_value[:, None])
    grads = list(g_pol) + list(g_val)
    if grad_log_std is not None:
        grads.append(grad_log_std)
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise NaNLoss("non-finite gradient")
    info.grads = grads
    return info


@dataclass
class UpdateStats:
    L_clip: float
    L_vf: float
    entropy: float
    approx_kl: float
    epochs_run: int
    grad_norm: float


def update(params: PolicyParams, buffer: RolloutBuffer, config: PPOConfig, lr: float,
           rng: np.random.Generator, optimizer: Adam | None = None) -> tuple[PolicyParams, UpdateStats]:
    """Shuffled minibatch epochs on ``buffer``; early stop when approximate KL
    exceeds ``config.target_kl``. Raises :class:`NaNLoss` without touching the
    inputs (the optimizer state is rolled back too)."""
    if not buffer.ready:
        raise ValueError("compute advantages before updating")
    optimizer = optimizer or Adam(params.arrays())
    saved = optimizer.state()
    arrays = [a.copy() for a in params.arrays()]
    n = buffer.size
    stats = []
    epochs_run = 0
    norm = 0.0
    try:
        for _ in range(config.epochs):
            epochs_run += 1
            perm = rng.permutation(n)
            kls = []
            for s in range(0, n, config.minibatch_size):
                idx = perm[s:s + config.minibatch_size]
                cur = params.with_arrays(arrays)
                info = ppo_losses(buffer.batch(idx), cur, config, with_grads=True,
                                  train_mode=config.update_train_mode, rng=rng)
                grads, norm = clip_by_global_norm(info.grads, config.max_grad_norm)
                arrays = optimizer.step(arrays, grads, lr)
                stats.append((info.L_clip, info.L_vf, info.entropy))
                kls.append(info.approx_kl)
            if not all(np.all(np.isfinite(a)) for a in arrays):
                raise NaNLoss("parameters became non-finite")
            if config.target_kl is not None and float(np.mean(kls)) > config.target_kl:
                break
    except NaNLoss:
        optimizer.load_state(saved)
        raise
    m = np.mean(stats, axis=0)
    new = params.with_arrays(arrays)
    kl = ppo_losses(buffer.batch(np.arange(n)), new, config).approx_kl
    return new, UpdateStats(float(m[0]), float(m[1]), float(m[2]), kl, epochs_run, norm)


# ---------------------------------------------------------------- training loop

CURVE_COLUMNS = ("update_index", "mean_reward", "L_clip", "L_vf", "entropy", "lr", "policy_std")


def _act_shape(env) -> tuple:
    return () if hasattr(env, "n_actions") else (int(env.action_dim),)


def _act_dim(env) -> int:
    return int(env.n_actions) if hasattr(env, "n_actions") else int(env.action_dim)


def init_params(env, config: PPOConfig, rng: np.random.Generator) -> PolicyParams:
    kind = "discrete" if hasattr(env, "n_actions") else "continuous"
    return PolicyParams.init(env.obs_dim, _act_dim(env), kind, rng, config.hidden,
                             config.dropout_rate, config.init_log_std)


def train(env, config: PPOConfig, total_steps: int, rng: np.random.Generator,
          params: PolicyParams | None = None):
    """Rollout, GAE, update and std clamp, repeated ``total_steps // rollout_len`` times.

    Returns ``(params, curve)`` where ``curve`` is a list of dicts keyed by
    :data:`CURVE_COLUMNS`; ``mean_reward`` is the mean return of episodes
    finished during that rollout (the mean partial return if none finished).
    """
    n_updates = total_steps // config.rollout_len
    if n_updates < 1:
        raise ValueError("total_steps must cover at least one rollout")
    params = params or init_params(env, config, rng)
    optimizer = Adam(params.arrays())
    buf_shape = _act_shape(env)
    curve = []
    obs = env.reset(rng)
    ep_ret = 0.0
    for u in range(n_updates):
        lr = lr_schedule(u / max(n_updates - 1, 1), config.lr_initial, config.lr_final)
        buf = RolloutBuffer(config.rollout_len, env.obs_dim, buf_shape)
        finished = []
        for _ in range(config.rollout_len):
            a, lp, v = act(params, obs, rng, train_mode=config.sample_train_mode)
            nxt, r, done, _ = env.step(a)
            buf.add(obs, a, lp, r * config.reward_scale, v, done)
            ep_ret += r
            if done:
                finished.append(ep_ret)
                ep_ret = 0.0
                nxt = env.reset(rng)
            obs = nxt
        last_v = float(forward(params, obs).value[0])
        buf.compute(last_v, config.gamma, config.gae_lambda, config.normalize_advantages)
        params, st = update(params, buf, config, lr, rng, optimizer)
        if params.kind == "continuous":
            params = std_clamp_callback(params, config.max_policy_std, config.std_reset_value)
        mean_reward = float(np.mean(finished)) if finished else ep_ret
        std = float(np.mean(np.exp(params.log_std))) if params.log_std is not None else 0.0
        curve.append({"update_index": u, "mean_reward": mean_reward, "L_clip": st.L_clip,
                      "L_vf": st.L_vf, "entropy": st.entropy, "lr": lr, "policy_std": std})
    return params, curve


def run_episode(policy, env, rng: np.random.Generator, start: int | None = None):
    """Play one episode with ``policy(obs, rng) -> action``; returns the total reward."""
    obs = env.reset(rng, start=start)
    total = 0.0
    done = False
    while not done:
        obs, r, done, _ = env.step(policy(obs, rng))
        total += r
    return total


def evaluate(params: PolicyParams, env, episodes: int, deterministic: bool = True,
             rng: np.random.Generator | None = None) -> dict:
    """Mean episode reward plus metrics averaged over ``episodes`` runs (eval-mode dropout)."""
    if episodes < 1:
        raise EmptyTrace("no episodes to evaluate")
    rng = rng if rng is not None else np.random.default_rng(0)
    returns, per_ep = [], []
    for _ in range(episodes):
        returns.append(run_episode(lambda o, g: act(params, o, g, deterministic)[0], env, rng))
        per_ep.append(episode_metrics(env.trace, env.scenario))
    out = {k: float(np.mean([m[k] for m in per_ep])) for k in METRIC_KEYS}
    out["mean_reward"] = float(np.mean(returns))
    return out


def random_policy(env):
    """Uniform random actions for ``env``."""
    if hasattr(env, "n_actions"):
        return lambda obs, rng: int(rng.integers(env.n_actions))
    lo, hi = env.action_low, env.action_high
    return lambda obs, rng: rng.uniform(lo, hi)
