"""Microgrid simulation environments."""

from .envs import (
    LAC_LAYOUT,
    MESA_OBS_DIM,
    RYE_LAYOUT,
    ContinuousMicrogridEnv,
    DiscreteMicrogridEnv,
    MicrogridEnv,
    make_env,
)
from .physics import (
    N_DISCRETE_ACTIONS,
    DiscreteAction,
    DispatchDecision,
    EpisodeFinished,
    initial_state,
    settle,
    step_continuous,
    step_discrete,
    step_inputs,
    transition,
)
from .reward import METRIC_KEYS, RewardWeights, episode_metrics, reward
from .trace import TRACE_COLUMNS, read_trace_csv, write_trace_csv

__all__ = [
    "ContinuousMicrogridEnv", "DiscreteAction", "DiscreteMicrogridEnv", "DispatchDecision",
    "EpisodeFinished", "LAC_LAYOUT", "MESA_OBS_DIM", "METRIC_KEYS", "MicrogridEnv",
    "N_DISCRETE_ACTIONS", "RYE_LAYOUT", "RewardWeights", "TRACE_COLUMNS", "episode_metrics",
    "initial_state", "make_env", "read_trace_csv", "reward", "settle", "step_continuous",
    "step_discrete", "step_inputs", "transition", "write_trace_csv",
]
