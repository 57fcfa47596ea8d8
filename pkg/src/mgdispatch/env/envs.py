"""Gym-style microgrid environments.

Discrete environments expose the seven legal actions of
:class:`~mgdispatch.env.physics.DiscreteAction`; the continuous environment
takes ``[battery, fuel_cell, generator, island]``.

Observation layouts (all entries in ``[0, 1]``):

* ``rye``  ``[solar, wind, load, price, hour_sin, hour_cos, forecast_solar, forecast_wind, soc]``
* ``lac``  ``[solar, load, soc, price, forecast_solar, hour_sin, hour_cos]``
* ``mesa`` 9 current entries ``[solar, wind, critical, non_critical, essential, soc, connected,
  hour_sin, hour_cos]``, then 4-step forecasts for the same five signals (signal-major, 20
  entries), then ``[price, fuel_cell_level, generator_level]``: 32 in total.
"""

from __future__ import annotations

import numpy as np

from ..core import MicrogridState, Scenario, TieredTariff
from ..forecast import ForecastModel, MinMaxScaler, predict_horizon_batch, rolling_contexts
from .physics import (
    N_DISCRETE_ACTIONS,
    DispatchDecision,
    EpisodeFinished,
    continuous_decision,
    discrete_decision,
    initial_state,
    step_inputs,
    transition,
)
from .reward import RewardWeights, episode_metrics, reward

RYE_LAYOUT = ("solar", "wind", "load", "price", "hour_sin", "hour_cos",
              "forecast_solar", "forecast_wind", "soc")
LAC_LAYOUT = ("solar", "load", "soc", "price", "forecast_solar", "hour_sin", "hour_cos")
MESA_SIGNALS = ("solar", "wind", "critical", "non_critical", "essential")
MESA_FORECAST_STEPS = 4
MESA_OBS_DIM = 32


def _persistence() -> ForecastModel:
    return ForecastModel("persistence")


class MicrogridEnv:
    """Common machinery: normalisation, forecasts, state bookkeeping, trace."""

    forecast_steps = 1
    forecast_signals: tuple = ()

    def __init__(self, scenario: Scenario, weights: RewardWeights | None = None,
                 forecasters: dict | None = None, episode_steps: int | None = None,
                 random_start: bool = False):
        self.scenario = scenario
        self.weights = weights or RewardWeights()
        self.episode_steps = min(episode_steps or scenario.horizon, scenario.horizon)
        self.random_start = random_start
        self.forecasters = dict(forecasters or {})
        self._norm = self._normalised_signals()
        ep = scenario.epochs
        hour = (ep % 86400) / 3600.0
        self._hour_sin = 0.5 * (1 + np.sin(2 * np.pi * hour / 24))
        self._hour_cos = 0.5 * (1 + np.cos(2 * np.pi * hour / 24))
        self._forecasts = {
            name: predict_horizon_batch(self.forecasters.get(name) or _persistence(),
                                        rolling_contexts(self._norm[name]), self.forecast_steps)
            for name in self.forecast_signals
        }
        if isinstance(scenario.price, TieredTariff):
            self._price_norm = None
        else:
            self._price_norm = MinMaxScaler.fit(scenario.price.values).transform(scenario.price.values)
        self.state: MicrogridState | None = None
        self.start = 0
        self.trace: list[MicrogridState] = []
        self.actions: list = []
        self.rewards: list[float] = []

    def _normalised_signals(self) -> dict:
        sc = self.scenario
        raw = {"solar": sc.solar.values, "load": sc.load.values,
               "wind": sc.wind.values if sc.wind is not None else np.zeros(sc.horizon)}
        parts = dict(sc.load_parts)
        raw["critical"] = parts["critical"].values if "critical" in parts else sc.load.values
        for k in ("non_critical", "essential"):
            raw[k] = parts[k].values if k in parts else np.zeros(sc.horizon)
        return {k: MinMaxScaler.fit(v).transform(v) for k, v in raw.items()}

    # ------------------------------------------------------------ lifecycle

    @property
    def end(self) -> int:
        return self.start + self.episode_steps

    @property
    def done(self) -> bool:
        return self.state is not None and self.state.step_index >= self.end

    def reset(self, rng: np.random.Generator | None = None, start: int | None = None) -> np.ndarray:
        if start is None:
            start = 0
            if self.random_start and rng is not None and self.episode_steps < self.scenario.horizon:
                start = int(rng.integers(0, self.scenario.horizon - self.episode_steps + 1))
        self.start = start
        self.state = initial_state(self.scenario, start)
        self.trace, self.actions, self.rewards = [], [], []
        return self.observation()

    def apply(self, decision: DispatchDecision, action=None, **levels):
        """Advance one step with an explicit decision (used by baselines)."""
        if self.state is None:
            raise RuntimeError("call reset() first")
        if self.done:
            raise EpisodeFinished("episode already finished")
        self.state = transition(self.state, decision, self.scenario, **levels)
        r = reward(self.state, self.weights)
        self.trace.append(self.state)
        self.actions.append(action)
        self.rewards.append(r)
        return self.observation(), r, self.done, {"state": self.state, "decision": decision}

    def metrics(self) -> dict:
        return episode_metrics(self.trace, self.scenario)

    def step_inputs(self):
        return step_inputs(self.state, self.scenario)

    # ------------------------------------------------------------ observations

    def _price_now(self, t: int) -> float:
        price = self.scenario.price
        if isinstance(price, TieredTariff):
            day_import = self.state.day_import_kwh
            if t > 0 and self.trace:
                ep = self.scenario.load.start_epoch + t * self.scenario.load.resolution
                if ep // 86400 != (ep - self.scenario.load.resolution) // 86400:
                    day_import = 0.0
            return price.marginal_rate(day_import) / price.tier2_rate
        return float(self._price_norm[t])

    def _obs_index(self) -> int:
        return min(self.state.step_index, self.scenario.horizon - 1)

    def observation(self) -> np.ndarray:
        raise NotImplementedError


class DiscreteMicrogridEnv(MicrogridEnv):
    n_actions = N_DISCRETE_ACTIONS
    forecast_signals = ("solar", "wind")

    def __init__(self, scenario: Scenario, layout: str = "auto", **kwargs):
        if layout == "auto":
            layout = "rye" if scenario.wind is not None else "lac"
        if layout not in ("rye", "lac"):
            raise ValueError(f"unknown discrete layout {layout!r}")
        self.layout = layout
        super().__init__(scenario, **kwargs)
        self.obs_names = RYE_LAYOUT if layout == "rye" else LAC_LAYOUT
        self.obs_dim = len(self.obs_names)

    def observation(self) -> np.ndarray:
        t = self._obs_index()
        vals = {
            "solar": self._norm["solar"][t],
            "wind": self._norm["wind"][t],
            "load": self._norm["load"][t],
            "price": self._price_now(t),
            "hour_sin": self._hour_sin[t],
            "hour_cos": self._hour_cos[t],
            "forecast_solar": self._forecasts["solar"][t, 0],
            "forecast_wind": self._forecasts["wind"][t, 0],
            "soc": self.state.soc_fraction,
        }
        return np.array([vals[k] for k in self.obs_names], dtype=float)

    def step(self, action: int):
        a = int(action)
        if not 0 <= a < self.n_actions:
            raise ValueError(f"discrete action must be in [0, {self.n_actions - 1}], got {action}")
        if self.done:
            raise EpisodeFinished("episode already finished")
        return self.apply(discrete_decision(a, self.step_inputs()), action=a)


class ContinuousMicrogridEnv(MicrogridEnv):
    action_dim = 4
    action_low = np.array([-1.0, 0.0, 0.0, 0.0])
    action_high = np.array([1.0, 1.0, 1.0, 1.0])
    forecast_signals = MESA_SIGNALS
    forecast_steps = MESA_FORECAST_STEPS
    obs_dim = MESA_OBS_DIM

    def __init__(self, scenario: Scenario, **kwargs):
        super().__init__(scenario, **kwargs)
        self.obs_names = (
            list(MESA_SIGNALS) + ["soc", "connected", "hour_sin", "hour_cos"]
            + [f"forecast_{s}_{k + 1}" for s in MESA_SIGNALS for k in range(MESA_FORECAST_STEPS)]
            + ["price", "fuel_cell_level", "generator_level"]
        )

    def observation(self) -> np.ndarray:
        t = self._obs_index()
        st = self.state
        cur = [self._norm[s][t] for s in MESA_SIGNALS]
        cur += [st.soc_fraction, 0.0 if st.islanded else 1.0, self._hour_sin[t], self._hour_cos[t]]
        fc = [self._forecasts[s][t, k] for s in MESA_SIGNALS for k in range(MESA_FORECAST_STEPS)]
        tail = [self._price_now(t), st.fuel_cell_level, st.generator_level]
        return np.array(cur + fc + tail, dtype=float)

    def step(self, action):
        if self.done:
            raise EpisodeFinished("episode already finished")
        a = np.asarray(action, dtype=float).reshape(-1)
        a = np.clip(np.nan_to_num(a, nan=0.0), self.action_low, self.action_high)
        dec = continuous_decision(a, self.step_inputs(), self.scenario.config)
        return self.apply(dec, action=a.copy(), fuel_level=float(a[1]), generator_level=float(a[2]))


def make_env(kind: str, scenario: Scenario, **kwargs) -> MicrogridEnv:
    if kind == "discrete":
        return DiscreteMicrogridEnv(scenario, **kwargs)
    if kind == "continuous":
        return ContinuousMicrogridEnv(scenario, **kwargs)
    raise ValueError(f"unknown env kind {kind!r}; expected 'discrete' or 'continuous'")
