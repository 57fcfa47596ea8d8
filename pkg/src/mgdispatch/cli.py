"""Command-line driver.

Exit codes: 0 ok, 2 configuration error, 3 infeasible MILP window,
4 training divergence, 5 checkpoint/config mismatch.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .core import MicrogridConfig, MicrogridError, Scenario, TieredTariff, TimeSeries, seeded_rng
from .dispatch import Infeasible, NoIncumbent, receding_horizon_run, run_rule_baseline
from .env import DiscreteMicrogridEnv, RewardWeights, make_env
from .env.reward import METRIC_KEYS
from .env.trace import read_trace_csv, write_trace_csv
from .binio import FormatError
from .ingest import (
    EmptyFile,
    GapTooLong,
    IncompatibleResolution,
    MissingColumn,
    ZeroPeak,
    read_series_csv,
    rescale_test_to_train,
)
from .rl import (
    CURVE_COLUMNS,
    CheckpointMismatch,
    NaNLoss,
    PPOConfig,
    act,
    load_checkpoint,
    random_policy,
    run_episode,
    save_checkpoint,
    train,
)
from .scenario_io import ScenarioFormatError, load_scenario, write_scenario
from .synth import SolarPlant, SynthParams, generate_scenario, synthetic_weather, toy_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_DIVERGED, EXIT_MISMATCH = 0, 2, 3, 4, 5
METRICS_SCHEMA_VERSION = 1
PRESETS = {"default": MicrogridConfig, "rye": MicrogridConfig.rye,
           "lac_megantic": MicrogridConfig.lac_megantic, "mesa": MicrogridConfig.mesa}
POLICY_SECTIONS = ("env", "reward", "ppo")  # hashed into checkpoints

log = logging.getLogger("mgdispatch")


class UnknownField(MicrogridError, KeyError):
    pass


# bad configuration or input files: exit 2
INPUT_ERRORS = (ConfigError, UnknownField, MissingColumn, EmptyFile, GapTooLong, IncompatibleResolution,
                ZeroPeak, ScenarioFormatError, FormatError)


# ---------------------------------------------------------------- scenario assembly

def _build(factory, kwargs: dict, what: str):
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what} settings: {exc}") from exc


def microgrid_config(cfg: RunConfig, base: MicrogridConfig | None = None) -> MicrogridConfig:
    if base is not None:
        return _build(lambda **kw: dataclasses.replace(base, **kw), dict(cfg.microgrid), "microgrid")
    preset = cfg.scenario.preset
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    return _build(PRESETS[preset], dict(cfg.microgrid), "microgrid")


def _apply_price(sc: Scenario, cfg: RunConfig) -> Scenario:
    s = cfg.scenario
    if s.price == "flat":
        flat = TimeSeries(sc.load.start_epoch, sc.load.resolution, np.full(sc.horizon, s.flat_price), "CAD/kWh")
        return dataclasses.replace(sc, price=flat)
    if s.price == "tariff":
        return dataclasses.replace(sc, price=TieredTariff(s.tier1_limit_kwh_per_day, s.tier1_rate, s.tier2_rate))
    raise ConfigError(f"scenario.price must be 'tariff' or 'flat', got {s.price!r}")


def synth_scenario(cfg: RunConfig, rng: np.random.Generator) -> Scenario:
    s = cfg.scenario
    mg = microgrid_config(cfg)
    if s.weather == "synthetic":
        weather = synthetic_weather(s.start_epoch, s.steps, mg.step_seconds, rng)
    else:
        path = Path(s.weather)
        if not path.is_file():
            raise ConfigError(f"weather file not found: {path}")
        weather = read_series_csv(path, {"temperature": "degC", "irradiance": "W/m2"},
                                  resolution=mg.step_seconds)
    sy = cfg.synth
    params = SynthParams(plant=SolarPlant(sy.panel_area_m2, sy.efficiency), n_buildings=sy.n_buildings,
                         scale=sy.scale, mult_sigma=sy.mult_sigma, add_sigma=sy.add_sigma)
    sc = generate_scenario(mg, weather, rng, params, name="synthetic")
    return _apply_price(sc, cfg)


def build_scenario(cfg: RunConfig, rng: np.random.Generator) -> Scenario:
    s = cfg.scenario
    if s.source == "toy":
        sc = toy_scenario(steps=s.steps, start_epoch=s.start_epoch)
        if cfg.microgrid:
            sc = dataclasses.replace(sc, config=microgrid_config(cfg, base=sc.config))
        return _apply_price(sc, cfg)
    if s.source == "synth":
        return synth_scenario(cfg, rng)
    path = Path(s.source)
    if not (path / "manifest.json").is_file():
        raise ConfigError(f"scenario directory not found or has no manifest: {path}")
    return load_scenario(path)


def reward_weights(cfg: RunConfig) -> RewardWeights:
    return _build(RewardWeights, dict(cfg.reward), "reward")


def ppo_config(cfg: RunConfig) -> PPOConfig:
    return _build(PPOConfig, dict(cfg.ppo), "ppo")


def build_env(cfg: RunConfig, scenario: Scenario):
    e = cfg.env
    kwargs = dict(weights=reward_weights(cfg), episode_steps=e.episode_steps or None,
                  random_start=e.random_start)
    if e.kind == "discrete":
        kwargs["layout"] = e.layout
    elif e.kind != "continuous":
        raise ConfigError(f"env.kind must be 'discrete' or 'continuous', got {e.kind!r}")
    return make_env(e.kind, scenario, **kwargs)


# ---------------------------------------------------------------- outputs

def write_metrics(path: Path, metrics: dict, extra: dict | None = None) -> None:
    doc = {"schema_version": METRICS_SCHEMA_VERSION, "metrics": {k: float(metrics[k]) for k in METRIC_KEYS}}
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_curve(path: Path, curve: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for row in curve:
            w.writerow([row["update_index"]] + [repr(float(row[c])) for c in CURVE_COLUMNS[1:]])


def export_plot(trace_path, fields: list[str], out_path) -> int:
    """Long-format ``step,field,value`` rows; returns the number of rows written."""
    header, rows = read_trace_csv(trace_path)
    unknown = [f for f in fields if f not in header or f == "step"]
    if unknown or not fields:
        valid = [h for h in header if h != "step"]
        raise UnknownField(f"unknown field(s) {', '.join(unknown) or '(none given)'}; "
                           f"valid fields: {', '.join(valid)}")
    n = 0
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "field", "value"])
        for f in fields:
            for row in rows:
                w.writerow([row["step"], f, row[f]])
                n += 1
    return n


# ---------------------------------------------------------------- commands

def cmd_synth(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    rng = seeded_rng(cfg.seed)
    sc = synth_scenario(cfg, rng)
    manifest = write_scenario(out / "scenario", sc, cfg.digest("seed", "scenario", "microgrid", "synth"))
    cfg.write_snapshot(out)
    print(manifest)
    return EXIT_OK


def cmd_baseline(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write_snapshot(out)
    sc = build_scenario(cfg, seeded_rng(cfg.seed))
    b = cfg.baseline
    extra = {"baseline": b.kind}
    if b.kind == "rule":
        env = DiscreteMicrogridEnv(sc, weights=reward_weights(cfg))
        env = run_rule_baseline(sc, b.variant, env=env)
    elif b.kind == "milp":
        res = receding_horizon_run(sc, b.window_steps or None, b.mode, b.objective_mode,
                                   b.time_limit_s or None, backend=b.backend, exclusivity=b.exclusivity)
        env = res.env
        extra["solver"] = {"statuses": res.statuses, "objectives": res.objectives}
    else:
        raise ConfigError(f"baseline.kind must be 'rule' or 'milp', got {b.kind!r}")
    write_trace_csv(out / "trace.csv", env.trace, env.actions, env.rewards, sc)
    write_metrics(out / "metrics.json", env.metrics(), extra)
    print(json.dumps(env.metrics(), sort_keys=True))
    return EXIT_OK


def _train_once(cfg: RunConfig, pcfg: PPOConfig):
    rng = seeded_rng(cfg.seed)
    sc = build_scenario(cfg, rng)
    env = build_env(cfg, sc)
    params, curve = train(env, pcfg, cfg.train.total_steps, rng)
    return sc, env, params, curve


def cmd_train(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write_snapshot(out)
    pcfg = ppo_config(cfg)
    try:
        sc, env, params, curve = _train_once(cfg, pcfg)
    except NaNLoss as exc:
        log.warning("training diverged (%s); retrying with halved learning rates", exc)
        pcfg = dataclasses.replace(pcfg, lr_initial=pcfg.lr_initial / 2, lr_final=pcfg.lr_final / 2)
        try:
            sc, env, params, curve = _train_once(cfg, pcfg)
        except NaNLoss as exc2:
            print(f"error: training diverged twice: {exc2}", file=sys.stderr)
            return EXIT_DIVERGED
    save_checkpoint(out / "checkpoint.bin", params, cfg.digest(*POLICY_SECTIONS))
    write_curve(out / "learning_curve.csv", curve)

    eval_rng = seeded_rng(cfg.seed + 1)
    n = max(cfg.train.eval_episodes, 1)
    rand = random_policy(env)
    random_mean = float(np.mean([run_episode(rand, env, eval_rng, start=0) for _ in range(n)]))
    trained_mean = float(np.mean([run_episode(lambda o, g: act(params, o, g, True)[0], env, eval_rng, start=0)
                                  for _ in range(n)]))
    summary = {"updates": len(curve), "final_mean_reward": curve[-1]["mean_reward"],
               "eval_mean_reward": trained_mean, "random_mean_reward": random_mean}
    (out / "train_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _rescaled(sc: Scenario, reference: Path) -> Scenario:
    if not reference.is_file():
        raise ConfigError(f"train reference file not found: {reference}")
    ref = read_series_csv(reference, {"load": "kW"})["load"]
    load = rescale_test_to_train(sc.load, ref)
    ratio = np.divide(load.values, sc.load.values, out=np.ones(sc.horizon), where=sc.load.values > 0)
    parts = {k: v.with_values(v.values * ratio) for k, v in sc.load_parts.items()}
    return dataclasses.replace(sc, load=load, load_parts=parts)


def cmd_evaluate(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    ckpt = Path(args.checkpoint) if args.checkpoint else out / "checkpoint.bin"
    if not ckpt.is_file():
        raise ConfigError(f"checkpoint not found: {ckpt}")
    try:
        params, _ = load_checkpoint(ckpt, expected_hash=cfg.digest(*POLICY_SECTIONS))
    except CheckpointMismatch as exc:
        if not args.force:
            print(f"error: {exc} (use --force to evaluate anyway)", file=sys.stderr)
            return EXIT_MISMATCH
        log.warning("%s; continuing because of --force", exc)
        params, _ = load_checkpoint(ckpt)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write_snapshot(out)
    rng = seeded_rng(cfg.seed)
    sc = build_scenario(cfg, rng)
    if args.train_reference:
        sc = _rescaled(sc, Path(args.train_reference))
    env = build_env(cfg, sc)
    if env.obs_dim != params.obs_dim:
        print(f"error: checkpoint expects {params.obs_dim} observations, env has {env.obs_dim}",
              file=sys.stderr)
        return EXIT_MISMATCH
    run_episode(lambda o, g: act(params, o, g, deterministic=True)[0], env, rng, start=0)
    write_trace_csv(out / "trace.csv", env.trace, env.actions, env.rewards, sc)
    write_metrics(out / "metrics.json", env.metrics(), {"mean_reward": float(sum(env.rewards))})
    print(json.dumps(env.metrics(), sort_keys=True))
    return EXIT_OK


def cmd_export_plot(cfg: RunConfig, args) -> int:
    trace = Path(args.trace) if args.trace else Path(cfg.out) / "trace.csv"
    if not trace.is_file():
        raise ConfigError(f"trace file not found: {trace}")
    fields = [f.strip() for f in args.fields.split(",") if f.strip()]
    target = Path(args.output) if args.output else Path(cfg.out) / "plot_data.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    n = export_plot(trace, fields, target)
    print(f"{target} ({n} rows)")
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--out", help="output directory (overrides config)")

    p = argparse.ArgumentParser(prog="mgdispatch", description="Microgrid dispatch toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="generate a synthetic scenario directory")

    b = sub.add_parser("baseline", parents=[common], help="run the rule-based or MILP baseline")
    b.add_argument("--kind", choices=("rule", "milp"), help="baseline type (overrides config)")
    b.add_argument("--solver-time-limit", type=float, help="seconds per MILP window")

    sub.add_parser("train", parents=[common], help="train a PPO policy")

    e = sub.add_parser("evaluate", parents=[common], help="evaluate a trained checkpoint")
    e.add_argument("--checkpoint", help="checkpoint file (default OUT/checkpoint.bin)")
    e.add_argument("--train-reference", help="CSV with a training 'load' column for peak rescaling")
    e.add_argument("--force", action="store_true", help="evaluate despite a config hash mismatch")

    x = sub.add_parser("export-plot", parents=[common], help="convert a trace to long-format plot data")
    x.add_argument("--trace", help="trace CSV (default OUT/trace.csv)")
    x.add_argument("--fields", required=True, help="comma-separated trace columns")
    x.add_argument("--output", help="target CSV (default OUT/plot_data.csv)")
    return p


COMMANDS = {"synth": cmd_synth, "baseline": cmd_baseline, "train": cmd_train,
            "evaluate": cmd_evaluate, "export-plot": cmd_export_plot}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "out": args.out}
    if args.command == "baseline":
        overrides["baseline.kind"] = args.kind
        overrides["baseline.time_limit_s"] = args.solver_time_limit
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except CheckpointMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except INPUT_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (Infeasible, NoIncumbent) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
