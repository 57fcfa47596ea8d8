import json

import pytest

from mgdispatch.config import ConfigError, RunConfig, load_config


def _write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


def test_defaults_without_file():
    cfg = load_config()
    assert cfg == RunConfig()


def test_file_and_overrides(tmp_path):
    p = _write(tmp_path, 'seed = 3\n[scenario]\nsteps = 24\n[ppo]\nclip_eps = 0.1\n')
    cfg = load_config(p, {"seed": 9, "baseline.kind": "milp", "out": None})
    assert cfg.seed == 9 and cfg.scenario.steps == 24 and cfg.baseline.kind == "milp"
    assert cfg.ppo == {"clip_eps": 0.1} and cfg.out == "runs"


@pytest.mark.parametrize("text", ["bogus = 1\n", "[scenario]\nstepz = 3\n", "[nope]\nx = 1\n"])
def test_unknown_keys_rejected(tmp_path, text):
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(_write(tmp_path, text))


@pytest.mark.parametrize("text", ['seed = "a"\n', "[scenario]\nsteps = 2.5\n", "[env]\nrandom_start = 1\n",
                                  "scenario = 3\n", "[scenario]\nflat_price = true\n"])
def test_type_errors(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text))


def test_int_accepted_for_float(tmp_path):
    assert load_config(_write(tmp_path, "[scenario]\nflat_price = 1\n")).scenario.flat_price == 1.0


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.toml")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "seed = = 1\n"))


def test_snapshot_reproduces_config(tmp_path):
    cfg = load_config(None, {"seed": 4, "reward.w_unmet": 2.0, "scenario.source": "synth"})
    snap = json.loads(cfg.write_snapshot(tmp_path).read_text())
    assert snap["seed"] == 4 and snap["reward"] == {"w_unmet": 2.0}
    assert load_config().digest() != cfg.digest()
    sections = {k: v for k, v in snap.items() if isinstance(v, dict)}
    flat = {f"{s}.{k}": v for s, d in sections.items() for k, v in d.items()}
    flat.update({k: v for k, v in snap.items() if not isinstance(v, dict)})
    assert load_config(None, flat).digest() == cfg.digest()


def test_digest_subsets():
    a, b = load_config(None, {"seed": 1}), load_config(None, {"seed": 2})
    assert a.digest("ppo", "env") == b.digest("ppo", "env")
    assert a.digest() != b.digest()
