"""Scenario directories: one CSV per series plus ``manifest.json``.

The manifest records hardware config, tariff, units, a SHA-256 per CSV and
the hash of the run config that produced the data. Loading verifies the
file hashes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

from .core import MicrogridConfig, MicrogridError, Scenario, TieredTariff, TimeSeries
from .ingest import read_series_csv, write_series_csv

MANIFEST = "manifest.json"
SCHEMA_VERSION = 1


class ScenarioFormatError(MicrogridError, ValueError):
    pass


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _named_series(sc: Scenario) -> dict[str, TimeSeries]:
    out = {"load": sc.load, "solar": sc.solar}
    if sc.wind is not None:
        out["wind"] = sc.wind
    if isinstance(sc.price, TimeSeries):
        out["price"] = sc.price
    if sc.sell_price is not None:
        out["sell_price"] = sc.sell_price
    out.update({f"load_parts.{k}": v for k, v in sorted(sc.load_parts.items())})
    out.update({f"weather.{k}": v for k, v in sorted(sc.weather.items())})
    return out


def write_scenario(directory, scenario: Scenario, config_hash: str = "") -> Path:
    """Write ``scenario`` into ``directory`` and return the manifest path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, ts in _named_series(scenario).items():
        fname = f"{name}.csv"
        write_series_csv(d / fname, {name: ts})
        files[name] = {"file": fname, "unit": ts.unit, "sha256": sha256_file(d / fname)}
    price = asdict(scenario.price) if isinstance(scenario.price, TieredTariff) else "series"
    data_hash = hashlib.sha256("".join(f["sha256"] for f in files.values()).encode()).hexdigest()
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "microgrid": asdict(scenario.config),
        "tariff": price,
        "resolution": scenario.load.resolution,
        "start_epoch": scenario.load.start_epoch,
        "steps": scenario.horizon,
        "series": files,
        "config_hash": config_hash,
        "data_sha256": data_hash,
    }
    path = d / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_scenario(directory) -> Scenario:
    d = Path(directory)
    mpath = d / MANIFEST
    if not mpath.is_file():
        raise FileNotFoundError(f"no {MANIFEST} in {d}")
    manifest = json.loads(mpath.read_text())
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioFormatError(f"{mpath}: unsupported schema_version {manifest.get('schema_version')}")
    res = int(manifest["resolution"])
    series = {}
    for name, entry in manifest["series"].items():
        fpath = d / entry["file"]
        if sha256_file(fpath) != entry["sha256"]:
            raise ScenarioFormatError(f"{fpath}: content does not match the manifest hash")
        series[name] = read_series_csv(fpath, {name: entry["unit"]}, resolution=res)[name]
    tariff = manifest["tariff"]
    price = series.get("price") if tariff == "series" else TieredTariff(**tariff)
    return Scenario(
        config=MicrogridConfig(**manifest["microgrid"]),
        load=series["load"],
        solar=series["solar"],
        price=price,
        wind=series.get("wind"),
        sell_price=series.get("sell_price"),
        load_parts={k.split(".", 1)[1]: v for k, v in series.items() if k.startswith("load_parts.")},
        weather={k.split(".", 1)[1]: v for k, v in series.items() if k.startswith("weather.")},
        name=manifest.get("name", "scenario"),
    )
