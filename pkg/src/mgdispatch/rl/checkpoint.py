"""Policy checkpoints: layer shapes, weights and the hash of the training config."""

from __future__ import annotations

from ..binio import FormatError, dump_blob, load_blob
from ..core import MicrogridError
from .policy import PolicyParams

MAGIC = b"MGPPOCK\x00"
VERSION = 1


class CheckpointMismatch(MicrogridError, ValueError):
    pass


def save_checkpoint(path, params: PolicyParams, config_hash: str, extra: dict | None = None) -> None:
    arrays = {f"policy.{i}": a for i, a in enumerate(params.policy)}
    arrays.update({f"value.{i}": a for i, a in enumerate(params.value)})
    if params.log_std is not None:
        arrays["log_std"] = params.log_std
    meta = {"kind": params.kind, "dropout_rate": params.dropout_rate, "hidden": list(params.hidden),
            "config_hash": config_hash, "extra": dict(extra or {})}
    dump_blob(path, MAGIC, VERSION, meta, arrays)


def load_checkpoint(path, expected_hash: str | None = None) -> tuple[PolicyParams, dict]:
    """Raises :class:`CheckpointMismatch` when ``expected_hash`` differs from the stored one."""
    _, meta, arrays = load_blob(path, MAGIC, VERSION)
    n_pol = sum(1 for k in arrays if k.startswith("policy."))
    n_val = sum(1 for k in arrays if k.startswith("value."))
    if n_pol == 0 or n_val == 0:
        raise FormatError(f"{path}: checkpoint has no network weights")
    params = PolicyParams(
        kind=meta["kind"],
        policy=[arrays[f"policy.{i}"] for i in range(n_pol)],
        value=[arrays[f"value.{i}"] for i in range(n_val)],
        log_std=arrays.get("log_std"),
        dropout_rate=float(meta["dropout_rate"]),
        hidden=tuple(meta["hidden"]),
    )
    if expected_hash is not None and meta["config_hash"] != expected_hash:
        raise CheckpointMismatch(
            f"checkpoint config hash mismatch: {meta['config_hash'][:12]} != current {expected_hash[:12]}")
    return params, meta
