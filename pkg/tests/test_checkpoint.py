import numpy as np
import pytest

from mgdispatch.binio import FormatError
from mgdispatch.core import seeded_rng
from mgdispatch.rl.checkpoint import CheckpointMismatch, load_checkpoint, save_checkpoint
from mgdispatch.rl.policy import PolicyParams


@pytest.mark.parametrize("kind", ["discrete", "continuous"])
def test_round_trip(tmp_path, kind):
    p = PolicyParams.init(6, 4, kind, seeded_rng(0), (8, 4, 2), 0.15)
    path = tmp_path / "c.bin"
    save_checkpoint(path, p, "abc123", {"steps": 10})
    back, meta = load_checkpoint(path, "abc123")
    assert path.read_bytes()[:8] == b"MGPPOCK\x00"
    assert back.kind == kind and back.dropout_rate == 0.15 and back.hidden == (8, 4, 2)
    assert all(np.array_equal(a, b) for a, b in zip(back.arrays(), p.arrays()))
    assert meta["extra"] == {"steps": 10}


def test_hash_mismatch(tmp_path):
    p = PolicyParams.init(3, 7, "discrete", seeded_rng(0), (4, 4, 2))
    save_checkpoint(tmp_path / "c.bin", p, "aaa")
    with pytest.raises(CheckpointMismatch):
        load_checkpoint(tmp_path / "c.bin", "bbb")
    load_checkpoint(tmp_path / "c.bin")


def test_truncated_file(tmp_path):
    p = PolicyParams.init(3, 7, "discrete", seeded_rng(0), (4, 4, 2))
    path = tmp_path / "c.bin"
    save_checkpoint(path, p, "aaa")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FormatError):
        load_checkpoint(path)
