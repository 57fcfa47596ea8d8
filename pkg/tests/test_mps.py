from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgdispatch.dispatch import build_milp, export_model, mps_text, parse_lp, parse_mps, read_lp, read_mps
from mgdispatch.dispatch.bnb import branch_and_bound
from mgdispatch.dispatch.mps import ModelFormatError, lp_text

from milp_instances import random_instance

FIXTURES = Path(__file__).parent / "fixtures"


def _two_step():
    return build_milp([5.0, 5.0], [1.0, 3.0], 10.0, soc0=5.0, exclusivity="single",
                      objective_mode="cost_only")


def test_golden_mps():
    assert mps_text(_two_step().program) == (FIXTURES / "two_step_corrected.mps").read_text()


def test_golden_lp():
    assert lp_text(_two_step().program) == (FIXTURES / "two_step_corrected.lp").read_text()


def test_golden_mps_solves_to_example_cost():
    res = branch_and_bound(read_mps(FIXTURES / "two_step_corrected.mps"))
    assert -res.objective == pytest.approx(5.0, abs=1e-9)


def test_single_step_has_four_integer_columns():
    text = mps_text(build_milp([5.0], [1.0], 10.0).program)
    lines = text.splitlines()
    start, end = lines.index("    M0000000  'MARKER'                 'INTORG'"), \
        lines.index("    M0000001  'MARKER'                 'INTEND'")
    cols = {ln.split()[0] for ln in lines[start + 1:end]}
    assert cols == {"X100001", "X200001", "X300001", "X400001"}
    assert sum(parse_mps(text).integer) == 4


def test_fixed_columns():
    for ln in mps_text(_two_step().program).splitlines():
        if ln.startswith("    X") or ln.startswith("    Q"):
            assert ln[4] != " " and ln[12:14] == "  " and ln[14] != " "
            assert ln[24:36].strip() and ln[35] != " "


def test_export_is_deterministic(tmp_path):
    p = _two_step().program
    export_model(p, tmp_path / "a.mps")
    export_model(p, tmp_path / "b.mps")
    export_model(p, tmp_path / "a.lp", fmt="lp_text")
    assert (tmp_path / "a.mps").read_bytes() == (tmp_path / "b.mps").read_bytes()
    with pytest.raises(ValueError):
        export_model(p, tmp_path / "c.x", fmt="xml")


def test_long_names_rejected():
    p = _two_step().program
    p.var_names[0] = "TOO_LONG_NAME"
    with pytest.raises(ModelFormatError):
        mps_text(p)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_round_trip_same_optimum(seed):
    kw = random_instance(np.random.default_rng(seed))
    prog = build_milp(**kw).program
    want = branch_and_bound(prog).objective
    via_mps = parse_mps(mps_text(prog))
    via_lp = parse_lp(lp_text(prog))
    assert np.array_equal(via_mps.dense(), prog.dense())
    assert via_mps.var_names == prog.var_names and via_mps.integer == prog.integer
    assert branch_and_bound(via_mps).objective == pytest.approx(want, abs=1e-6)
    assert branch_and_bound(via_lp).objective == pytest.approx(want, abs=1e-6)


def test_read_lp_file(tmp_path):
    p = _two_step().program
    export_model(p, tmp_path / "m.lp", fmt="lp_text")
    back = read_lp(tmp_path / "m.lp")
    assert back.sense == "max" and back.n_rows == p.n_rows
