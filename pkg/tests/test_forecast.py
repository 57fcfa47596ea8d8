import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgdispatch.binio import FormatError
from mgdispatch.forecast import (
    BadContextLength,
    ForecastModel,
    MinMaxScaler,
    NotNormalized,
    TooShort,
    attention_loss_and_grad,
    fit,
    init_attention,
    load,
    predict,
    predict_batch,
    predict_horizon,
    save,
    windows,
)
from mgdispatch.rl.nn import finite_difference_check
from mgdispatch.core import seeded_rng


def sinusoid(n=300, period=10):
    return 0.5 + 0.5 * np.sin(2 * np.pi * np.arange(n) / period)


@pytest.fixture(scope="module")
def fitted_attention():
    return fit("attention", sinusoid())


def _identity_ar():
    w = np.zeros(10)
    w[-1] = 1.0
    return ForecastModel("linear_ar", {"weights": w, "bias": np.zeros(1)})


@pytest.mark.parametrize("kind", ["persistence", "linear_ar", "attention"])
def test_constant_series_fits_exactly(kind):
    model, rep = fit(kind, np.full(80, 0.3))
    assert rep.mse == pytest.approx(0.0, abs=1e-12)
    assert predict(model, [0.3] * 10) == pytest.approx(0.3, abs=1e-6)


def test_linear_ar_realizable_ar1():
    x = 0.9 ** np.arange(200)
    _, rep = fit("linear_ar", x)
    assert rep.mse <= 1e-6


def test_attention_sinusoid_mse(fitted_attention):
    _, rep = fitted_attention
    assert rep.mse < 1e-3


def test_attention_sinusoid_pointwise(fitted_attention):
    model, _ = fitted_attention
    X, y = windows(sinusoid())
    err = np.abs(predict_batch(model, X[-60:]) - y[-60:])
    assert err.max() < 0.05


def test_persistence_and_identity_ar():
    ctx = list(np.linspace(0, 0.7, 10))
    p = ForecastModel("persistence")
    assert predict(p, ctx) == 0.7
    assert predict(_identity_ar(), ctx) == predict(p, ctx)


def test_predict_horizon_examples():
    ctx = list(np.linspace(0.1, 0.6, 10))
    p = ForecastModel("persistence")
    assert predict_horizon(p, ctx, 5) == [0.6] * 5
    assert predict_horizon(p, ctx, 1) == [predict(p, ctx)]
    assert predict_horizon(_identity_ar(), ctx, 4) == pytest.approx([0.6] * 4, abs=1e-15)


def test_bad_inputs():
    with pytest.raises(BadContextLength):
        predict(ForecastModel("persistence"), [0.1] * 9)
    with pytest.raises(TooShort):
        fit("linear_ar", np.zeros(49))
    with pytest.raises(NotNormalized):
        fit("linear_ar", np.linspace(0, 2, 60))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=10, max_size=10))
def test_denormalised_prediction_within_observed_range(ctx):
    sc = MinMaxScaler.fit(ctx)
    for model in (ForecastModel("persistence"), _identity_ar()):
        out = float(sc.inverse(predict(model, sc.transform(ctx))))
        assert sc.lo - 1e-9 <= out <= sc.hi + 1e-9


def test_predict_is_deterministic(fitted_attention):
    model, _ = fitted_attention
    ctx = sinusoid(10)
    assert predict(model, ctx) == predict(model, ctx)


def test_attention_gradients_match_finite_differences():
    rng = seeded_rng(11)
    p = init_attention(6, rng)
    X = rng.random((16, 10))
    y = rng.random(16)
    names = sorted(p)
    _, g = attention_loss_and_grad(p, X, y)
    loss = lambda arrs: attention_loss_and_grad(dict(zip(names, arrs)), X, y)[0]  # noqa: E731
    res = finite_difference_check(loss, [p[k] for k in names], [g[k] for k in names], 20, rng, h=1e-6)
    worst = max(r[4] for r in res)
    assert worst < 1e-4, res


def test_save_load_round_trip(tmp_path, fitted_attention):
    model, _ = fitted_attention
    path = tmp_path / "m.bin"
    save(model, path)
    assert path.read_bytes()[:8] == b"MGFCAST\x00"
    back = load(path)
    ctx = sinusoid(10)
    assert back.kind == "attention" and predict(back, ctx) == predict(model, ctx)
    path.write_bytes(b"XXXXXXXX" + path.read_bytes()[8:])
    with pytest.raises(FormatError):
        load(path)
