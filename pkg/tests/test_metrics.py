import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from maclaurin_gp import InputError
from maclaurin_gp.metrics import APPROX_FIRST, EvalReport, kl_gaussian, rmse


def test_kl_identical():
    assert kl_gaussian(0.3, 2.0, 0.3, 2.0) == 0.0


def test_kl_shifted_mean():
    assert kl_gaussian(0.0, 1.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_kl_scaled_variance():
    value = kl_gaussian(0.0, 1.0, 0.0, math.e)
    assert value == pytest.approx(0.5 / math.e, rel=1e-14)
    assert round(value, 4) == 0.1839
    p, q = stats.norm(0, 1), stats.norm(0, math.sqrt(math.e))
    numeric, _ = integrate.quad(lambda t: p.pdf(t) * (p.logpdf(t) - q.logpdf(t)), -30, 30)
    assert value == pytest.approx(numeric, rel=1e-8)


def test_kl_direction_flag():
    forward = kl_gaussian(0.0, 1.0, 0.5, 3.0)
    backward = kl_gaussian(0.0, 1.0, 0.5, 3.0, direction=APPROX_FIRST)
    assert backward == pytest.approx(kl_gaussian(0.5, 3.0, 0.0, 1.0))
    assert forward != pytest.approx(backward)
    with pytest.raises(InputError):
        kl_gaussian(0, 1, 0, 1, direction="sideways")


def test_kl_rejects_nonpositive_variance():
    with pytest.raises(InputError):
        kl_gaussian(0.0, 0.0, 0.0, 1.0)
    with pytest.raises(InputError):
        kl_gaussian(0.0, 1.0, 0.0, -1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(1e-3, 1e3), st.floats(-10, 10), st.floats(1e-3, 1e3))
def test_kl_nonnegative(pm, pv, qm, qv):
    assert kl_gaussian(pm, pv, qm, qv) >= 0.0
    assert kl_gaussian(pm, pv, pm, pv) == 0.0


def test_kl_vectorized(rng):
    pm, qm = rng.normal(size=(2, 5))
    pv, qv = rng.uniform(0.1, 2, size=(2, 5))
    out = kl_gaussian(pm, pv, qm, qv)
    np.testing.assert_allclose(out, [kl_gaussian(*args) for args in zip(pm, pv, qm, qv)])


def test_rmse_examples():
    t = np.array([1.0, -2.0, 0.5])
    assert rmse(t, t) == 0.0
    assert rmse(t + 1, t) == pytest.approx(1.0)
    assert rmse([0, 0], [3, 4]) == pytest.approx(3.5355, abs=1e-4)
    with pytest.raises(InputError):
        rmse([], [])
    with pytest.raises(InputError):
        rmse([1.0], [1.0, 2.0])


def test_eval_report_consistency(rng):
    pm, qm, y = rng.normal(size=(3, 10))
    pv, qv = rng.uniform(0.1, 2, size=(2, 10))
    rep = EvalReport.from_predictions(pm, pv, qm, qv, y, config_echo={"method": "x"})
    assert rep.mean_kl == pytest.approx(np.mean(rep.per_point_kl))
    assert rep.sum_kl == pytest.approx(np.sum(rep.per_point_kl))
    assert np.all(rep.per_point_kl >= 0)
    assert rep.to_dict()["config_echo"] == {"method": "x"}
