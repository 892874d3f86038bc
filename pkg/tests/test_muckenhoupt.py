import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oseenlab.errors import ConfigurationError, InputError
from oseenlab.muckenhoupt import AqScan, aq_ratio, aq_scan_classify, default_centers
from oseenlab.quadrature import BallIntegralSpec, ball_integral_mc
from oseenlab.weights import WeightSpec, is_muckenhoupt_admissible


def test_constant_weight_ratio_is_one():
    assert aq_ratio(WeightSpec(0, 0), 3.0, (1.0, 2.0, 0.0), 5.0) == pytest.approx(1.0, rel=1e-12)


def test_unit_ball_against_monte_carlo():
    w, q = WeightSpec(0, 0.5), 2.0
    vol = 4 * np.pi / 3
    a, _ = ball_integral_mc(BallIntegralSpec(0, 0.5, 1.0), 10**6, seed=1)
    b, _ = ball_integral_mc(BallIntegralSpec(0, -0.5, 1.0), 10**6, seed=2)
    val = aq_ratio(w, q, (0, 0, 0), 1.0)
    assert val >= 1
    assert val == pytest.approx((a / vol) * (b / vol), rel=5e-3)


def test_rejects_small_q():
    with pytest.raises(InputError):
        aq_ratio(WeightSpec(0, 0), 1.0, (0, 0, 0), 1.0)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(-2, 2), st.floats(-0.9, 1.5), st.floats(1.1, 4), st.floats(0.1, 50),
    st.tuples(st.floats(-30, 30), st.floats(-30, 30), st.floats(-30, 30)),
)
def test_ratio_at_least_one(a, b, q, r, c):
    assert aq_ratio(WeightSpec(a, b), q, c, r) >= 1 - 1e-9


def test_default_centers_layout():
    cs = default_centers(8.0)
    assert cs[0] == ("origin", (0.0, 0.0, 0.0))
    assert len(cs) == 10
    assert ("-e1*4r", (-32.0, -0.0, -0.0)) in cs


def test_config_errors():
    with pytest.raises(ConfigurationError):
        AqScan(WeightSpec(0, 0), 2, radii=np.logspace(0, 1.5, 10))
    with pytest.raises(ConfigurationError):
        AqScan(WeightSpec(0, 0), 1)
    with pytest.raises(ConfigurationError):
        AqScan(WeightSpec(0, 0), 2, radii=[1, 2, 3])


def test_constant_weight_scan():
    res = aq_scan_classify(AqScan(WeightSpec(0, 0), 2))
    assert res.verdict == "bounded"
    assert np.allclose(res.sup_ratio, 1, atol=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize(
    "alpha, beta, q, label, slope",
    [
        (0.4, 0.4, 2, "bounded", 0.0),
        (0, 0.5, 2, "bounded", 0.0),
        (0, 1.2, 2, "power", 0.2),          # beta > q-1
        (0, -1.5, 2, "power", 0.5),         # beta < -1
        (0, -1, 2, "log", None),            # beta = -1
        (0, 1, 2, "log", None),             # beta = q-1
        (-3, 0, 2, "log", None),            # alpha+beta = -3
        (3, 0, 2, "log", None),             # alpha+beta = 3(q-1)
        (-2.7, -0.8, 2, "power", 0.5),      # alpha+beta < -3
        (7, 0, 2, "power", 4.0),            # alpha+beta > 3(q-1)
    ],
)
def test_growth_regimes(alpha, beta, q, label, slope):
    w = WeightSpec(alpha, beta)
    res = aq_scan_classify(AqScan(w, q))
    assert res.label == label
    if slope is not None:
        assert res.slope == pytest.approx(slope, abs=0.05)
    assert (label == "bounded") == bool(is_muckenhoupt_admissible(w, q))


@pytest.mark.slow
def test_admissible_scan_stays_near_small_ball_value():
    res = aq_scan_classify(AqScan(WeightSpec(0.4, 0.4), 2))
    assert res.sup_ratio.max() < 10 * res.sup_ratio[0]
    assert abs(res.scan_slope) < 0.05


def test_power_verdict_format():
    res = aq_scan_classify(AqScan(WeightSpec(0, 1.2), 2, radii=np.logspace(0, 2, 9), centers=[]))
    assert res.verdict == "power(0.21)"


@pytest.mark.parametrize("alpha", [-2.0, 0.0, 3.0, 7.0])
def test_far_balls_bounded_regardless_of_alpha(alpha):
    # balls with r <= |x|/2 see an almost constant weight when -1 < beta < q-1
    vals = [aq_ratio(WeightSpec(alpha, 0.5), 2, (-2 * r, 0, 0), r) for r in np.logspace(0, 3, 7)]
    vals += [aq_ratio(WeightSpec(alpha, 0.5), 2, (0, 2 * r, 0), r) for r in np.logspace(0, 3, 7)]
    assert max(vals) < 1 + 0.5 * alpha**2 + 2


def test_translation_is_continuous():
    w = WeightSpec(0.5, 0.5)
    ys = np.linspace(0, 4, 41)
    vals = np.array([aq_ratio(w, 2, (3.0, y, 0.0), 2.0) for y in ys])
    assert np.max(np.abs(np.diff(vals))) < 0.05


def test_csv_export_has_header():
    res = aq_scan_classify(AqScan(WeightSpec(0.1, 0.1), 2, radii=np.logspace(0, 2, 9)))
    lines = res.to_csv().splitlines()
    assert lines[0] == "center_label,center_x,center_y,center_z,radius,ratio"
    assert len(lines) == 1 + 9 * 10
