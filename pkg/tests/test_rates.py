import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oseenlab.errors import ConfigurationError, InputError
from oseenlab.rates import SweepRow, fit_exponent, load_plan, sweep

T = np.geomspace(1, 100, 20)


def test_exact_power_law():
    fit = fit_exponent(T, 3 * T**-1.5)
    assert fit.slope == pytest.approx(-1.5, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0) and not fit.log_curvature
    assert fit.n_points == 20 and fit.window == (1.0, 100.0)


def test_log_factor_is_flagged():
    t = np.geomspace(1e2, 1e4, 30)
    fit = fit_exponent(t, np.log(t) / t)
    assert -1 < fit.slope < -0.85
    assert fit.log_curvature


@pytest.mark.parametrize(
    "times, values",
    [(T[:7], T[:7] ** -1.0), (T, -T), (T, np.where(T > 50, 0.0, 1.0)), (T, T.copy() * np.nan)],
)
def test_fit_input_errors(times, values):
    with pytest.raises(InputError):
        fit_exponent(times, values)


def test_window_selection():
    values = np.where(T < 10, T**-2.0, 100 * T**-4.0)
    assert fit_exponent(np.geomspace(1, 100, 40), np.where(np.geomspace(1, 100, 40) < 10, 0, 1) + 1, (1, 9)).slope == 0
    fit = fit_exponent(np.geomspace(10, 100, 40), 100 * np.geomspace(10, 100, 40) ** -4.0, (10, 100))
    assert fit.slope == pytest.approx(-4)
    with pytest.raises(InputError):
        fit_exponent(T, values, (5, 5))


@given(st.floats(-3, 1), st.floats(1e-6, 1e6))
def test_slope_ignores_amplitude_and_window_half(p, amp):
    t = np.geomspace(1, 1000, 24)
    full = fit_exponent(t, amp * t**p)
    half = fit_exponent(t, amp * t**p, (math.sqrt(1000), 1000))
    assert full.slope == pytest.approx(p, abs=1e-9)
    assert abs(full.slope - half.slope) < 0.03


def test_heat_sanity_sweep():
    res = sweep(load_plan("plans/heat_sanity.json"))
    slopes = {r.name: r.fit.slope for r in res.rows}
    assert res.pass_count == 3 and res.fail_count == 0
    assert slopes["heat-1-inf"] == pytest.approx(-1.5, abs=0.05)
    assert slopes["heat-2-inf"] == pytest.approx(-0.75, abs=0.05)
    assert slopes["heat-2-2"] == pytest.approx(0.0, abs=0.05)


def test_guard_violation_is_per_row():
    rows = [
        dict(name="ok", a=1, q="2", r="2", t_min=0.5, t_max=2, n_times=8, n=64, predicted="0"),
        dict(name="too-long", a=1, q="2", r="2", t_min=4, t_max=400, n_times=8, n=64, half_width=16, predicted="0"),
    ]
    res = sweep(rows)
    by = {r.name: r for r in res.rows}
    assert by["ok"].passed
    assert by["too-long"].status == "guard" and 0 < by["too-long"].max_safe_t < 400
    assert res.guard_failures == [by["too-long"]]


def test_predictions_from_region_engine():
    row = SweepRow("r", a=1, alpha="0.2", beta="0.2", q="3", r="3", rule="four-term")
    assert row.query().drift == "positive"
    res = sweep([dict(name="w", a=1, alpha="0.2", beta="0.2", q="3", r="3", rule="four-term", n=64, t_min=1, t_max=4,
                      n_times=8)])
    assert str(res.rows[0].predicted) == "3/10" and res.rows[0].rule == "four-term"


def test_inapplicable_rule_runs_without_prediction():
    res = sweep([dict(name="x", a=1, alpha="0.9", beta="0.2", q="3", r="3", rule="four-term", n=32, t_min=0.5, t_max=1,
                      n_times=8)])
    row = res.rows[0]
    assert row.status == "no-prediction" and not row.passed and row.fit is not None


def test_amplitude_does_not_change_verdict():
    base = dict(a=1, q="2", r="2", t_min=0.5, t_max=2, n_times=8, n=64, predicted="-1")
    res = sweep([dict(name="unit", **base), dict(name="scaled", amplitude=1e3, **base)])
    one, big = res.rows
    assert one.fit.slope == pytest.approx(big.fit.slope, abs=1e-10)
    assert one.passed == big.passed


@pytest.mark.parametrize(
    "row",
    [dict(name="a", data="random"), dict(name="a", deriv=2), dict(name="a", t_min=3, t_max=2), dict(name="a", n=100),
     dict(name="a", q="abc"), dict(name="a", colour="red"), dict(name="a", n_times=4)],
)
def test_bad_rows(row):
    with pytest.raises(ConfigurationError):
        SweepRow.from_dict(row)


def test_duplicate_names_rejected():
    with pytest.raises(ConfigurationError):
        sweep([dict(name="a"), dict(name="a")])


def test_outputs(tmp_path):
    res = sweep([dict(name="h", a=0, q="2", r="2", t_min=0.5, t_max=2, n_times=8, n=32, predicted="0")])
    assert res.to_csv().splitlines()[0].startswith("name,status,passed,predicted")
    summary = res.summary()
    assert list(summary) == ["pass_count", "fail_count", "rows"]
    json.dumps(summary)
    assert res.series_csv().splitlines()[0] == "name,t,value,guard_ratio"


def test_plan_file_errors(tmp_path):
    p = tmp_path / "plan.json"
    p.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_plan(p)
    p.write_text(json.dumps({"rows": 3}))
    with pytest.raises(ConfigurationError):
        load_plan(p)
