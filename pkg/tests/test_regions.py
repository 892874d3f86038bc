from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oseenlab.errors import DomainError, InputError
from oseenlab.regions import RULES, RateQuery, check, eta_table, optimal_gradient_range, to_rational

# (query kwargs, {rule: exponents}, optimality flag), worked out by hand
GOLDEN = [
    (dict(drift="zero", deriv=1, q=2, r=3),
     {"wake-gradient": (F(-3, 4), F(-3, 4)), "volume-gradient": (F(-3, 4), F(-3, 4)), "stokes-volume": (F(-3, 4),)}, False),
    (dict(drift="zero", deriv=1, q=2, r=4), {}, True),
    (dict(drift="zero", deriv=1, q=2, r=6, alpha=F(1, 2)),
     {"volume-gradient": (F(-1), F(-3, 4)), "stokes-volume": (F(-1),)}, False),
    (dict(drift="zero", deriv=1, q=2, r=7, alpha=F(1, 2)), {}, True),
    (dict(drift="zero", deriv=1, q=F(3, 2), r=2, alpha=F(1, 2), dual_weight=True),
     {"stokes-dual-volume": (F(-3, 4),)}, False),
    (dict(drift="zero", deriv=1, q=F(3, 2), r=F(5, 2), alpha=F(1, 2), dual_weight=True), {}, True),
    (dict(drift="zero", deriv=1, q=2, r=3, dual_weight=True), {"stokes-dual-volume": (F(-3, 4),)}, False),
    (dict(drift="positive", q=3, r=3, alpha=F(2, 5), beta=F(1, 5)),
     {"four-term": (F(0), F(2, 5), F(1, 10), F(1, 2))}, False),
    (dict(drift="positive", q=3, r=3, alpha=F(2, 5), beta=F(1, 5), epsilon=F(1, 20)),
     {"four-term": (F(0), F(2, 5), F(1, 10), F(1, 2)), "improved": (F(1, 4),)}, False),
    (dict(drift="zero", q=3, r=3, alpha=F(2, 5), beta=F(1, 5)),
     {"four-term": (F(0), F(1, 5), F(1, 10), F(3, 10))}, False),
    (dict(drift="positive", q=2, r=2, alpha=F(1, 2), beta=F(1, 3)), {}, False),
    (dict(drift="positive", q=F(3, 2), r=3, alpha=F(2, 5), beta=F(1, 5)),
     {"four-term": (F(-1, 2), F(-1, 10), F(-2, 5), F(0))}, False),
    (dict(drift="positive", deriv=1, q=2, r=4, alpha=F(1, 2), beta=F(1, 5)),
     {"four-term-gradient": (F(-7, 8), F(-3, 8), F(-31, 40), F(-11, 40))}, False),
    (dict(drift="positive", deriv=1, q=2, r=11, alpha=F(1, 2), beta=F(1, 5)), {}, False),
    (dict(drift="positive", deriv=1, q=2, r=20, alpha=F(4, 5), beta=F(1, 10)),
     {"four-term-gradient": (F(-47, 40), F(-3, 8), F(-9, 8), F(-13, 40))}, False),
    (dict(drift="dual", deriv=1, q=2, r=2, alpha=F(3, 10), beta=F(1, 10)), {"dual-gradient": (F(-3, 20),)}, False),
    (dict(drift="positive", deriv="div", q=2, r=3, alpha=F(1, 5), beta=F(1, 5)), {"div-form": (F(-9, 20),)}, False),
    (dict(drift="positive", deriv="div", q=F(4, 3), r=2, alpha=F(1, 5), beta=F(1, 5)), {}, False),
    (dict(drift="positive", deriv=1, q=2, r="inf", alpha=F(1, 2), beta=F(1, 3), regime="small-time"),
     {"small-time": (F(-5, 4),)}, False),
    (dict(drift="positive", deriv=1, q=2, r=2, alpha=F(1, 5), beta=F(1, 5), epsilon=F(1, 20)),
     {"four-term-gradient": (F(-1, 2), F(-3, 10), F(-2, 5), F(-1, 5)), "improved": (F(-3, 10),)}, False),
]


def test_golden_table_size():
    assert len(GOLDEN) == 20


@pytest.mark.parametrize("kwargs, expected, flag", GOLDEN)
def test_golden_table(kwargs, expected, flag):
    v = check(RateQuery(**kwargs))
    got = {e.rule: e.exponents for e in v.applicable}
    assert got == expected
    assert v.optimality_flag is flag
    assert all(isinstance(x, F) for e in v.applicable for x in e.exponents)


def test_eta_table_values():
    eta, gamma, delta = eta_table(F(2, 5), F(1, 5), "positive")
    assert eta == (0, F(2, 5), F(1, 10), F(1, 2))
    assert gamma == (F(2, 5), 0, F(2, 5), 0) and delta == (F(1, 5), F(1, 5), 0, 0)
    assert eta_table(0, 0, "zero")[0] == (0, 0, 0, 0)
    assert eta_table("0.4", "0.2", "zero")[0] == (0, F(1, 5), F(1, 10), F(3, 10))


@given(st.fractions(0, 1), st.fractions(0, 1))
def test_drift_costs_half_alpha_more(alpha, beta):
    pos = eta_table(alpha, beta, "positive")[0]
    zero = eta_table(alpha, beta, "zero")[0]
    assert pos[1] - zero[1] == alpha / 2 and pos[3] - zero[3] == alpha / 2
    assert pos[0] == zero[0] and pos[2] == zero[2]


@pytest.mark.parametrize("alpha, dual, upper", [(0, False, 3), (0, True, 3), (F(1, 2), False, 6), (F(1, 2), True, 2)])
def test_optimal_gradient_range(alpha, dual, upper):
    rng = optimal_gradient_range(alpha, dual)
    assert rng.upper == upper and rng.beyond_impossible
    assert upper in rng and F(upper) + F(1, 1000) not in rng


def test_optimal_range_rejects_alpha_one():
    with pytest.raises(DomainError):
        optimal_gradient_range(1)
    with pytest.raises(DomainError):
        optimal_gradient_range(F(-1, 10))


@pytest.mark.parametrize(
    "kwargs",
    [dict(q=1, r=2), dict(q=3, r=2), dict(q=2, r=3, alpha=-1), dict(q="x", r=3), dict(q=2, r=3, drift="up"),
     dict(q=2, r=3, deriv=2), dict(q=2, r=3, epsilon=0), dict(q=2, r=3, qs=(2, 2, 2))],
)
def test_malformed_queries(kwargs):
    with pytest.raises(InputError):
        RateQuery(**kwargs)


def test_to_rational_is_exact():
    assert to_rational("0.4") == F(2, 5) and to_rational(0.4) == F(2, 5)
    assert to_rational("3/2") == F(3, 2)
    with pytest.raises(InputError):
        to_rational("1/0")


def test_endpoint_semantics():
    # r = 3/(1-alpha) is allowed, the four-term weight sum is strict
    assert check(RateQuery(2, 6, alpha=F(1, 2), drift="zero", deriv=1)).get("stokes-volume")
    v = check(RateQuery(3, 3, alpha=F(2, 3), beta=F(1, 3)))
    assert not v.get("four-term")
    assert ("four-term", "alpha+beta < min(3(1-1/q1), 1)") in v.violated


def test_whole_space_never_flags_optimality():
    v = check(RateQuery(2, 4, drift="zero", deriv=1, setting="whole-space"))
    assert not v.optimality_flag


def test_missing_epsilon_reported():
    v = check(RateQuery(3, 3, alpha=F(1, 5), beta=F(1, 5)))
    assert ("improved", "epsilon > 0 given") in v.violated


def test_rule_ids_unique():
    ids = [r.id for r in RULES]
    assert len(ids) == len(set(ids))


rationals = st.fractions(min_value=F(61, 60), max_value=10, max_denominator=60)
weights = st.fractions(min_value=0, max_value=1, max_denominator=60)


@given(rationals, rationals, weights, weights)
def test_dual_gradient_matches_div_form_by_duality(q, r, alpha, beta):
    assume(q <= r)
    # conjugate exponents swap roles
    qd, rd = 1 / (1 - 1 / r), 1 / (1 - 1 / q)
    dual = check(RateQuery(q, r, alpha, beta, drift="dual", deriv=1)).get("dual-gradient")
    div = check(RateQuery(qd, rd, alpha, beta, drift="positive", deriv="div")).get("div-form")
    assert (dual is None) == (div is None)
    if dual:
        assert dual.exponents == div.exponents


@settings(max_examples=200)
@given(rationals, rationals, weights, weights, st.fractions(0, 1), st.sampled_from(["positive", "zero"]))
def test_shrinking_weights_keeps_four_term(q, r, alpha, beta, shrink, drift):
    assume(q <= r)
    if check(RateQuery(q, r, alpha, beta, drift=drift)).get("four-term"):
        assert check(RateQuery(q, r, alpha * shrink, beta * shrink, drift=drift)).get("four-term")
