"""Exact-rational applicability checks for weighted L^q-L^r decay estimates.

Every estimate is a :class:`Rule`: a scope (drift, derivative, regime), a
list of labelled inequalities and a function giving the predicted time
exponents.  All arithmetic is done in :class:`fractions.Fraction`; an
infinite ``r`` is represented by ``math.inf`` and only ever compared, never
used in arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

from .errors import DomainError, InputError

__all__ = [
    "RateQuery",
    "Estimate",
    "RateVerdict",
    "Rule",
    "RULES",
    "eta_table",
    "check",
    "optimal_gradient_range",
    "GradientRange",
    "to_rational",
]

INF = math.inf
DRIFTS = ("positive", "zero", "dual")
DERIVS = (0, 1, "div")


def to_rational(x) -> Fraction | float:
    """Parse ``x`` exactly: ints, Fractions, strings like ``"3/2"`` or ``"0.4"``, or infinity."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return INF
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational number: {x!r}") from exc
    if isinstance(x, bool):
        raise InputError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if math.isinf(x) and x > 0:
            return INF
        if not math.isfinite(x):
            raise InputError(f"not a rational number: {x!r}")
        # floats go through their shortest repr so 0.4 means 2/5
        return Fraction(repr(x))
    raise InputError(f"cannot interpret {x!r} as a rational")


def _inv(r) -> Fraction:
    return Fraction(0) if r == INF else 1 / r


@dataclass(frozen=True)
class RateQuery:
    """One L^q-L^r question.

    Parameters
    ----------
    setting : {"whole-space", "exterior"}
    drift : {"positive", "zero", "dual"}
        ``"dual"`` is the adjoint semigroup with drift ``-a`` (``a > 0``)
        acting on negatively weighted spaces.
    deriv : 0, 1 or "div"
        ``"div"`` asks about the semigroup applied to ``P div F``.
    q, r : rationals (``r`` may be infinite)
    alpha, beta : nonnegative rationals
    regime : {"large-time", "small-time"}
    epsilon : optional positive rational, the loss in the improved rates
    qs : optional ``(q1, q2, q3, q4)``; defaults to all equal to ``q``.
        Two-term estimates read ``(q1, q2)`` from the first two entries.
    dual_weight : use negative weights with ``drift="zero"``.  Implied by
        ``drift="dual"``.
    """

    q: Fraction
    r: Fraction | float
    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)
    drift: str = "positive"
    deriv: int | str = 0
    setting: str = "exterior"
    regime: str = "large-time"
    epsilon: Fraction | None = None
    qs: tuple | None = None
    dual_weight: bool = False

    def __post_init__(self):
        conv = object.__setattr__
        for name in ("q", "r", "alpha", "beta"):
            conv(self, name, to_rational(getattr(self, name)))
        if self.epsilon is not None:
            conv(self, "epsilon", to_rational(self.epsilon))
            if not (self.epsilon != INF and self.epsilon > 0):
                raise InputError("epsilon must be a positive finite rational")
        if self.qs is not None:
            qs = tuple(to_rational(v) for v in self.qs)
            if len(qs) != 4 or any(v == INF or v <= 1 for v in qs):
                raise InputError("qs must hold four finite exponents > 1")
            conv(self, "qs", qs)
        if self.setting not in ("whole-space", "exterior"):
            raise InputError(f"unknown setting {self.setting!r}")
        if self.drift not in DRIFTS:
            raise InputError(f"drift must be one of {DRIFTS}")
        if self.deriv not in DERIVS:
            raise InputError(f"deriv must be one of {DERIVS}")
        if self.regime not in ("large-time", "small-time"):
            raise InputError(f"unknown regime {self.regime!r}")
        if self.q == INF or not self.q > 1:
            raise InputError("need 1 < q < inf")
        if not self.q <= self.r:
            raise InputError("need q <= r")
        if self.alpha == INF or self.beta == INF or self.alpha < 0 or self.beta < 0:
            raise InputError("alpha and beta must be finite and >= 0; use the dual flags for negative weights")
        if self.drift == "dual":
            conv(self, "dual_weight", True)

    @property
    def q_list(self) -> tuple:
        return self.qs if self.qs is not None else (self.q,) * 4

    def to_json(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, Fraction):
                out[k] = str(v)
            elif v == INF:
                out[k] = "inf"
        if self.qs is not None:
            out["qs"] = [str(v) for v in self.qs]
        return out


class Estimate(NamedTuple):
    rule: str
    exponents: tuple[Fraction, ...]
    note: str

    @property
    def worst(self) -> Fraction:
        """Slowest-decaying term, the rate the estimate guarantees for generic data."""
        return max(self.exponents)


@dataclass
class RateVerdict:
    applicable: list[Estimate] = field(default_factory=list)
    violated: list[tuple[str, str]] = field(default_factory=list)
    optimality_flag: bool = False
    notes: list[str] = field(default_factory=list)

    def __bool__(self):
        return bool(self.applicable)

    @property
    def rule_ids(self) -> list[str]:
        return [e.rule for e in self.applicable]

    def get(self, rule: str) -> Estimate | None:
        return next((e for e in self.applicable if e.rule == rule), None)

    def best(self) -> Estimate | None:
        """Applicable estimate with the fastest guaranteed decay."""
        return min(self.applicable, key=lambda e: e.worst, default=None)

    def to_json(self) -> dict:
        return {
            "applicable": [
                {"rule": e.rule, "exponents": [str(x) for x in e.exponents], "note": e.note} for e in self.applicable
            ],
            "violated": [{"rule": r, "inequality": s} for r, s in self.violated],
            "optimality_flag": self.optimality_flag,
            "notes": list(self.notes),
        }


def eta_table(alpha, beta, drift: str = "positive"):
    """Loss exponents of the four-term estimate and the matching weight exponents.

    Returns ``(eta, gamma, delta)``, each a 4-tuple of Fractions.  With drift
    ``eta = (0, alpha, beta/2, alpha + beta/2)``; without drift the volume
    factor only costs ``alpha/2``.
    """
    alpha, beta = to_rational(alpha), to_rational(beta)
    if alpha < 0 or beta < 0:
        raise InputError("alpha and beta must be >= 0")
    if drift == "positive":
        eta = (Fraction(0), alpha, beta / 2, alpha + beta / 2)
    elif drift == "zero":
        eta = (Fraction(0), alpha / 2, beta / 2, alpha / 2 + beta / 2)
    else:
        raise InputError("eta_table is defined for drift 'positive' or 'zero'")
    return eta, (alpha, Fraction(0), alpha, Fraction(0)), (beta, beta, Fraction(0), Fraction(0))


Condition = tuple[str, Callable[[RateQuery], bool]]


@dataclass(frozen=True)
class Rule:
    """One estimate: where it applies, what it assumes and what it predicts."""

    id: str
    drifts: tuple[str, ...]
    derivs: tuple
    regime: str
    conditions: tuple[Condition, ...]
    exponents: Callable[[RateQuery], tuple[Fraction, ...]]
    note: str
    dual_weight: bool = False
    needs_epsilon: bool = False

    def in_scope(self, q: RateQuery) -> bool:
        return (
            q.drift in self.drifts
            and q.deriv in self.derivs
            and q.regime == self.regime
            and q.dual_weight == self.dual_weight
        )

    def failures(self, q: RateQuery) -> list[str]:
        if self.needs_epsilon and q.epsilon is None:
            return ["epsilon > 0 given"]
        return [label for label, test in self.conditions if not test(q)]


def _gap(q, r) -> Fraction:
    return _inv(q) - _inv(r)


def _base(q, r, k) -> Fraction:
    return -Fraction(3, 2) * _gap(q, r) - Fraction(k, 2)


def _k(q: RateQuery) -> int:
    return 1 if q.deriv in (1, "div") else 0


def _four_term_exponents(q: RateQuery) -> tuple[Fraction, ...]:
    eta, _, _ = eta_table(q.alpha, q.beta, q.drift)
    return tuple(_base(qi, q.r, _k(q)) + e for qi, e in zip(q.q_list, eta))


def _eta2(q: RateQuery) -> Fraction:
    return q.alpha if q.drift == "positive" else q.alpha / 2


def _improved_loss(q: RateQuery) -> Fraction:
    return q.alpha / 4 + max(q.alpha / 4, q.beta / 2) + q.epsilon


def _q1(q):
    return q.q_list[0]


def _q2(q):
    return q.q_list[1]


def _four_term_gradient_cap(q: RateQuery) -> Fraction | float:
    # two caps below alpha = 2/3, one above; at 2/3 the second is infinite
    caps = [3 / (1 - q.alpha - q.beta)]
    if q.alpha < Fraction(2, 3):
        caps.append(3 / (1 - Fraction(3, 2) * q.alpha))
    return min(caps)


_ORDERED_Q = (
    "1 < q4 <= q2, q3 <= q1 <= r",
    lambda q: 1 < q.q_list[3] <= min(q.q_list[1], q.q_list[2]) and max(q.q_list[1], q.q_list[2]) <= q.q_list[0] <= q.r,
)
_WEIGHT_ALPHA = ("alpha < min(3(1-1/q3), 1)", lambda q: q.alpha < min(3 * (1 - _inv(q.q_list[2])), 1))
_WEIGHT_BETA = ("beta < min(1-1/q2, 1/3)", lambda q: q.beta < min(1 - _inv(q.q_list[1]), Fraction(1, 3)))
_WEIGHT_SUM = ("alpha+beta < min(3(1-1/q1), 1)", lambda q: q.alpha + q.beta < min(3 * (1 - _inv(q.q_list[0])), 1))
_GAP = ("1/q - 1/r < 1/3", lambda q: _gap(q.q, q.r) < Fraction(1, 3))
_R_FINITE = ("r < inf", lambda q: q.r != INF)
_NO_BETA = ("beta = 0", lambda q: q.beta == 0)

RULES: tuple[Rule, ...] = (
    Rule(
        "small-time",
        DRIFTS,
        (0, 1),
        "small-time",
        (
            ("-1/q < beta' < 1-1/q", lambda q: -_inv(q.q) < _signed(q)[1] < 1 - _inv(q.q)),
            ("-3/q < alpha'+beta' < 3(1-1/q)", lambda q: -3 * _inv(q.q) < sum(_signed(q)) < 3 * (1 - _inv(q.q))),
        ),
        lambda q: (_base(q.q, q.r, _k(q)),),
        "t <= 3, any bounded drift; primed exponents carry the weight sign",
    ),
    Rule(
        "four-term",
        ("positive", "zero"),
        (0,),
        "large-time",
        (_ORDERED_Q, _WEIGHT_ALPHA, _WEIGHT_BETA, _WEIGHT_SUM),
        _four_term_exponents,
        "t >= 3; terms weighted by (gamma_i, delta_i) in L^{q_i}",
    ),
    Rule(
        "four-term-gradient",
        ("positive", "zero"),
        (1,),
        "large-time",
        (
            ("alpha > 0", lambda q: q.alpha > 0),
            ("beta > 0", lambda q: q.beta > 0),
            _ORDERED_Q,
            _R_FINITE,
            _WEIGHT_ALPHA,
            _WEIGHT_BETA,
            _WEIGHT_SUM,
            ("r < min(3/(1-alpha-beta), 3/(1-3alpha/2)) (second cap only if alpha < 2/3)",
             lambda q: q.alpha + q.beta < 1 and q.r < _four_term_gradient_cap(q)),
        ),
        _four_term_exponents,
        "t >= 3; gradient of the four-term estimate",
    ),
    Rule(
        "wake-gradient",
        ("positive", "zero"),
        (1,),
        "large-time",
        (
            ("alpha = 0", lambda q: q.alpha == 0),
            ("beta < min(1-1/q1, 1/3)", lambda q: q.beta < min(1 - _inv(_q1(q)), Fraction(1, 3))),
            ("1 < q2 <= q1 <= r <= 3", lambda q: 1 < _q2(q) <= _q1(q) <= q.r <= 3),
        ),
        lambda q: (_base(_q1(q), q.r, 1), _base(_q2(q), q.r, 1) + q.beta / 2),
        "t >= 3; wake-only weight, two terms",
    ),
    Rule(
        "volume-gradient",
        ("positive", "zero"),
        (1,),
        "large-time",
        (
            _NO_BETA,
            ("alpha < min(3(1-1/q1), 1)", lambda q: q.alpha < min(3 * (1 - _inv(_q1(q))), 1)),
            ("1 < q2 <= q1 <= r <= 3/(1-alpha)", lambda q: 1 < _q2(q) <= _q1(q) <= q.r and q.r * (1 - q.alpha) <= 3),
            _R_FINITE,
        ),
        lambda q: (_base(_q1(q), q.r, 1), _base(_q2(q), q.r, 1) + _eta2(q)),
        "t >= 3; volume-only weight, two terms",
    ),
    Rule(
        "dual-gradient",
        ("dual",),
        (1,),
        "large-time",
        (
            ("1 < q <= r <= 3", lambda q: q.r <= 3),
            _GAP,
            ("beta < 1/q", lambda q: q.beta < _inv(q.q)),
            ("alpha+beta < 3/q", lambda q: q.alpha + q.beta < 3 * _inv(q.q)),
        ),
        lambda q: (_base(q.q, q.r, 1) + q.alpha + q.beta / 2,),
        "all t > 0 with (1+t) loss; negative weights",
        dual_weight=True,
    ),
    Rule(
        "div-form",
        ("positive",),
        ("div",),
        "large-time",
        (
            ("3/2 <= q <= r < inf", lambda q: q.q >= Fraction(3, 2) and q.r != INF),
            _GAP,
            ("beta < 1-1/r", lambda q: q.beta < 1 - _inv(q.r)),
            ("alpha+beta < 3(1-1/r)", lambda q: q.alpha + q.beta < 3 * (1 - _inv(q.r))),
        ),
        lambda q: (_base(q.q, q.r, 1) + q.alpha + q.beta / 2,),
        "all t > 0 with (1+t) loss; semigroup applied to P div F",
    ),
    Rule(
        "improved",
        ("positive",),
        (0, 1),
        "large-time",
        (
            _GAP,
            ("alpha > 0", lambda q: q.alpha > 0),
            ("0 < beta < min(1-1/q, 1/3)", lambda q: 0 < q.beta < min(1 - _inv(q.q), Fraction(1, 3))),
            ("alpha+beta < min(3(1-1/q), 1)", lambda q: q.alpha + q.beta < min(3 * (1 - _inv(q.q)), 1)),
            ("gradient with 2alpha+beta < 1: epsilon < (1-2alpha-beta)/2 and r < 3/(1-2alpha-beta-2epsilon)",
             lambda q: _k(q) == 0 or 2 * q.alpha + q.beta >= 1
             or (2 * q.epsilon < 1 - 2 * q.alpha - q.beta
                 and q.r * (1 - 2 * q.alpha - q.beta - 2 * q.epsilon) < 3)),
        ),
        lambda q: (_base(q.q, q.r, _k(q)) + _improved_loss(q),),
        "t >= 1; single term, loss alpha/4 + max(alpha/4, beta/2) + epsilon",
        needs_epsilon=True,
    ),
    Rule(
        "improved-volume",
        ("positive",),
        (0, 1),
        "large-time",
        (
            _NO_BETA,
            _GAP,
            ("alpha < min(3(1-1/q), 1)", lambda q: q.alpha < min(3 * (1 - _inv(q.q)), 1)),
            ("gradient with alpha < 1/2: r <= 3/(1-2alpha)",
             lambda q: _k(q) == 0 or q.alpha >= Fraction(1, 2) or q.r * (1 - 2 * q.alpha) <= 3),
        ),
        lambda q: (_base(q.q, q.r, _k(q)) + q.alpha / 2,),
        "t >= 1; volume weight, loss alpha/2",
    ),
    Rule(
        "stokes-volume",
        ("zero",),
        (0, 1),
        "large-time",
        (
            _NO_BETA,
            ("alpha < min(3(1-1/q), 1)", lambda q: q.alpha < min(3 * (1 - _inv(q.q)), 1)),
            ("gradient: r <= 3/(1-alpha)", lambda q: _k(q) == 0 or q.r * (1 - q.alpha) <= 3),
        ),
        lambda q: (_base(q.q, q.r, _k(q)),),
        "all t > 0; homogeneous Stokes estimate with volume weight",
    ),
    Rule(
        "improved-dual",
        ("dual",),
        (1,),
        "large-time",
        (
            _R_FINITE,
            _GAP,
            ("alpha > 0", lambda q: q.alpha > 0),
            ("0 < beta < 1/r", lambda q: 0 < q.beta < _inv(q.r)),
            ("alpha+beta < min(1, 3/r)", lambda q: q.alpha + q.beta < min(1, 3 * _inv(q.r))),
            ("r <= 3/(1+alpha+min(alpha/2, beta)-2epsilon)",
             lambda q: q.r * (1 + q.alpha + min(q.alpha / 2, q.beta) - 2 * q.epsilon) <= 3),
        ),
        lambda q: (_base(q.q, q.r, 1) + _improved_loss(q),),
        "t >= 1; negative weights, loss alpha/4 + max(alpha/4, beta/2) + epsilon",
        dual_weight=True,
        needs_epsilon=True,
    ),
    Rule(
        "dual-volume",
        ("dual",),
        (1,),
        "large-time",
        (
            _NO_BETA,
            _R_FINITE,
            _GAP,
            ("alpha < min(1, 3/r)", lambda q: q.alpha < min(1, 3 * _inv(q.r))),
            ("r <= 3/(1+alpha)", lambda q: q.r * (1 + q.alpha) <= 3),
        ),
        lambda q: (_base(q.q, q.r, 1) + q.alpha / 2,),
        "t >= 1; negative volume weight, loss alpha/2",
        dual_weight=True,
    ),
    Rule(
        "stokes-dual-volume",
        ("zero",),
        (1,),
        "large-time",
        (
            _NO_BETA,
            _R_FINITE,
            ("alpha < min(1, 3/r)", lambda q: q.alpha < min(1, 3 * _inv(q.r))),
            ("r <= 3/(1+alpha)", lambda q: q.r * (1 + q.alpha) <= 3),
        ),
        lambda q: (_base(q.q, q.r, 1),),
        "all t > 0; homogeneous Stokes gradient estimate with negative volume weight",
        dual_weight=True,
    ),
)


def _signed(q: RateQuery) -> tuple[Fraction, Fraction]:
    s = -1 if q.dual_weight else 1
    return s * q.alpha, s * q.beta


def _beyond_optimal(q: RateQuery) -> bool:
    # only the exterior problem has a proven upper endpoint
    if q.setting != "exterior" or q.drift != "zero" or q.deriv != 1 or q.beta != 0 or q.alpha >= 1:
        return False
    rng = optimal_gradient_range(q.alpha, dual=q.dual_weight)
    return q.r > rng.upper


def check(query: RateQuery) -> RateVerdict:
    """Evaluate every in-scope rule on ``query``.

    A rule is in scope when drift, derivative, regime and weight sign
    match; its failed inequalities are listed in ``violated``.  The
    optimality flag marks Stokes gradient queries whose ``r`` lies beyond
    the proven-impossible endpoint.
    """
    if not isinstance(query, RateQuery):
        raise InputError("check expects a RateQuery")
    verdict = RateVerdict()
    for rule in RULES:
        if not rule.in_scope(query):
            continue
        failed = rule.failures(query)
        if failed:
            verdict.violated.extend((rule.id, f) for f in failed)
        else:
            verdict.applicable.append(Estimate(rule.id, rule.exponents(query), rule.note))
    verdict.optimality_flag = _beyond_optimal(query)
    if verdict.optimality_flag:
        verdict.notes.append("r exceeds the optimal endpoint; the homogeneous gradient estimate cannot hold")
    if query.setting == "whole-space":
        verdict.notes.append("whole-space query; hypothesis sets of the exterior estimates are used unchanged")
    return verdict


class GradientRange(NamedTuple):
    lower: Fraction
    upper: Fraction
    lower_open: bool
    upper_closed: bool
    beyond_impossible: bool

    def __contains__(self, r) -> bool:
        r = to_rational(r)
        lo = r > self.lower if self.lower_open else r >= self.lower
        return lo and r <= self.upper


def optimal_gradient_range(alpha, dual: bool = False) -> GradientRange:
    """Range of ``r`` for the homogeneous Stokes gradient estimate with volume weight.

    Positive weight: ``3/(3-alpha) < r <= 3/(1-alpha)``.  Negative weight:
    ``1 < r <= 3/(1+alpha)``.  Exceeding the upper endpoint is impossible.
    """
    alpha = to_rational(alpha)
    if alpha == INF or not 0 <= alpha < 1:
        raise DomainError("need 0 <= alpha < 1")
    if dual:
        return GradientRange(Fraction(1), 3 / (1 + alpha), True, True, True)
    return GradientRange(3 / (3 - alpha), 3 / (1 - alpha), True, True, True)
