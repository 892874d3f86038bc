"""Weight integrals over balls, global integrability tests and time convolutions.

All ball integrals use origin-centred spherical coordinates with the polar
axis along ``e1``.  In those coordinates the wake weight only depends on
the radius ``s`` and on ``u = 1 - cos(theta)``, since ``|y| - y1 = s u``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import EndpointDivergence, HypothesisViolation, InputError

__all__ = [
    "BallIntegralSpec",
    "Divergent",
    "ball_integral",
    "ball_integral_mc",
    "centered_ball_integrals",
    "global_integrability",
    "EmbeddingRange",
    "holder_embedding_range",
    "TimeConvSpec",
    "TimeConvExponent",
    "time_convolution",
    "time_convolution_exponent",
]


@dataclass(frozen=True)
class BallIntegralSpec:
    """Integral of ``(1+|y|)^gamma (1+|y|-y1)^delta`` over ``B_radius(center)``.

    ``radius=inf`` means the whole space.
    """

    gamma: float
    delta: float
    radius: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise InputError(f"radius must be positive, got {self.radius}")
        c = tuple(float(v) for v in self.center)
        if len(c) != 3 or not all(math.isfinite(v) for v in c):
            raise InputError("center must be a finite 3-vector")
        object.__setattr__(self, "center", c)
        if not (math.isfinite(self.gamma) and math.isfinite(self.delta)):
            raise InputError("exponents must be finite")


@dataclass(frozen=True)
class Divergent:
    """Tagged verdict for an integral that is infinite."""

    reason: str

    def __bool__(self):
        return False


# ---------------------------------------------------------------- centred

def _radial_density(s, gamma, delta):
    """Angular integral times ``s^2 (1+s)^gamma``, without the ``2 pi``.

    Uses ``s^2 * int_0^2 (1+s u)^delta du = s * ((1+2s)^(delta+1) - 1)/(delta+1)``.
    """
    s = np.asarray(s, dtype=float)
    lg = np.log1p(2 * s)
    if delta == -1:
        inner = s * lg
    else:
        inner = s * np.expm1((delta + 1) * lg) / (delta + 1)
    return np.exp(gamma * np.log1p(s)) * inner


def _whole_space_finite(gamma: float, delta: float) -> bool:
    if delta > -1:
        return gamma + delta < -3
    return gamma < -2


def _geometric_breaks(lo: float, hi: float, ratio: float = 10.0) -> list[float]:
    """Points ``lo < ... < hi`` so that each piece spans at most one ``ratio``."""
    pts = [lo]
    start = max(lo, 1.0)
    if start > lo and start < hi:
        pts.append(start)
    x = start * ratio
    while x < hi:
        pts.append(x)
        x *= ratio
    pts.append(hi)
    return pts


def _quad_pieces(f, pts, rtol):
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi > lo:
            val, _ = integrate.quad(f, lo, hi, epsrel=rtol, epsabs=0.0, limit=200)
            total += val
    return total


def centered_ball_integrals(gamma: float, delta: float, radii, rtol: float = 1e-9) -> np.ndarray:
    """Origin-centred ball integrals for an increasing array of radii.

    Integrates shell by shell and accumulates, so a whole scan costs about
    as much as the largest ball.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise InputError("radii must be positive and strictly increasing")
    if not np.all(np.isfinite(radii)):
        raise InputError("use ball_integral for infinite radius")

    def f(s):
        return float(_radial_density(s, gamma, delta))

    edges = np.concatenate([[0.0], radii])
    shells = [_quad_pieces(f, _geometric_breaks(lo, hi, 4.0), rtol) for lo, hi in zip(edges[:-1], edges[1:])]
    return 2 * np.pi * np.cumsum(shells)


# ------------------------------------------------------------- off-centre

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
# cosine substitution on [0, pi]: theta = lo + (hi-lo)(1-cos v)/2 smooths
# square-root behaviour at both ends of a panel
_V = (_GL_NODES + 1) * np.pi / 2
_SUB_X = (1 - np.cos(_V)) / 2
_SUB_W = _GL_WEIGHTS * (np.pi / 2) * np.sin(_V) / 2


def _cap_angular(s, gamma, delta, cn, theta_e, r):
    """``s^2 (1+s)^gamma`` times the weighted measure of the sphere of radius ``s``
    inside ``B_r(c)``, where ``|c| = cn`` and ``c`` makes angle ``theta_e`` with e1."""
    if s <= 0:
        return 0.0
    if s <= r - cn:
        return 2 * np.pi * float(_radial_density(s, gamma, delta))
    kappa = (s * s + cn * cn - r * r) / (2 * s * cn)
    if kappa >= 1:
        return 0.0
    kappa = max(kappa, -1.0)
    big_a = math.acos(kappa)
    cands = [theta_e - big_a, theta_e + big_a, big_a - theta_e, 2 * np.pi - big_a - theta_e]
    pts = sorted({0.0, np.pi, *[c for c in cands if 0 < c < np.pi]})
    lo = np.asarray(pts[:-1])[:, None]
    width = np.diff(pts)[:, None]
    theta = lo + width * _SUB_X[None, :]
    wts = width * _SUB_W[None, :]
    ct, st = np.cos(theta), np.sin(theta)
    ce, se = math.cos(theta_e), math.sin(theta_e)
    denom = st * se
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = (kappa - ct * ce) / denom
    degenerate = np.abs(denom) < 1e-300
    arg = np.where(degenerate, np.where(ct * ce > kappa, -2.0, 2.0), arg)
    phi_range = 2 * np.arccos(np.clip(arg, -1.0, 1.0))
    # 1 - cos(theta) without cancellation
    u = 2 * np.sin(theta / 2) ** 2
    g = np.exp(delta * np.log1p(s * u))
    ang = np.sum(wts * g * st * phi_range)
    return math.exp(gamma * math.log1p(s)) * s * s * ang


def _offcenter_integral(spec: BallIntegralSpec, rtol: float) -> float:
    c = np.asarray(spec.center)
    cn = float(np.linalg.norm(c))
    r = spec.radius
    theta_e = math.acos(max(-1.0, min(1.0, c[0] / cn)))
    lo = max(0.0, cn - r)
    hi = cn + r
    pts = _geometric_breaks(lo, hi, 4.0) if lo == 0 else list(np.linspace(lo, hi, 5))
    if r > cn:
        pts = sorted(set(pts) | {r - cn})

    def f(s):
        return _cap_angular(s, spec.gamma, spec.delta, cn, theta_e, r)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _quad_pieces(f, pts, rtol)


def ball_integral(spec: BallIntegralSpec, rtol: float = 1e-8) -> float | Divergent:
    """Integral of the wake weight over a ball.

    Centred balls use the exact one-dimensional radial reduction.  Off-centre
    balls integrate the spherical cap ``|y - c| < r`` in origin-centred polar
    coordinates with Gauss-Legendre panels in the polar angle and adaptive
    quadrature in the radius.  An infinite radius returns :class:`Divergent`
    whenever the whole-space integral is infinite.
    """
    gamma, delta = spec.gamma, spec.delta
    if math.isinf(spec.radius):
        if not _whole_space_finite(gamma, delta):
            return Divergent(
                f"whole-space integral diverges for gamma={gamma:g}, delta={delta:g}"
            )

        def f(s):
            return float(_radial_density(s, gamma, delta))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            head = _quad_pieces(f, [0.0, 1.0, 10.0], rtol)
            tail, _ = integrate.quad(f, 10.0, np.inf, epsrel=rtol, limit=200)
        return 2 * np.pi * (head + tail)
    if np.linalg.norm(spec.center) == 0:
        return float(centered_ball_integrals(gamma, delta, [spec.radius], rtol)[0])
    return _offcenter_integral(spec, rtol)


def ball_integral_mc(spec: BallIntegralSpec, n_samples: int = 10**6, seed: int = 0) -> tuple[float, float]:
    """Plain Monte-Carlo estimate and its standard error, uniform in the ball."""
    if math.isinf(spec.radius):
        raise InputError("Monte-Carlo needs a finite ball")
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_samples, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rad = spec.radius * rng.random(n_samples) ** (1 / 3)
    y = np.asarray(spec.center) + d * rad[:, None]
    from .weights import WeightSpec, eval_weight

    vals = eval_weight(WeightSpec(spec.gamma, spec.delta), y)
    vol = 4 * np.pi * spec.radius**3 / 3
    return float(vol * vals.mean()), float(vol * vals.std(ddof=1) / math.sqrt(n_samples))


# ---------------------------------------------------------- integrability

def global_integrability(gamma: float, delta: float, s: float) -> str:
    """Which sufficient condition makes ``(1+|x|)^(-gamma s)(1+|x|-x1)^(-delta s)``
    integrable over the whole space.

    Returns ``"finite-by-lemma"`` when ``s > max(1/delta, 2/gamma)``,
    ``"finite-by-lemma-branch2"`` when ``2 delta < gamma`` and
    ``3/(gamma+delta) < s < 1/delta``, and ``"undetermined"`` otherwise.
    Both conditions are only sufficient.
    """
    if not (gamma > 0 and delta > 0 and s > 0):
        raise InputError("gamma, delta and s must all be positive")
    if s > max(1 / delta, 2 / gamma):
        return "finite-by-lemma"
    if 2 * delta < gamma and 3 / (gamma + delta) < s < 1 / delta:
        return "finite-by-lemma-branch2"
    return "undetermined"


class EmbeddingRange(NamedTuple):
    """Half-open interval ``(lower, upper]``; ``binding`` names the active lower bound."""

    lower: float
    upper: float
    binding: str

    def __contains__(self, r):
        return self.lower < r <= self.upper


def holder_embedding_range(q: float, alpha: float, beta: float) -> EmbeddingRange:
    """Exponents ``r`` with ``||u||_r <= C ||rho u||_q`` for the wake weight.

    The lower endpoint is the larger of ``3q/(3+alpha q+beta q)`` (volume
    growth of the reciprocal weight) and ``2q/(2+alpha q)`` (the thin wake
    paraboloid).  The two coincide exactly when ``alpha = 2 beta``.
    """
    if not (q > 1 and alpha > 0 and beta > 0):
        raise InputError("need q > 1 and positive alpha, beta")
    if not alpha + beta < 3 * (1 - 1 / q):
        raise HypothesisViolation(f"alpha+beta={alpha + beta:g} must be below 3(1-1/q)={3 * (1 - 1 / q):g}")
    volume = 3 * q / (3 + alpha * q + beta * q)
    wake = 2 * q / (2 + alpha * q)
    if alpha == 2 * beta:
        return EmbeddingRange(max(volume, wake), q, "tie")
    if alpha > 2 * beta:
        return EmbeddingRange(volume, q, "volume")
    return EmbeddingRange(wake, q, "wake")


# ------------------------------------------------------- time convolution

@dataclass(frozen=True)
class TimeConvSpec:
    """``int_0^t K(t-tau) tau^(-c) (1+tau)^(c-b) dtau``.

    ``K(u) = u^(-a)``, or ``(1+u)^(-a)`` when ``shifted`` is set; the
    shifted kernel is integrable at ``u = 0`` for every ``a``.
    """

    a_exp: float
    c_exp: float
    b_exp: float
    t: float = 1.0
    shifted: bool = False

    def __post_init__(self):
        if self.a_exp < 0 or self.c_exp < 0:
            raise InputError("a_exp and c_exp must be nonnegative")
        if not self.shifted and self.a_exp >= 1:
            raise EndpointDivergence(f"(t-tau)^-{self.a_exp} is not integrable at tau=t")
        if self.c_exp >= 1:
            raise EndpointDivergence(f"tau^-{self.c_exp} is not integrable at tau=0")
        if not self.t > 0:
            raise InputError("t must be positive")


class TimeConvExponent(NamedTuple):
    exponent: Fraction
    log: bool

    def __float__(self):
        return float(self.exponent)


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**6)


def _piece(e: Fraction) -> tuple[Fraction, int]:
    """Growth of ``int_1^T x^(-e) dx`` as (power of T, power of log T)."""
    if e < 1:
        return 1 - e, 0
    if e == 1:
        return Fraction(0), 1
    return Fraction(0), 0


def time_convolution_exponent(a_exp, b_exp, c_exp=0, shifted: bool = False) -> TimeConvExponent:
    """Large-``t`` growth exponent of :func:`time_convolution`.

    Splits at ``t/2``: the half near ``tau=0`` behaves like ``t^-a`` times
    ``int^t tau^-b``, the half near ``tau=t`` like ``t^-b`` times
    ``int^t K``.  The result is ``-min(a, a+b-1)`` for the plain kernel and
    ``-min(a, b, a+b-1)`` for the shifted one.  ``log`` is set when the
    dominant piece carries a logarithm.  ``c_exp`` only affects small ``t``.
    """
    a, b = _frac(a_exp), _frac(b_exp)
    p_lo, l_lo = _piece(b)
    near_zero = (p_lo - a, l_lo)
    if shifted:
        p_hi, l_hi = _piece(a)
    else:
        if a >= 1:
            raise EndpointDivergence("plain kernel needs a < 1")
        p_hi, l_hi = 1 - a, 0
    near_t = (p_hi - b, l_hi)
    top = max(near_zero[0], near_t[0])
    logs = max(lg for e, lg in (near_zero, near_t) if e == top)
    return TimeConvExponent(top, bool(logs))


def _smooth_half(g, sing, T, alg_exp, rtol):
    """``int_0^T sing(x) g(x) dx`` where ``sing = x^alg_exp`` (or 1) near 0."""
    head_end = min(1.0, T)
    if alg_exp != 0:
        head, _ = integrate.quad(g, 0.0, head_end, weight="alg", wvar=(alg_exp, 0.0), epsrel=rtol, limit=200)
    else:
        head, _ = integrate.quad(lambda x: sing(x) * g(x), 0.0, head_end, epsrel=rtol, limit=200)
    if T <= 1:
        return head
    # log substitution x = e^v keeps power-law tails well resolved
    def tail(v):
        x = math.exp(v)
        return sing(x) * g(x) * x

    edges = np.linspace(0.0, math.log(T), max(2, int(math.log(T) / 2) + 2))
    body = sum(integrate.quad(tail, lo, hi, epsrel=rtol, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    return head + body


def time_convolution(spec: TimeConvSpec, rtol: float = 1e-10) -> float:
    """Numerical value of the time convolution by split adaptive quadrature."""
    a, b, c, t = spec.a_exp, spec.b_exp, spec.c_exp, spec.t
    half = t / 2

    def kernel(u):
        return (1 + u) ** (-a) if spec.shifted else u ** (-a)

    def h(tau):
        return (1 + tau) ** (c - b)

    # near tau = 0: tau^-c is the singular factor
    lower = _smooth_half(lambda x: h(x) * kernel(t - x), lambda x: x ** (-c), half, -c, rtol)
    # near tau = t: substitute u = t - tau
    if spec.shifted:
        upper = _smooth_half(lambda u: (t - u) ** (-c) * h(t - u), kernel, half, 0.0, rtol)
    else:
        upper = _smooth_half(lambda u: (t - u) ** (-c) * h(t - u), kernel, half, -a, rtol)
    return lower + upper
