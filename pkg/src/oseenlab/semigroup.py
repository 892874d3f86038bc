"""Whole-space Oseen semigroup on the periodic grid and its majorant kernel norms.

``S_a(t) g = (e^{t Laplacian} g)(x - a t e1)``, which in Fourier space is the
multiplier ``exp(-|xi|^2 t - i a t xi_1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from . import field as fld
from .errors import InputError, WrapAroundError
from .field import GridField, WeightedNorm, boundary_mass_ratio, weighted_norm
from .weights import WeightSpec

__all__ = [
    "OseenParams",
    "evolve",
    "SemigroupSeries",
    "semigroup_series",
    "weighted_semigroup_norm",
    "auto_box",
    "KernelSpec",
    "kernel_norm",
    "young_bound",
    "heat_gaussian",
]


@dataclass(frozen=True)
class OseenParams:
    """Drift ``a`` (negative for the dual semigroup), time ``t`` and an optional
    derivative direction ``k`` in ``{None, 0, 1, 2}`` (``None`` means no derivative)."""

    a: float
    t: float
    k: int | None = None

    def __post_init__(self):
        if not self.t > 0:
            raise InputError(f"t must be positive, got {self.t}")
        if self.k not in (None, 0, 1, 2):
            raise InputError("k must be None or a coordinate index 0..2")

    @property
    def order(self) -> int:
        return 0 if self.k is None else 1


def _multiplier(n: int, half_width: float, a: float, t: float, k: int | None) -> np.ndarray:
    kx, ky, kz = fld._wavenumbers(n, half_width)
    mult = np.exp(-(kx**2 + ky**2 + kz**2) * t) * np.exp(-1j * a * t * kx)
    if k is not None:
        dk = fld._derivative_wavenumbers(n, half_width)[k]
        mult = mult * (1j * dk)
    return mult


def _apply(spec: np.ndarray, f: GridField, a: float, t: float, k: int | None) -> GridField:
    return f.with_values(fld.irfft3(spec * _multiplier(f.n, f.half_width, a, t, k), f.n))


def _max_safe_t(spec, f, a, t_bad, threshold):
    """Largest time (to ~2%) at which the evolved field still passes the guard."""
    lo = 1e-6
    if boundary_mass_ratio(_apply(spec, f, a, lo, None)) > threshold:
        return 0.0
    hi = t_bad
    while hi / lo > 1.02:
        mid = math.sqrt(lo * hi)
        if boundary_mass_ratio(_apply(spec, f, a, mid, None)) > threshold:
            hi = mid
        else:
            lo = mid
    return lo


def evolve(f: GridField, p: OseenParams, guard: bool = True, threshold: float = fld.GUARD_THRESHOLD) -> GridField:
    """Apply ``S_a(t)`` and optionally one spectral derivative.

    Exact for band-limited periodic data.  With ``guard`` set, the evolved
    field must keep its boundary mass ratio at or below ``threshold``;
    otherwise :class:`WrapAroundError` reports the largest safe time.
    """
    if np.iscomplexobj(f.values):
        raise InputError("evolve expects a real field")
    spec = fld.rfft3(f.values)
    base = _apply(spec, f, p.a, p.t, None)
    if guard:
        ratio = boundary_mass_ratio(base)
        if ratio > threshold:
            raise WrapAroundError(p.t, ratio, _max_safe_t(spec, f, p.a, p.t, threshold))
    if p.k is None:
        return base
    return _apply(spec, f, p.a, p.t, p.k)


@dataclass
class SemigroupSeries:
    times: np.ndarray
    norms: np.ndarray
    guard: np.ndarray

    def rows(self):
        return [(float(t), float(v), float(g)) for t, v, g in zip(self.times, self.norms, self.guard)]


def semigroup_series(
    f: GridField,
    a: float,
    times,
    out_norm: WeightedNorm,
    k: int | None = None,
    guard: bool = True,
    threshold: float = fld.GUARD_THRESHOLD,
) -> SemigroupSeries:
    """``||rho S_a(t) f||`` (or of one derivative) on a time grid, one FFT for all times."""
    times = np.asarray(times, dtype=float)
    spec = fld.rfft3(f.values)
    norms, ratios = [], []
    for t in times:
        base = _apply(spec, f, a, t, None)
        ratio = boundary_mass_ratio(base)
        if guard and ratio > threshold:
            raise WrapAroundError(float(t), ratio, _max_safe_t(spec, f, a, float(t), threshold))
        out = base if k is None else _apply(spec, f, a, t, k)
        norms.append(weighted_norm(out, out_norm))
        ratios.append(ratio)
    return SemigroupSeries(times, np.array(norms), np.array(ratios))


def weighted_semigroup_norm(f: GridField, p: OseenParams, out_norm: WeightedNorm, guard: bool = True) -> float:
    """``||rho d^k S_a(t) f||_r`` for one time."""
    return weighted_norm(evolve(f, p, guard=guard), out_norm)


def auto_box(a: float, t_max: float, width: float = 1.0, spread: float = 5.5) -> tuple[float, tuple[float, float, float]]:
    """Half width and centre of a box that holds a drifting Gaussian-like field.

    A Gaussian of width ``sigma`` has ``sqrt(1e-12)`` of its squared mass
    beyond about ``5 sigma``; at time ``t`` the width is
    ``sqrt(width^2 + 2t)``.  The box is centred halfway along the drift so
    that the 0.9 guard shell is reached neither at ``t = 0`` nor at
    ``t_max``.
    """
    reach = spread * math.sqrt(width**2 + 2 * t_max) + 2 * width
    shift = a * t_max / 2
    return (abs(shift) + reach) / fld.GUARD_SHELL, (shift, 0.0, 0.0)


def heat_gaussian(n: int, half_width: float, time: float, center=(0.0, 0.0, 0.0), grid_center=(0.0, 0.0, 0.0)) -> GridField:
    """Heat kernel ``(4 pi time)^-3/2 exp(-|x-c|^2 / (4 time))`` sampled on the grid (unit mass)."""
    pts = fld._mesh(n, half_width, tuple(grid_center))
    d = pts - np.asarray(center)
    vals = (4 * np.pi * time) ** -1.5 * np.exp(-np.sum(d * d, axis=-1) / (4 * time))
    return GridField(vals, half_width, grid_center)


# ------------------------------------------------------------ kernel norms

@dataclass(frozen=True)
class KernelSpec:
    """One majorant kernel ``G_{i,k}(x,t) = W_i(x) |d^k heat kernel(x - a t e1, t)|``.

    ``W_1 = 1``, ``W_2 = (1+|x|)^alpha``, ``W_3 = (1+|x|-x1)^beta``,
    ``W_4 = W_2 W_3``; ``params.k`` selects the derivative.
    """

    index: int
    params: OseenParams
    alpha: float = 0.0
    beta: float = 0.0
    s: float = 1.0

    def __post_init__(self):
        if self.index not in (1, 2, 3, 4):
            raise InputError("kernel index must be 1..4")
        if not (1 <= self.s < math.inf):
            raise InputError("s must lie in [1, inf)")

    @property
    def weight_exponents(self) -> tuple[float, float]:
        return {1: (0.0, 0.0), 2: (self.alpha, 0.0), 3: (0.0, self.beta), 4: (self.alpha, self.beta)}[self.index]


def _abs_cos_moment(s: float) -> float:
    """``int_0^{2 pi} |cos phi|^s dphi``."""
    return 2 * math.sqrt(math.pi) * gamma_fn((s + 1) / 2) / gamma_fn(s / 2 + 1)


_GL = np.polynomial.legendre.leggauss(16)


def _panel_nodes(edges: np.ndarray):
    lo, hi = edges[:-1, None], edges[1:, None]
    x = (lo + hi) / 2 + (hi - lo) / 2 * _GL[0][None, :]
    w = (hi - lo) / 2 * _GL[1][None, :]
    return x.ravel(), w.ravel()


def _refine(edges: np.ndarray) -> np.ndarray:
    mids = (edges[:-1] + edges[1:]) / 2
    out = np.empty(2 * edges.size - 1)
    out[0::2], out[1::2] = edges, mids
    return out


def _weighted_gaussian_moment(spec: KernelSpec, rtol: float = 1e-8, max_level: int = 5) -> float:
    """``int |h_k(z)|^s W_i(a t e1 + 2 sqrt(t) z)^s dz`` in spherical coordinates
    ``(|z|, theta)`` with ``theta`` the angle to e1.

    Composite Gauss-Legendre in both variables; panels are halved until two
    successive levels agree to ``rtol``.  ``|z| = a sqrt(t) / 2`` is a panel
    edge because the weight is not smooth where ``x = 0``.
    """
    p, s = spec.params, spec.s
    alpha, beta = spec.weight_exponents
    sqt = math.sqrt(p.t)
    rho_max = math.sqrt(46.0 / s)
    rho0 = abs(p.a) * sqt / 2
    r_edges = np.linspace(0.0, rho_max, 5)
    if 0 < rho0 < rho_max:
        r_edges = np.unique(np.concatenate([r_edges, [rho0]]))
    th_edges = np.linspace(0.0, math.pi, 5)

    def evaluate(re, te):
        rho, wr = _panel_nodes(re)
        th, wt = _panel_nodes(te)
        R = rho[:, None]
        ct, st = np.cos(th)[None, :], np.sin(th)[None, :]
        x1 = p.a * p.t + 2 * sqt * R * ct
        xp = 2 * sqt * R * st
        absx = np.hypot(x1, xp)
        with np.errstate(invalid="ignore", divide="ignore"):
            wake = np.where(x1 > 0, xp * xp / (absx + x1), absx - x1)
        logw = alpha * np.log1p(absx) + beta * np.log1p(wake)
        if p.k is None:
            h, ang = 1.0, 2 * math.pi
        elif p.k == 0:
            h, ang = np.abs(2 * R * ct) ** s, 2 * math.pi
        else:
            h, ang = np.abs(2 * R * st) ** s, _abs_cos_moment(s)
        integrand = R * R * st * h * np.exp(s * logw - s * R * R)
        return ang * float(wr @ integrand @ wt)

    prev = evaluate(r_edges, th_edges)
    for _ in range(max_level):
        r_edges, th_edges = _refine(r_edges), _refine(th_edges)
        cur = evaluate(r_edges, th_edges)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return cur


def kernel_norm(spec: KernelSpec) -> float:
    """``||G_{i,k}(., t)||_s``.

    ``i = 1`` uses closed-form Gaussian moments; ``i = 2, 3, 4`` integrate
    numerically in ``(|z|, cos angle to e1)`` after the substitution
    ``x = a t e1 + 2 sqrt(t) z``, with the azimuthal integral done in
    closed form.
    """
    p, s = spec.params, spec.s
    pref = (4 * math.pi * p.t) ** (-1.5 * s) * (2 * math.sqrt(p.t)) ** (3 - p.order * s)
    if spec.index == 1 or spec.weight_exponents == (0.0, 0.0):
        if p.k is None:
            moment = (math.pi / s) ** 1.5
        else:
            moment = 2**s * (math.pi / s) * gamma_fn((s + 1) / 2) * s ** (-(s + 1) / 2)
    else:
        moment = _weighted_gaussian_moment(spec)
    return (pref * moment) ** (1 / s)


_GAMMA = (lambda a, b: a, lambda a, b: 0.0, lambda a, b: a, lambda a, b: 0.0)
_DELTA = (lambda a, b: b, lambda a, b: b, lambda a, b: 0.0, lambda a, b: 0.0)


def young_bound(f: GridField, p: OseenParams, alpha: float, beta: float, q: float, r: float) -> float:
    """Four-term Young bound ``sum_i ||G_{i,k}||_s ||w_i f||_q`` for ``||rho d^k S_a(t) f||_r``.

    Uses ``(1+|x|)^alpha <= (1+|y|)^alpha + (1+|x-y|)^alpha`` and the same
    subadditivity for ``1+|x|-x1``, valid with constant 1 for
    ``alpha, beta`` in ``[0, 1]``.  ``w_i = (1+|y|)^gamma_i (1+|y|-y1)^delta_i``
    with ``gamma = (alpha, 0, alpha, 0)`` and ``delta = (beta, beta, 0, 0)``.
    ``1/s = 1 + 1/r - 1/q``.
    """
    if not (0 <= alpha <= 1 and 0 <= beta <= 1):
        raise InputError("the constant-1 majorisation needs alpha, beta in [0, 1]")
    inv_s = 1 + (0 if math.isinf(r) else 1 / r) - 1 / q
    if not 0 < inv_s <= 1:
        raise InputError("need q <= r so that 1/s = 1 + 1/r - 1/q lies in (0, 1]")
    s = 1 / inv_s
    if math.isinf(s):
        raise InputError("s = inf kernel norms are not supported")
    total = 0.0
    for i in range(4):
        g, d = _GAMMA[i](alpha, beta), _DELTA[i](alpha, beta)
        k_norm = kernel_norm(KernelSpec(i + 1, p, alpha, beta, s))
        total += k_norm * weighted_norm(f, WeightedNorm(q, WeightSpec(g, d)))
    return total
