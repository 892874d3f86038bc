"""Forced Oseen problems on the periodic grid: Duhamel integrals and Picard iteration.

All runs use the whole-space Oseen semigroup in place of the exterior-domain
one; results are labelled ``"whole-space surrogate"``.

The time integral uses the recursive trapezoid rule in Fourier space::

    w(t + dt) = S(dt) [w(t) + dt/2 f(t)] + dt/2 f(t + dt)

which is the composite trapezoid rule for ``int S(t - tau) f(tau) dtau``
on the given grid, with the semigroup factor applied exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import field as fld
from .errors import ConfigurationError, InputError, WrapAroundError
from .field import GridField, WeightedNorm, boundary_mass_ratio, weighted_norm
from .semigroup import _multiplier
from .weights import WeightSpec

__all__ = [
    "SURROGATE_LABEL",
    "Transition",
    "ForcingSpec",
    "DuhamelRun",
    "duhamel_solve",
    "TripleNorm",
    "triple_norm",
    "triple_norm_from_series",
    "triple_observables",
    "geometric_grid",
    "PicardReport",
    "picard_iterate",
    "divergence_form_nonlinearity",
    "StartupConfig",
    "StartupResult",
    "run_startup",
]

SURROGATE_LABEL = "whole-space surrogate"


@dataclass(frozen=True)
class Transition:
    """Start-up profile: 0 for ``t <= 0``, 1 for ``t >= 1``, smooth in between.

    ``"smoothstep"`` is ``3s^2 - 2s^3`` (C^1, max slope 3/2);
    ``"quintic"`` is ``6s^5 - 15s^4 + 10s^3`` (C^2, max slope 15/8).
    """

    kind: str = "smoothstep"

    def __post_init__(self):
        if self.kind not in ("smoothstep", "quintic"):
            raise ConfigurationError(f"unknown transition {self.kind!r}")

    def __call__(self, t):
        s = np.clip(t, 0.0, 1.0)
        if self.kind == "smoothstep":
            return s * s * (3 - 2 * s)
        return s**3 * (10 - 15 * s + 6 * s * s)

    def derivative(self, t):
        s = np.clip(t, 0.0, 1.0)
        if self.kind == "smoothstep":
            return 6 * s * (1 - s)
        return 30 * s * s * (1 - s) ** 2

    @property
    def max_derivative(self) -> float:
        return 1.5 if self.kind == "smoothstep" else 15 / 8


@dataclass
class ForcingSpec:
    """Forcing of the start-up problem.

    ``f1 = -psi'(t) u_s`` accelerates the body; ``f2 = psi (1 - psi)
    (u_s . grad u_s + a d_1 u_s)`` is the interaction term.  ``"f1+f2"``
    sums both.  ``custom`` is a callable ``t -> GridField``.  Every forcing
    is Leray-projected before use.
    """

    kind: str
    wake: GridField | None = None
    a: float = 0.0
    psi: Transition = field(default_factory=Transition)
    custom: Callable[[float], GridField] | None = None

    def __post_init__(self):
        if self.kind not in ("f1", "f2", "f1+f2", "custom"):
            raise ConfigurationError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "custom" and self.custom is None:
            raise ConfigurationError("custom forcing needs a callable")
        if self.kind != "custom" and self.wake is None:
            raise ConfigurationError(f"forcing {self.kind} needs a wake field")

    def parts(self, n: int, half_width: float) -> list[tuple[Callable[[float], float], np.ndarray]]:
        """Time coefficients paired with projected spectra of the spatial factors."""
        if self.kind == "custom":
            return []
        w = self.wake
        if w.n != n or w.half_width != half_width:
            raise ConfigurationError("wake and initial field live on different grids")
        out = []
        if self.kind in ("f1", "f1+f2"):
            spec = fld.project_spectrum(fld.rfft3(w.values), n, half_width)
            out.append((lambda t: -float(self.psi.derivative(t)), spec))
        if self.kind in ("f2", "f1+f2"):
            rhs = fld.rfft3(divergence_form_nonlinearity(w, w).values)
            rhs = rhs + _d1_spectrum(w) * self.a
            spec = fld.project_spectrum(rhs, n, half_width)
            out.append((lambda t: float(self.psi(t) * (1 - self.psi(t))), spec))
        return out


def _d1_spectrum(f: GridField) -> np.ndarray:
    kx = fld._derivative_wavenumbers(f.n, f.half_width)[0]
    return 1j * kx * fld.rfft3(f.values)


def _dealias_mask(n: int) -> np.ndarray:
    idx = np.abs(np.fft.fftfreq(n, 1.0 / n))
    keep = idx < n / 3
    keep_r = np.abs(np.fft.rfftfreq(n, 1.0 / n)) < n / 3
    return keep[:, None, None] & keep[None, :, None] & keep_r[None, None, :]


def divergence_form_nonlinearity(v: GridField, u: GridField, dealias: bool = False) -> GridField:
    """``div(v (x) u)``, i.e. ``sum_j d_j (v_j u_i)``; equals ``v . grad u`` for solenoidal ``v``.

    With ``dealias`` the inputs and the result are truncated to the lower
    two thirds of the spectrum.
    """
    n, L = v.n, v.half_width
    vs, us = v.values, u.values
    mask = None
    if dealias:
        mask = _dealias_mask(n)
        vs = fld.irfft3(fld.rfft3(vs) * mask, n)
        us = fld.irfft3(fld.rfft3(us) * mask, n)
    kx, ky, kz = fld._derivative_wavenumbers(n, L)
    ks = (kx, ky, kz)
    out = np.zeros((3,) + fld.rfft3(vs[0]).shape, dtype=complex)
    for j in range(3):
        prod = fld.rfft3(vs[j][None] * us)
        out += 1j * ks[j] * prod
    if mask is not None:
        out *= mask
    return v.with_values(fld.irfft3(out, n))


def geometric_grid(t_max: float, nodes: int, t_min: float | None = None) -> np.ndarray:
    """Geometric time grid ending at ``t_max``; ``t_min`` defaults to ``t_max / 6400``."""
    if nodes < 2 or not t_max > 0:
        raise ConfigurationError("need at least two nodes and t_max > 0")
    t_min = t_max / 6400 if t_min is None else t_min
    return np.geomspace(t_min, t_max, nodes)


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or t[0] <= 0 or np.any(np.diff(t) <= 0):
        raise ConfigurationError("time grid must be positive and strictly increasing")
    return t


@dataclass
class DuhamelRun:
    """Output of :func:`duhamel_solve`.

    ``observables`` maps each requested name to its values on ``times``.
    ``fields`` holds the solution at every time (``keep="all"``), only the
    last (``keep="last"``) or nothing (``keep="none"``).
    """

    times: np.ndarray
    observables: dict[str, np.ndarray]
    guard: np.ndarray
    fields: list[GridField]
    label: str = SURROGATE_LABEL


def duhamel_solve(
    v0: GridField,
    forcing: ForcingSpec,
    t_grid,
    observables: dict[str, Callable[[GridField], float]] | None = None,
    keep: str = "last",
    guard: bool = True,
    threshold: float = fld.GUARD_THRESHOLD,
) -> DuhamelRun:
    """``v(t) = S_a(t) v0 + int_0^t S_a(t - tau) P f(tau) dtau`` on ``t_grid``.

    The free part is one multiplier application per output time; the
    forced part is the recursive trapezoid rule started from ``tau = 0``.

    Raises
    ------
    WrapAroundError
        When the guard fails at some grid time; ``max_safe_t`` is the last
        grid time that passed.
    """
    if keep not in ("all", "last", "none"):
        raise ConfigurationError("keep must be 'all', 'last' or 'none'")
    t = _check_grid(t_grid)
    n, L, a = v0.n, v0.half_width, forcing.a
    parts = forcing.parts(n, L)
    v0_spec = fld.rfft3(v0.values)

    def force_spec(tau: float) -> np.ndarray | None:
        acc = None
        for coef, spec in parts:
            c = coef(tau)
            if c != 0:
                acc = c * spec if acc is None else acc + c * spec
        if forcing.custom is not None:
            g = forcing.custom(tau)
            s = fld.project_spectrum(fld.rfft3(g.values), n, L)
            acc = s if acc is None else acc + s
        return acc

    def add(x, y, c):
        if y is None:
            return x
        return c * y if x is None else x + c * y

    observables = observables or {}
    series = {k: [] for k in observables}
    ratios, kept = [], []
    forced = None
    prev_t, f_prev = 0.0, force_spec(0.0)
    last_ok = 0.0
    for tj in t:
        dt = tj - prev_t
        f_next = force_spec(float(tj))
        step = add(forced, f_prev, dt / 2)
        if step is not None:
            step = step * _multiplier(n, L, a, dt, None)
        forced = add(step, f_next, dt / 2)
        total = v0_spec * _multiplier(n, L, a, float(tj), None)
        if forced is not None:
            total = total + forced
        vt = v0.with_values(fld.irfft3(total, n))
        ratio = boundary_mass_ratio(vt)
        if guard and ratio > threshold:
            raise WrapAroundError(float(tj), ratio, last_ok)
        last_ok = float(tj)
        ratios.append(ratio)
        for name, fn in observables.items():
            series[name].append(fn(vt))
        if keep == "all" or (keep == "last" and tj == t[-1]):
            kept.append(vt)
        prev_t, f_prev = float(tj), f_next
    return DuhamelRun(t, {k: np.array(v) for k, v in series.items()}, np.array(ratios), kept)


def _gradient_field(v: GridField) -> GridField:
    # scalar field of the pointwise Frobenius norm of the Jacobian
    g = fld.spectral_gradient(v)
    return GridField(np.sqrt(np.sum(g * g, axis=(0, 1)))[None], v.half_width, v.center)


def triple_observables(gamma: float = 0.0, delta: float = 0.0) -> dict[str, Callable[[GridField], float]]:
    """Observables feeding :func:`triple_norm_from_series`: weighted ``L^3``,
    ``L^inf`` and gradient ``L^3`` norms with weight exponents ``(gamma, delta)``."""
    w = WeightSpec(gamma, delta)
    return {
        "v3": lambda v: weighted_norm(v, WeightedNorm(3, w)),
        "vinf": lambda v: weighted_norm(v, WeightedNorm(math.inf, w)),
        "grad3": lambda v: weighted_norm(_gradient_field(v), WeightedNorm(3, w)),
    }


@dataclass
class TripleNorm:
    """Running suprema of the three scaled seminorms on a time grid.

    ``v3[j]`` is ``sup_{tau <= t_j} (1+tau)^(-gamma-delta/2) ||rho v||_3``,
    ``vinf`` carries the extra factor ``tau^(1/2)`` and ``grad3`` carries
    ``tau^(1/2)`` on the gradient norm.
    """

    times: np.ndarray
    v3: np.ndarray
    vinf: np.ndarray
    grad3: np.ndarray
    gamma: float = 0.0
    delta: float = 0.0

    @property
    def total(self) -> np.ndarray:
        return self.v3 + self.vinf + self.grad3

    def final(self) -> tuple[float, float, float]:
        return float(self.v3[-1]), float(self.vinf[-1]), float(self.grad3[-1])


def triple_norm_from_series(times, v3, vinf, grad3, gamma: float = 0.0, delta: float = 0.0) -> TripleNorm:
    """Scale raw norm series and take running suprema."""
    t = _check_grid(times)
    growth = (1 + t) ** (-gamma - delta / 2)
    # time factors tau^(1/2 - 3/(2q)) for q = 3, inf and tau^(1 - 3/(2q)) for the gradient at q = 3
    s3 = growth * np.asarray(v3, dtype=float)
    sinf = growth * np.sqrt(t) * np.asarray(vinf, dtype=float)
    sg = growth * np.sqrt(t) * np.asarray(grad3, dtype=float)
    return TripleNorm(t, np.maximum.accumulate(s3), np.maximum.accumulate(sinf), np.maximum.accumulate(sg), gamma, delta)


def triple_norm(times, fields: list[GridField], gamma: float = 0.0, delta: float = 0.0) -> TripleNorm:
    """Triple norm of a solution sampled at ``times > 0``."""
    if len(fields) != len(times):
        raise InputError("one field per time is required")
    obs = triple_observables(gamma, delta)
    vals = {k: [fn(v) for v in fields] for k, fn in obs.items()}
    return triple_norm_from_series(times, vals["v3"], vals["vinf"], vals["grad3"], gamma, delta)


@dataclass
class PicardReport:
    """Successive approximations of the perturbation problem.

    ``increments[m]`` is the final total triple norm of ``v_{m+1} - v_m``
    and ``ratios[m] = increments[m] / increments[m-1]``.
    """

    triples: list[TripleNorm]
    increments: list[float]
    ratios: list[float]
    converged: bool
    diverged: bool
    message: str
    data_norm3: float
    small_data: bool
    max_guard: float
    label: str = SURROGATE_LABEL

    @property
    def contracting(self) -> bool:
        """No divergence and every recorded increment ratio below one."""
        return not self.diverged and all(r < 1 for r in self.ratios)


def _triple_from_spectra(t, specs, n, L, center, gamma, delta) -> TripleNorm:
    fields = [GridField(fld.irfft3(s, n), L, center) for s in specs]
    return triple_norm(t, fields, gamma, delta)


def picard_iterate(
    b: GridField,
    wake: GridField | None,
    a: float,
    m_max: int,
    t_grid,
    gamma: float = 0.0,
    delta: float = 0.0,
    dealias: bool = True,
    smallness: float = 1.0,
    tol: float = 1e-12,
) -> PicardReport:
    """Iterate ``v_{m+1}(t) = S_a(t) b - int S_a(t - tau) P N(v_m)(tau) dtau``.

    ``N(v) = div(v (x) v) + div(v (x) u_s) + div(u_s (x) v)`` with
    ``u_s = wake`` (zero when ``wake`` is None).  The first iterate is
    ``v_0 = S_a(t) b``.  Growth of the increments stops the run with
    ``diverged=True``; nothing is raised.  ``smallness`` is the threshold
    on ``||b||_3`` recorded as ``small_data``; the guard ratio is recorded
    but not enforced because the periodic problem stays well posed.
    """
    if m_max < 1:
        raise ConfigurationError("m_max must be >= 1")
    t = _check_grid(t_grid)
    n, L, c = b.n, b.half_width, b.center
    if wake is not None and (wake.n != n or wake.half_width != L):
        raise ConfigurationError("wake and data live on different grids")
    b_spec = fld.rfft3(b.values)
    free = [b_spec * _multiplier(n, L, a, float(tj), None) for tj in t]
    data_norm = weighted_norm(b, WeightedNorm(3))

    def nonlinear(spec_v: np.ndarray) -> np.ndarray:
        v = GridField(fld.irfft3(spec_v, n), L, c)
        out = divergence_form_nonlinearity(v, v, dealias).values
        if wake is not None:
            out = out + divergence_form_nonlinearity(v, wake, dealias).values
            out = out + divergence_form_nonlinearity(wake, v, dealias).values
        return fld.project_spectrum(fld.rfft3(out), n, L)

    def next_iterate(current: list[np.ndarray]) -> list[np.ndarray]:
        # N(v_m) at tau = 0 uses v_m(0) = b
        g_prev = -nonlinear(b_spec)
        w, prev_t, out = None, 0.0, []
        for tj, vj, fj in zip(t, current, free):
            dt = tj - prev_t
            g_next = -nonlinear(vj)
            base = g_prev * (dt / 2) if w is None else w + g_prev * (dt / 2)
            w = base * _multiplier(n, L, a, dt, None) + g_next * (dt / 2)
            out.append(fj + w)
            prev_t, g_prev = float(tj), g_next
        return out

    iterate = free
    triples = [_triple_from_spectra(t, iterate, n, L, c, gamma, delta)]
    increments, ratios = [], []
    diverged, converged, message = False, False, "reached m_max"
    max_guard = max(boundary_mass_ratio(GridField(fld.irfft3(s, n), L, c)) for s in iterate)
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(m_max):
            new = next_iterate(iterate)
            if not all(np.all(np.isfinite(s)) for s in new):
                diverged, message = True, f"non-finite iterate at m={m + 1}"
                break
            diff = [x - y for x, y in zip(new, iterate)]
            inc = float(_triple_from_spectra(t, diff, n, L, c, gamma, delta).total[-1])
            increments.append(inc)
            iterate = new
            triples.append(_triple_from_spectra(t, iterate, n, L, c, gamma, delta))
            max_guard = max(max_guard, boundary_mass_ratio(GridField(fld.irfft3(iterate[-1], n), L, c)))
            if len(increments) > 1:
                ratios.append(inc / increments[-2] if increments[-2] > 0 else 0.0)
            if not math.isfinite(inc) or inc > 1e12:
                diverged, message = True, f"increment blew up at m={m + 1}"
                break
            if len(ratios) >= 2 and ratios[-1] >= 1 and ratios[-2] >= 1:
                diverged, message = True, f"increments grew for two consecutive steps at m={m + 1}"
                break
            if inc <= tol * max(1.0, float(triples[-1].total[-1])):
                converged, message = True, f"increment below tolerance at m={m + 1}"
                break
    return PicardReport(triples, increments, ratios, converged, diverged, message, data_norm, data_norm <= smallness, max_guard)


@dataclass
class StartupConfig:
    """Start-up run: zero initial perturbation driven by the wake forcings.

    The defaults keep the boundary-mass guard below ``1e-6`` up to
    ``t_max = 64`` at ``n = 128``.  The wake is small (``amplitude`` 0.01)
    because the projected quadratic forcing has a pressure tail decaying
    only like ``|x|^-4``, whose share of the shell mass scales with the
    amplitude.  The cutoff keeps the wake inside radius ~28 with an erfc
    edge of about two grid spacings.
    """

    a: float = 0.25
    n: int = 128
    half_width: float = 84.0
    shift: float = 12.0
    amplitude: float = 0.01
    cutoff: tuple[float, float] = (0.0, 28.0)
    t_min: float = 0.01
    t_max: float = 64.0
    nodes: int = 96
    alpha: float = 0.2
    beta: float = 0.2
    epsilon: float = 0.05
    fit_window: tuple[float, float] = (6.4, 64.0)
    forcing: str = "f1+f2"
    psi: str = "smoothstep"
    tol: float = 0.1

    @property
    def bound(self) -> float:
        """Predicted late-time exponent ``-1/4 + epsilon + alpha + beta/2``."""
        return -0.25 + self.epsilon + self.alpha + self.beta / 2

    def wake(self) -> GridField:
        center = (self.shift, 0.0, 0.0)
        return fld.synthetic_wake_profile(
            self.amplitude, self.n, self.half_width, drift=self.a, center=center, cutoff=tuple(self.cutoff)
        )

    def times(self) -> np.ndarray:
        return geometric_grid(self.t_max, self.nodes, self.t_min)


@dataclass
class StartupResult:
    config: StartupConfig
    times: np.ndarray
    norms: np.ndarray
    guard: np.ndarray
    fit: object
    passed: bool
    label: str = SURROGATE_LABEL

    def rows(self):
        return [(float(t), float(v), float(g)) for t, v, g in zip(self.times, self.norms, self.guard)]


def run_startup(cfg: StartupConfig | None = None) -> StartupResult:
    """Solve the start-up problem and fit the late-time weighted ``L^3`` slope.

    Passes when the slope is at most ``cfg.bound + cfg.tol``.
    """
    from .rates import fit_exponent

    cfg = cfg or StartupConfig()
    wake = cfg.wake()
    zero = wake.with_values(np.zeros_like(wake.values))
    forcing = ForcingSpec(cfg.forcing, wake, cfg.a, Transition(cfg.psi))
    norm = WeightedNorm(3, WeightSpec(cfg.alpha, cfg.beta))
    run = duhamel_solve(zero, forcing, cfg.times(), {"weighted_l3": lambda v: weighted_norm(v, norm)}, keep="none")
    vals = run.observables["weighted_l3"]
    fit = fit_exponent(run.times, vals, cfg.fit_window)
    return StartupResult(cfg, run.times, vals, run.guard, fit, fit.slope <= cfg.bound + cfg.tol)
