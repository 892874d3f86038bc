"""Periodic 3-D grid fields, the spectral Leray projection and weighted norms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import fft, special

from .errors import ConfigurationError, InputError
from .weights import WeightSpec, eval_weight

__all__ = [
    "GridField",
    "WeightedNorm",
    "leray_project",
    "weighted_norm",
    "spectral_divergence",
    "spectral_curl",
    "spectral_gradient",
    "boundary_mass_ratio",
    "smooth_cutoff",
    "synthetic_wake_profile",
    "gaussian_bump",
    "solenoidal_bump",
    "FFT_WORKERS",
]

# scipy.fft worker count; the CLI --threads flag overrides it
FFT_WORKERS = 1

GUARD_SHELL = 0.9
GUARD_THRESHOLD = 1e-6


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of a scalar or vector field on a uniform periodic grid.

    Parameters
    ----------
    values : ndarray, shape (ncomp, n, n, n)
        Component-major samples; ``ncomp`` is 1 or 3.
    half_width : float
        The box is ``center + [-L, L)^3``.
    center : tuple of float
        Box centre.  Shifting the box downstream keeps a drifting field
        inside the guard margin for longer.
    """

    values: np.ndarray
    half_width: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 3:
            v = v[None]
        if v.ndim != 4 or v.shape[0] not in (1, 3) or not (v.shape[1] == v.shape[2] == v.shape[3]):
            raise ConfigurationError(f"values must have shape (1|3, n, n, n), got {v.shape}")
        if not _is_pow2(v.shape[1]):
            raise ConfigurationError(f"grid size must be a power of two, got {v.shape[1]}")
        if not self.half_width > 0:
            raise ConfigurationError("half_width must be positive")
        if not np.all(np.isfinite(v)):
            raise InputError("field values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def ncomp(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    def axes(self) -> list[np.ndarray]:
        base = -self.half_width + self.spacing * np.arange(self.n)
        return [c + base for c in self.center]

    def mesh(self) -> np.ndarray:
        """Point coordinates, shape ``(n, n, n, 3)``."""
        return _mesh(self.n, self.half_width, self.center)

    def with_values(self, values) -> "GridField":
        return GridField(values, self.half_width, self.center)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=0))

    @classmethod
    def from_function(cls, fn, n: int, half_width: float, center=(0.0, 0.0, 0.0)) -> "GridField":
        """Sample ``fn(points)`` where ``points`` has shape ``(n, n, n, 3)``.

        ``fn`` returns shape ``(n, n, n)`` for a scalar or ``(3, n, n, n)``.
        """
        if not _is_pow2(n):
            raise ConfigurationError(f"grid size must be a power of two, got {n}")
        return cls(np.asarray(fn(_mesh(n, half_width, tuple(center)))), half_width, center)

    def save(self, path) -> None:
        """Write ``path.bin`` (little-endian float64/complex128) and ``path.json``."""
        path = Path(path)
        arr = self.values
        dtype = "<c16" if np.iscomplexobj(arr) else "<f8"
        arr.astype(dtype).tofile(path.with_suffix(".bin"))
        header = {
            "shape": list(arr.shape),
            "half_width": self.half_width,
            "center": list(self.center),
            "components": self.ncomp,
            "dtype": dtype,
            "byte_order": "little",
        }
        path.with_suffix(".json").write_text(json.dumps(header, indent=2))

    @classmethod
    def load(cls, path) -> "GridField":
        path = Path(path)
        header = json.loads(path.with_suffix(".json").read_text())
        arr = np.fromfile(path.with_suffix(".bin"), dtype=header["dtype"]).reshape(header["shape"])
        return cls(arr, header["half_width"], tuple(header["center"]))


@lru_cache(maxsize=8)
def _mesh(n: int, half_width: float, center: tuple) -> np.ndarray:
    h = 2 * half_width / n
    axes = [c - half_width + h * np.arange(n) for c in center]
    m = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=8)
def _wavenumbers(n: int, half_width: float):
    """Full and half-spectrum angular wavenumbers for an rfftn layout."""
    h = 2 * half_width / n
    k = 2 * np.pi * np.fft.fftfreq(n, d=h)
    kr = 2 * np.pi * np.fft.rfftfreq(n, d=h)
    kx, ky, kz = np.meshgrid(k, k, kr, indexing="ij", sparse=True)
    return kx, ky, kz


@lru_cache(maxsize=8)
def _derivative_wavenumbers(n: int, half_width: float):
    """Wavenumbers with the Nyquist mode zeroed, as needed for odd derivatives."""
    kx, ky, kz = _wavenumbers(n, half_width)
    kx, ky, kz = kx.copy(), ky.copy(), kz.copy()
    kx[n // 2] = 0
    ky[:, n // 2] = 0
    kz[..., -1] = 0
    return kx, ky, kz


def rfft3(values: np.ndarray) -> np.ndarray:
    return fft.rfftn(values, axes=(-3, -2, -1), workers=FFT_WORKERS)


def irfft3(spec: np.ndarray, n: int) -> np.ndarray:
    return fft.irfftn(spec, s=(n, n, n), axes=(-3, -2, -1), workers=FFT_WORKERS)


def _require_real_vector(f: GridField):
    if f.ncomp != 3:
        raise ConfigurationError("operation needs a 3-component field")
    if np.iscomplexobj(f.values):
        raise InputError("spectral operators expect real-valued fields")


def project_spectrum(spec: np.ndarray, n: int, half_width: float) -> np.ndarray:
    """Apply ``I - k k^T / |k|^2`` to a half-spectrum vector field; ``k = 0`` untouched.

    The Nyquist component of ``k`` is zeroed: with it kept, the multiplier is
    not conjugate-symmetric on the Nyquist planes and the real transform
    loses idempotence.
    """
    kx, ky, kz = _derivative_wavenumbers(n, half_width)
    k2 = kx**2 + ky**2 + kz**2
    with np.errstate(invalid="ignore", divide="ignore"):
        inv = np.where(k2 > 0, 1.0 / k2, 0.0)
    kdot = (kx * spec[0] + ky * spec[1] + kz * spec[2]) * inv
    return np.stack([spec[0] - kx * kdot, spec[1] - ky * kdot, spec[2] - kz * kdot])


def leray_project(f: GridField) -> GridField:
    """Orthogonal projection onto divergence-free fields, mode by mode.

    The zero mode is passed through unchanged.
    """
    _require_real_vector(f)
    spec = project_spectrum(rfft3(f.values), f.n, f.half_width)
    return f.with_values(irfft3(spec, f.n))


def spectral_divergence(f: GridField) -> np.ndarray:
    _require_real_vector(f)
    kx, ky, kz = _derivative_wavenumbers(f.n, f.half_width)
    s = rfft3(f.values)
    return irfft3(1j * (kx * s[0] + ky * s[1] + kz * s[2]), f.n)


def spectral_curl(f: GridField) -> GridField:
    _require_real_vector(f)
    kx, ky, kz = _derivative_wavenumbers(f.n, f.half_width)
    s = rfft3(f.values)
    c = np.stack([ky * s[2] - kz * s[1], kz * s[0] - kx * s[2], kx * s[1] - ky * s[0]])
    return f.with_values(irfft3(1j * c, f.n))


def spectral_gradient(f: GridField) -> np.ndarray:
    """Jacobian ``d_j f_i`` of each component, shape ``(ncomp, 3, n, n, n)``."""
    kx, ky, kz = _derivative_wavenumbers(f.n, f.half_width)
    s = rfft3(f.values)
    return np.stack([irfft3(1j * np.stack([kx * c, ky * c, kz * c]), f.n) for c in s])


@dataclass(frozen=True)
class WeightedNorm:
    """``||rho f||_q`` with ``rho`` the wake weight; ``q`` may be ``inf``."""

    q: float
    weight: WeightSpec = field(default_factory=lambda: WeightSpec(0.0, 0.0))

    def __post_init__(self):
        if not self.q >= 1:
            raise InputError(f"q must be >= 1, got {self.q}")


@lru_cache(maxsize=16)
def _weight_array(weight: WeightSpec, n: int, half_width: float, center: tuple) -> np.ndarray:
    w = eval_weight(weight, _mesh(n, half_width, center))
    w.setflags(write=False)
    return w


def weighted_norm(f: GridField, norm: WeightedNorm) -> float:
    """Riemann-sum approximation of ``||rho f||_q``, using the pointwise
    Euclidean norm across components.  ``q = inf`` gives ``max rho |f|``."""
    mag = f.magnitude()
    if norm.weight.alpha != 0 or norm.weight.beta != 0:
        mag = mag * _weight_array(norm.weight, f.n, f.half_width, f.center)
    if math.isinf(norm.q):
        return float(mag.max())
    q = norm.q
    peak = mag.max()
    if peak == 0:
        return 0.0
    # scale by the peak so large weights cannot overflow |f|^q
    return float(peak * (np.sum((mag / peak) ** q) * f.cell_volume) ** (1 / q))


def boundary_mass_ratio(f: GridField, shell: float = GUARD_SHELL) -> float:
    """``||f||_2`` over the outer shell ``max_i |x_i - c_i| >= shell*L`` over ``||f||_2``."""
    axes = -f.half_width + f.spacing * np.arange(f.n)
    inner = np.abs(axes) < shell * f.half_width
    mask = ~(inner[:, None, None] & inner[None, :, None] & inner[None, None, :])
    mag2 = np.sum(np.abs(f.values) ** 2, axis=0)
    total = mag2.sum()
    if total == 0:
        return 0.0
    return float(math.sqrt(mag2[mask].sum() / total))


def smooth_cutoff(r, r0: float, r1: float):
    """Smooth step from 1 at ``r0`` to 0 at ``r1``, within 1e-12 at both ends.

    An erfc profile is used instead of a compactly supported bump because
    its Fourier transform decays like a Gaussian, so the cutoff does not
    ring on the grid.
    """
    mid, sig = (r0 + r1) / 2, (r1 - r0) / 10
    return 0.5 * special.erfc((np.asarray(r, dtype=float) - mid) / sig)


def gaussian_bump(points, width: float = 1.0, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    d = points - np.asarray(center)
    return np.exp(-np.sum(d * d, axis=-1) / (2 * width**2))


def solenoidal_bump(n: int, half_width: float, width: float = 1.0, grid_center=(0.0, 0.0, 0.0), bump_center=(0.0, 0.0, 0.0)) -> GridField:
    """Mean-zero divergence-free bump, the spectral curl of ``(g, 0, g)``
    with ``g`` a Gaussian of the given width.

    Taking the curl on the grid makes the field divergence-free to roundoff
    in the discrete sense, not just analytically.
    """
    g = gaussian_bump(_mesh(n, half_width, tuple(grid_center)), width, bump_center)
    pot = GridField(np.stack([g, np.zeros_like(g), g]), half_width, grid_center)
    return spectral_curl(pot)


def synthetic_wake_profile(
    amplitude: float,
    n: int,
    half_width: float,
    drift: float = 1.0,
    core: float | None = None,
    center=(0.0, 0.0, 0.0),
    cutoff: tuple[float, float] | None = None,
) -> GridField:
    """Divergence-free wake field with the Oseen far-field structure.

    The field is ``curl(chi A)`` with ``A = (0, -x3, x2) g(lam (r - x1)) / (4 pi r)``,
    ``g(z) = (1 - exp(-z))/z``, ``lam = drift/2`` and ``r`` regularised as
    ``sqrt(|x|^2 + core^2)``; ``core`` defaults to three grid spacings so the
    mollified core is resolved.  Without the cutoff ``chi`` this is the
    velocity of the Oseen flow driven by a point force along ``e1``, which
    decays like ``|x|^-1`` inside the wake along ``+x1`` and like
    ``|x|^-2`` elsewhere.  ``chi`` is a smooth radial cutoff (default
    switching off between 0.45 and 0.85 of the half width), so the result
    is compactly supported and exactly solenoidal on the grid.  The
    amplitude is normalised so that ``|u| ~ amplitude / |x|`` far down the
    wake axis.
    """
    if drift <= 0:
        raise InputError("the wake needs a positive drift")
    if core is None:
        core = max(1.0, 6 * half_width / n)
    pts = _mesh(n, half_width, tuple(center))
    x1, x2, x3 = pts[..., 0], pts[..., 1], pts[..., 2]
    rad = np.sqrt(np.sum(pts * pts, axis=-1))
    reg = np.sqrt(rad**2 + core**2)
    lam = drift / 2
    z = lam * (x2**2 + x3**2 + core**2) / (reg + x1)
    g = np.where(z > 1e-8, -np.expm1(-z) / np.where(z > 1e-8, z, 1.0), 1 - z / 2)
    r0, r1 = cutoff if cutoff is not None else (0.45 * half_width, 0.85 * half_width)
    chi = smooth_cutoff(rad, r0, r1)
    # on the +x1 axis |curl A| -> 1/(2 pi r); rescale to amplitude / r
    pot = amplitude * 2 * np.pi * chi * g / (4 * np.pi * reg)
    a_field = GridField(np.stack([np.zeros_like(pot), -x3 * pot, x2 * pot]), half_width, center)
    return spectral_curl(a_field)
