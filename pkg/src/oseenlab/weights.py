"""Anisotropic wake weights ``(1+|x|)^alpha (1+|x|-x1)^beta``.

The second factor is small inside the paraboloidal wake behind a body
moving in the ``-x1`` direction (equivalently, fluid streaming towards
``+x1``) and large everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "WeightSpec",
    "Admissibility",
    "wake_distance",
    "eval_weight",
    "is_muckenhoupt_admissible",
    "weight_gradient_ratio",
]


@dataclass(frozen=True)
class WeightSpec:
    """Exponent pair of the wake weight.

    Parameters
    ----------
    alpha, beta : float
        Exponents of ``1+|x|`` and ``1+|x|-x1``.
    qpow : float, optional
        When set, the weight is raised to this power, i.e. the stored
        weight is ``(1+|x|)^(alpha*qpow) (1+|x|-x1)^(beta*qpow)``.  This is
        the form that enters the measure of a weighted ``L^q`` space.
    """

    alpha: float
    beta: float
    qpow: float | None = None

    def __post_init__(self):
        if self.qpow is not None and not self.qpow >= 1:
            raise InputError(f"qpow must be >= 1, got {self.qpow}")

    @property
    def exponents(self) -> tuple[float, float]:
        """Effective ``(alpha, beta)`` after applying ``qpow``."""
        p = 1.0 if self.qpow is None else self.qpow
        return self.alpha * p, self.beta * p

    def __neg__(self) -> "WeightSpec":
        return WeightSpec(-self.alpha, -self.beta, self.qpow)

    def __mul__(self, other: "WeightSpec") -> "WeightSpec":
        a1, b1 = self.exponents
        a2, b2 = other.exponents
        return WeightSpec(a1 + a2, b1 + b2)

    def __call__(self, x):
        return eval_weight(self, x)


def wake_distance(x) -> np.ndarray:
    """``|x| - x1`` for points stacked along the last axis.

    On the positive ``x1`` half space the difference is formed as
    ``|x'|^2 / (|x| + x1)`` so that points far down the wake axis do not
    lose all their digits to cancellation.
    """
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    x1 = x[..., 0]
    perp2 = x[..., 1] ** 2 + x[..., 2] ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        stable = perp2 / (r + x1)
    return np.where(x1 > 0, stable, r - x1)


def eval_weight(w: WeightSpec, x) -> np.ndarray | float:
    """Evaluate the weight at one point or an array of points.

    ``x`` has shape ``(..., 3)``; the result has shape ``x.shape[:-1]``
    (a plain float for a single point).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (3,):
        raise InputError(f"points must have a trailing axis of length 3, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("weight evaluated at a non-finite point")
    alpha, beta = w.exponents
    r = np.sqrt(np.sum(x * x, axis=-1))
    # log form keeps large exponents from overflowing intermediate powers
    val = np.exp(alpha * np.log1p(r) + beta * np.log1p(wake_distance(x)))
    return float(val) if val.ndim == 0 else val


class Admissibility(NamedTuple):
    admissible: bool
    violated: list[str]

    def __bool__(self):
        return self.admissible


def is_muckenhoupt_admissible(w: WeightSpec, q: float) -> Admissibility:
    """Check ``-1 < beta < q-1`` and ``-3 < alpha+beta < 3(q-1)``.

    These two conditions are necessary and sufficient for the weight to
    lie in the Muckenhoupt class ``A_q(R^3)``.  Works with floats or
    :class:`fractions.Fraction` inputs; comparisons are done in the
    input arithmetic.
    """
    if not q > 1:
        raise InputError(f"A_q needs q > 1, got {q}")
    alpha, beta = w.exponents
    violated = []
    if not beta > -1:
        violated.append("-1 < beta")
    if not beta < q - 1:
        violated.append("beta < q-1")
    if not alpha + beta > -3:
        violated.append("-3 < alpha+beta")
    if not alpha + beta < 3 * (q - 1):
        violated.append("alpha+beta < 3(q-1)")
    return Admissibility(not violated, violated)


def weight_gradient_ratio(w: WeightSpec, x, h: float = 1e-6) -> float:
    """Largest coordinate of ``|grad rho(x)| / rho(x)`` by central differences.

    Only defined for ``|x| >= 0.5``; ``|x|`` is not differentiable at the
    origin, which an exterior domain excludes anyway.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise InputError("weight_gradient_ratio takes a single 3-vector")
    if not h > 0:
        raise InputError("step h must be positive")
    if np.linalg.norm(x) < 0.5:
        raise DomainError("derivative ratio needs |x| >= 0.5")
    rho = eval_weight(w, x)
    steps = h * max(1.0, float(np.linalg.norm(x))) * np.eye(3)
    plus = eval_weight(w, x + steps)
    minus = eval_weight(w, x - steps)
    d = (plus - minus) / (2 * steps.diagonal())
    return float(np.max(np.abs(d)) / rho)
