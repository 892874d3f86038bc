"""Decay-exponent fitting and prediction-vs-measurement sweeps.

Every estimate being checked is an upper bound, so a row passes when the
measured slope is at most the predicted exponent plus a tolerance; faster
decay is never a failure.  Rows may opt into two-sided checks for exact
scaling laws such as the heat kernel.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import field as fld
from .errors import ConfigurationError, InputError, WrapAroundError
from .field import GridField, WeightedNorm, solenoidal_bump, weighted_norm
from .regions import RateQuery, check, to_rational
from .semigroup import OseenParams, auto_box, evolve, heat_gaussian
from .weights import WeightSpec

__all__ = [
    "DecayFit",
    "fit_exponent",
    "SweepRow",
    "RowResult",
    "SweepResult",
    "sweep",
    "load_plan",
    "ROW_FIELDS",
]


@dataclass
class DecayFit:
    """OLS line through ``(log t, log value)``.

    ``curvature`` is the quadratic coefficient of a second fit in ``log t``;
    ``log_curvature`` flags windows where that quadratic departs from the
    line by more than the tolerance, the signature of logarithmic factors.
    """

    slope: float
    intercept: float
    r2: float
    window: tuple[float, float]
    n_points: int
    residual_max: float
    stderr: float
    curvature: float
    log_curvature: bool

    def to_json(self) -> dict:
        return asdict(self)


def fit_exponent(times, values, window=None, curvature_tol: float = 1e-3) -> DecayFit:
    """Fit ``value ~ C t^slope`` on the points with ``t`` inside ``window``.

    Raises
    ------
    InputError
        Fewer than 8 points in the window, a degenerate window, or
        nonpositive values inside it.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise InputError("times and values must be 1-D arrays of equal length")
    if window is not None:
        lo, hi = window
        if not lo < hi:
            raise InputError("fit window needs t_min < t_max")
        keep = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
        t, v = t[keep], v[keep]
    if t.size < 8:
        raise InputError(f"need at least 8 points in the fit window, got {t.size}")
    if np.any(t <= 0):
        raise InputError("times must be positive")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise InputError("values must be positive and finite inside the window")
    x, y = np.log(t), np.log(v)
    (slope, intercept), cov = np.polyfit(x, y, 1, cov="unscaled")
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(t.size - 2, 1)
    stderr = float(math.sqrt(cov[0, 0] * ss_res / dof))
    c2 = float(np.polyfit(x, y, 2)[0])
    span = float(x[-1] - x[0]) if x.size else 0.0
    # peak gap between a parabola and its chord over the window
    bulge = abs(c2) * span**2 / 8
    return DecayFit(
        float(slope),
        float(intercept),
        float(r2),
        (float(t[0]), float(t[-1])),
        int(t.size),
        float(np.max(np.abs(resid))),
        stderr,
        c2,
        bool(bulge > curvature_tol),
    )


ROW_FIELDS = (
    "name",
    "data",
    "a",
    "alpha",
    "beta",
    "q",
    "r",
    "deriv",
    "dual",
    "t_min",
    "t_max",
    "n_times",
    "n",
    "width",
    "tol",
    "two_sided",
    "predicted",
    "rule",
    "epsilon",
    "half_width",
    "amplitude",
)


@dataclass
class SweepRow:
    """One experiment of a sweep plan.

    ``data="compact"`` evolves one solenoidal bump of ``width`` on a box
    sized for the whole time range and records ``||rho d^k S_a(t) f||_r``.
    ``data="scaled-gaussian"`` measures the operator ratio
    ``||S_a(t) f_t||_r / ||f_t||_q`` with ``f_t`` the heat kernel at time
    ``t``, each on a box sized for that ``t``; this is the extremal data
    for unweighted heat estimates.  ``dual`` evolves with drift ``-a`` and
    negative weights.  ``predicted`` overrides the region engine.
    """

    name: str
    data: str = "compact"
    a: float = 1.0
    alpha: str = "0"
    beta: str = "0"
    q: str = "2"
    r: str = "2"
    deriv: int | str = 0
    dual: bool = False
    t_min: float = 4.0
    t_max: float = 32.0
    n_times: int = 10
    n: int = 128
    width: float = 1.0
    tol: float = 0.1
    two_sided: bool = False
    predicted: str | None = None
    rule: str | None = None
    epsilon: str | None = None
    half_width: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.data not in ("compact", "scaled-gaussian"):
            raise ConfigurationError(f"unknown data kind {self.data!r}")
        if self.deriv not in (0, 1):
            raise ConfigurationError("sweep rows support deriv 0 or 1")
        if not 0 < self.t_min < self.t_max:
            raise ConfigurationError("need 0 < t_min < t_max")
        if self.n_times < 8:
            raise ConfigurationError("need at least 8 time samples")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigurationError("n must be a power of two")
        if not self.amplitude > 0:
            raise ConfigurationError("amplitude must be positive")
        if self.half_width is not None and not self.half_width > 0:
            raise ConfigurationError("half_width must be positive")
        for name in ("alpha", "beta", "q", "r"):
            try:
                to_rational(getattr(self, name))
            except InputError as exc:
                raise ConfigurationError(f"{name}: {exc}") from exc

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRow":
        unknown = set(d) - set(ROW_FIELDS)
        if unknown:
            raise ConfigurationError(f"unknown plan keys: {sorted(unknown)}")
        d = {k: (str(v) if k in ("alpha", "beta", "q", "r", "predicted", "epsilon") and v is not None else v) for k, v in d.items()}
        return cls(**d)

    def query(self) -> RateQuery:
        drift = "dual" if self.dual and self.a != 0 else ("zero" if self.a == 0 else "positive")
        return RateQuery(
            self.q,
            self.r,
            self.alpha,
            self.beta,
            drift=drift,
            deriv=self.deriv,
            epsilon=self.epsilon,
            dual_weight=self.dual,
        )


@dataclass
class RowResult:
    name: str
    status: str
    predicted: Fraction | None
    rule: str | None
    fit: DecayFit | None
    passed: bool
    guard_max: float = float("nan")
    max_safe_t: float | None = None
    message: str = ""

    def flat(self) -> dict:
        f = self.fit
        return {
            "name": self.name,
            "status": self.status,
            "passed": self.passed,
            "predicted": None if self.predicted is None else str(self.predicted),
            "predicted_float": None if self.predicted is None else float(self.predicted),
            "rule": self.rule,
            "slope": None if f is None else f.slope,
            "r2": None if f is None else f.r2,
            "stderr": None if f is None else f.stderr,
            "n_points": None if f is None else f.n_points,
            "log_curvature": None if f is None else f.log_curvature,
            "guard_max": self.guard_max,
            "max_safe_t": self.max_safe_t,
            "message": self.message,
        }


CSV_COLUMNS = (
    "name",
    "status",
    "passed",
    "predicted",
    "predicted_float",
    "rule",
    "slope",
    "r2",
    "stderr",
    "n_points",
    "log_curvature",
    "guard_max",
    "max_safe_t",
    "message",
)


@dataclass
class SweepResult:
    rows: list[RowResult]
    series: dict[str, list[tuple[float, float, float]]] = field(default_factory=dict)

    @property
    def pass_count(self) -> int:
        return sum(r.passed for r in self.rows)

    @property
    def fail_count(self) -> int:
        return len(self.rows) - self.pass_count

    @property
    def guard_failures(self) -> list[RowResult]:
        return [r for r in self.rows if r.status == "guard"]

    def summary(self) -> dict:
        return {"pass_count": self.pass_count, "fail_count": self.fail_count, "rows": [r.flat() for r in self.rows]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        wr.writeheader()
        for r in self.rows:
            wr.writerow({k: "" if v is None else v for k, v in r.flat().items()})
        return buf.getvalue()

    def series_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["name", "t", "value", "guard_ratio"])
        for name, rows in self.series.items():
            for t, v, g in rows:
                wr.writerow([name, repr(t), repr(v), repr(g)])
        return buf.getvalue()


def _predict(row: SweepRow) -> tuple[Fraction | None, str | None, str]:
    if row.predicted is not None:
        return to_rational(row.predicted), "explicit", ""
    try:
        verdict = check(row.query())
    except InputError as exc:
        return None, None, f"no prediction: {exc}"
    if row.rule is not None:
        est = verdict.get(row.rule)
        if est is None:
            failed = "; ".join(s for rid, s in verdict.violated if rid == row.rule)
            return None, row.rule, f"rule {row.rule} not applicable: {failed or 'out of scope'}"
    else:
        est = verdict.best()
        if est is None:
            return None, None, "no applicable estimate"
    return est.worst, est.rule, ""


def _gradient_magnitude(f: GridField) -> GridField:
    g = fld.spectral_gradient(f)
    return GridField(np.sqrt(np.sum(g * g, axis=(0, 1)))[None], f.half_width, f.center)


def _measure(row: SweepRow) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    times = np.geomspace(row.t_min, row.t_max, row.n_times)
    sign = -1.0 if row.dual else 1.0
    a = sign * row.a
    w = WeightSpec(sign * float(to_rational(row.alpha)), sign * float(to_rational(row.beta)))
    q, r = float(to_rational(row.q)), float(to_rational(row.r))
    out_norm = WeightedNorm(r, w)
    values, guards = [], []
    if row.data == "scaled-gaussian":
        for t in times:
            half, center = auto_box(a, 2 * t, width=0)
            f = heat_gaussian(row.n, half, t, grid_center=center)
            f = f.with_values(row.amplitude * f.values)
            fw = weighted_norm(f, WeightedNorm(q, w))
            out = evolve(f, OseenParams(a, t))
            guards.append(fld.boundary_mass_ratio(out))
            if row.deriv:
                out = _gradient_magnitude(out)
            values.append(weighted_norm(out, out_norm) / fw)
        return times, np.array(values), np.array(guards)
    if row.half_width is None:
        half, center = auto_box(a, row.t_max, width=row.width)
    else:
        half, center = row.half_width, (0.0, 0.0, 0.0)
    f = solenoidal_bump(row.n, half, row.width, grid_center=center)
    f = f.with_values(row.amplitude * f.values)
    for t in times:
        out = evolve(f, OseenParams(a, float(t)))
        guards.append(fld.boundary_mass_ratio(out))
        if row.deriv:
            out = _gradient_magnitude(out)
        values.append(weighted_norm(out, out_norm))
    return times, np.array(values), np.array(guards)


def _run_row(row: SweepRow) -> tuple[RowResult, list]:
    predicted, rule, note = _predict(row)
    try:
        times, values, guards = _measure(row)
    except WrapAroundError as exc:
        return RowResult(row.name, "guard", predicted, rule, None, False, exc.ratio, exc.max_safe_t, str(exc)), []
    fit = fit_exponent(times, values)
    series = [(float(t), float(v), float(g)) for t, v, g in zip(times, values, guards)]
    if predicted is None:
        return RowResult(row.name, "no-prediction", None, rule, fit, False, float(guards.max()), None, note), series
    passed = fit.slope <= float(predicted) + row.tol
    if row.two_sided:
        passed = passed and fit.slope >= float(predicted) - row.tol
    status = "pass" if passed else "fail"
    return RowResult(row.name, status, predicted, rule, fit, passed, float(guards.max()), None, note), series


def sweep(plan, workers: int = 1) -> SweepResult:
    """Run every row of ``plan`` (SweepRow objects or dicts).

    Guard violations and missing predictions are recorded per row and do
    not stop the sweep.
    """
    rows = [r if isinstance(r, SweepRow) else SweepRow.from_dict(r) for r in plan]
    if not rows:
        raise ConfigurationError("empty plan")
    names = [r.name for r in rows]
    if len(set(names)) != len(names):
        raise ConfigurationError("row names must be unique")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_run_row, rows))
    else:
        outcomes = [_run_row(r) for r in rows]
    return SweepResult([o[0] for o in outcomes], {r.name: o[1] for r, o in zip(rows, outcomes)})


def load_plan(path) -> list[SweepRow]:
    """Read a plan file: a JSON list of rows or an object with a ``rows`` list."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read plan {path}: {exc}") from exc
    if isinstance(raw, dict):
        raw = raw.get("rows")
    if not isinstance(raw, list):
        raise ConfigurationError("plan must be a list of rows or an object with 'rows'")
    return [SweepRow.from_dict(d) for d in raw]
