"""Dimension functions (gauges) and their closed-form transforms.

A gauge is a non-decreasing function vanishing at 0, represented either as a
power law r**s or as a tabulated monotone curve interpolated log-linearly.
The module also houses the paired-gauge checks (doubling, monotone ratio) and
the radius transform that sends a target radius to the enlarged radius at
which full measure in the coarse gauge forces full measure in the fine one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DomainError, NumericError, RangeError

BISECT_RTOL = 1e-10
BISECT_MAX_ITER = 200
MONOTONE_RTOL = 1e-9


@dataclass(frozen=True)
class Gauge:
    """A dimension function: power law ``r**s`` or a tabulated monotone curve.

    Tabulated samples are (r, value) pairs with strictly increasing r > 0 and
    non-decreasing positive values; evaluation interpolates log-linearly,
    which preserves monotonicity and reproduces power laws between samples.
    """

    kind: str
    s: float = float("nan")
    samples: tuple = ()
    description: str = ""

    def __post_init__(self):
        if self.kind == "power":
            if not (self.s >= 0):
                raise ArgumentError("power gauge needs exponent s >= 0")
        elif self.kind == "tabulated":
            rs = np.array([p[0] for p in self.samples], dtype=float)
            vs = np.array([p[1] for p in self.samples], dtype=float)
            if len(rs) < 2:
                raise ArgumentError("tabulated gauge needs >= 2 samples")
            if np.any(rs <= 0) or np.any(vs <= 0):
                raise ArgumentError("tabulated samples must have r > 0 and value > 0")
            if np.any(np.diff(rs) <= 0):
                raise ArgumentError("tabulated radii must be strictly increasing")
            if np.any(np.diff(vs) < 0):
                raise ArgumentError("tabulated values must be non-decreasing")
        else:
            raise ArgumentError(f"unknown gauge kind {self.kind!r}")

    @classmethod
    def power(cls, s, description=""):
        return cls(kind="power", s=float(s), description=description)

    @classmethod
    def tabulated(cls, samples, description=""):
        samples = tuple((float(r), float(v)) for r, v in samples)
        return cls(kind="tabulated", samples=samples, description=description)


def eval_gauge(f: Gauge, r):
    """Evaluate the gauge at r (scalar or array), r > 0.

    Tabulated gauges interpolate log-linearly and reject radii outside the
    sample hull.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise DomainError("gauge argument must be positive and finite")
    if f.kind == "power":
        out = arr**f.s
    else:
        rs = np.array([p[0] for p in f.samples])
        vs = np.array([p[1] for p in f.samples])
        if np.any(arr < rs[0] * (1 - 1e-12)) or np.any(arr > rs[-1] * (1 + 1e-12)):
            raise RangeError("radius outside tabulated hull")
        out = np.exp(np.interp(np.log(arr), np.log(rs), np.log(vs)))
    return out if np.ndim(r) else float(out)


def invert_gauge(g: Gauge, y, tol=BISECT_RTOL):
    """Solve g(r) = y for r on the gauge's working range.

    Power gauges invert in closed form; tabulated gauges bisect on the
    log-linear interpolant until ``|g(r) - y| <= tol * y``.
    """
    y = float(y)
    if y <= 0 or not math.isfinite(y):
        raise RangeError("can only invert positive finite values")
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    if g.kind == "power":
        if g.s == 0:
            raise RangeError("constant gauge (s=0) is not invertible")
        return y ** (1.0 / g.s)
    rs = [p[0] for p in g.samples]
    vs = [p[1] for p in g.samples]
    if not (vs[0] * (1 - 1e-12) <= y <= vs[-1] * (1 + 1e-12)):
        raise RangeError("value outside the range of the tabulated gauge")
    lo, hi = rs[0], rs[-1]
    for _ in range(BISECT_MAX_ITER):
        mid = math.sqrt(lo * hi)  # bisect in log space, matching interpolation
        val = eval_gauge(g, mid)
        if abs(val - y) <= tol * y:
            return mid
        if val < y:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


@dataclass(frozen=True)
class GaugePair:
    """A pair (f, g) with scaling fraction kappa in [0, 1).

    ``lambda_doubling`` may be supplied when known; otherwise it is estimated
    by :func:`verify_gauge_pair`.
    """

    f: Gauge
    g: Gauge
    kappa: float
    lambda_doubling: float | None = None

    def __post_init__(self):
        if not (0 <= self.kappa < 1):
            raise ArgumentError("kappa must lie in [0, 1)")
        if self.lambda_doubling is not None and not (self.lambda_doubling > 1):
            raise ArgumentError("lambda_doubling must exceed 1")


@dataclass
class PairReport:
    monotone_ok: bool
    doubling_lambda_estimate: float
    ratio_direction: str  # behaviour of f/g as r -> 0: increasing/decreasing/constant
    f_over_g_kappa_ok: bool
    violations: list = field(default_factory=list)


def default_grid(lo=1e-6, hi=1.0, n=64):
    return np.logspace(math.log10(lo), math.log10(hi), n)


def _monotone(values, direction, rtol=MONOTONE_RTOL):
    """Check monotonicity allowing a relative slack of rtol."""
    v = np.asarray(values, dtype=float)
    scale = np.maximum(np.abs(v[1:]), np.abs(v[:-1]))
    diff = np.diff(v)
    if direction == "nondecreasing":
        return bool(np.all(diff >= -rtol * scale))
    return bool(np.all(diff <= rtol * scale))


def verify_gauge_pair(pair: GaugePair, grid=None) -> PairReport:
    """Certify the pair's hypotheses on a finite grid of radii.

    Checks, on the grid only: both gauges non-decreasing, g doubling (the
    estimate is ``max g(2x)/g(x)`` over grid points with 2x evaluable), f/g
    monotone with the direction recorded as r -> 0, and h = f/g**kappa a
    gauge (non-decreasing with h -> 0 visible at the left edge).
    """
    if grid is None:
        grid = default_grid()
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ArgumentError("grid must be non-empty")
    if grid.size < 8 or grid[-1] / grid[0] < 100:
        raise ArgumentError("grid must have >= 8 points spanning >= 2 decades")

    violations = []
    fv = eval_gauge(pair.f, grid)
    gv = eval_gauge(pair.g, grid)
    mono = True
    for name, vals in (("f", fv), ("g", gv)):
        if not _monotone(vals, "nondecreasing"):
            mono = False
            violations.append(f"{name} not non-decreasing on grid")

    # doubling estimate; for tabulated gauges skip points where 2x leaves the hull
    if pair.g.kind == "power":
        lam = 2.0**pair.g.s
    else:
        doubled = grid[2 * grid <= pair.g.samples[-1][0]]
        if doubled.size == 0:
            raise ArgumentError("no grid point with 2x inside the tabulated hull")
        lam = float(np.max(eval_gauge(pair.g, 2 * doubled) / eval_gauge(pair.g, doubled)))

    ratio = fv / gv
    inc = _monotone(ratio, "nondecreasing")
    dec = _monotone(ratio, "nonincreasing")
    if inc and dec:
        direction = "constant"
    elif dec:
        direction = "increasing"  # decreasing in r means increasing as r -> 0
    elif inc:
        direction = "decreasing"
    else:
        direction = "non-monotone"
        mono = False
        violations.append("f/g not monotone on grid")

    h = fv / gv**pair.kappa
    h_ok = bool(_monotone(h, "nondecreasing") and h[0] < h[-1])
    if not h_ok:
        violations.append("f/g^kappa is not a gauge on grid")

    return PairReport(
        monotone_ok=mono,
        doubling_lambda_estimate=lam,
        ratio_direction=direction,
        f_over_g_kappa_ok=h_ok,
        violations=violations,
    )


def ratio_direction_at(pair: GaugePair, r):
    """Local direction of f/g as r -> 0, probed at r and r/2."""
    q1 = eval_gauge(pair.f, r) / eval_gauge(pair.g, r)
    q0 = eval_gauge(pair.f, r / 2) / eval_gauge(pair.g, r / 2)
    if math.isclose(q0, q1, rel_tol=1e-12):
        return "constant"
    return "increasing" if q0 > q1 else "decreasing"


def mtp_radius(pair: GaugePair, upsilon, rtol=1e-9):
    """Transformed radius g^{-1}((f(u) / g(u)^kappa)^{1/(1-kappa)}).

    In the regime where f/g grows as r -> 0 the result must dominate the
    input radius; a violation beyond tolerance signals an inconsistent pair
    and raises.
    """
    u = float(upsilon)
    if u <= 0:
        raise DomainError("radius must be positive")
    fu = eval_gauge(pair.f, u)
    gu = eval_gauge(pair.g, u)
    val = (fu / gu**pair.kappa) ** (1.0 / (1.0 - pair.kappa))
    if not math.isfinite(val) or val <= 0:
        raise NumericError("non-finite intermediate in radius transform")
    out = invert_gauge(pair.g, val)
    if not math.isfinite(out):
        raise NumericError("non-finite transformed radius")
    if ratio_direction_at(pair, u) == "increasing" and out < u * (1 - rtol):
        raise NumericError(
            f"transformed radius {out:.6g} fell below input {u:.6g} despite growing f/g"
        )
    return out


def corollary_exponent(s, kappa, n):
    """Power-law reduction exponent (s - kappa*n) / ((1 - kappa) * n)."""
    if not (0 <= kappa < 1):
        raise ArgumentError("kappa must lie in [0, 1)")
    if n <= 0 or int(n) != n:
        raise ArgumentError("n must be a positive integer")
    if not (s > kappa * n):
        raise ArgumentError("requires s > kappa * n")
    return (s - kappa * n) / ((1.0 - kappa) * n)


def gauge_to_json(f: Gauge) -> dict:
    if f.kind == "power":
        out = {"kind": "power", "s": f.s}
    else:
        out = {"kind": "tabulated", "samples": [[r, v] for r, v in f.samples]}
    if f.description:
        out["description"] = f.description
    return out


def gauge_from_json(obj) -> Gauge:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "power":
        return Gauge.power(obj["s"], obj.get("description", ""))
    if kind == "tabulated":
        return Gauge.tabulated(obj["samples"], obj.get("description", ""))
    raise ArgumentError(f"unknown gauge kind {kind!r}")
