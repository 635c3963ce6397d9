"""Flux and velocity functions for 1-D scalar conservation laws.

Fluxes are either smooth quadratics (traffic, Burgers) or piecewise-linear
interpolants on dyadic grids.  Piecewise-linear fluxes are what the front
tracker consumes; the quadratic kinds exist to be linearized and to anchor
Lipschitz-distance computations against their exact derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

# Slopes closer than this are merged into one envelope segment.
COLLINEAR_TOL = 1e-12
# Slack when checking that an evaluation point lies in the flux domain.
DOMAIN_TOL = 1e-9

ArrayLike = Union[float, Sequence[float], np.ndarray]


def dyadic_points(level: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Grid j/2**level intersected with [lo, hi], endpoints included."""
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    step = 2.0 ** (-level)
    j_lo = int(np.ceil(lo / step - 1e-12))
    j_hi = int(np.floor(hi / step + 1e-12))
    pts = np.arange(j_lo, j_hi + 1, dtype=float) * step
    if pts.size == 0 or pts[0] > lo + 1e-15:
        pts = np.concatenate(([lo], pts))
    if pts[-1] < hi - 1e-15:
        pts = np.concatenate((pts, [hi]))
    pts[0] = lo
    pts[-1] = hi
    return pts


def _check_domain(v: np.ndarray, lo: float, hi: float) -> None:
    bad_lo = float(np.min(v, initial=np.inf))
    bad_hi = float(np.max(v, initial=-np.inf))
    if bad_lo < lo - DOMAIN_TOL or bad_hi > hi + DOMAIN_TOL:
        raise ValueError(
            f"flux argument outside domain [{lo}, {hi}]: "
            f"range of input is [{bad_lo}, {bad_hi}]"
        )


class _FluxBase:
    """Common evaluation plumbing; subclasses define _values and domain."""

    domain: tuple[float, float]

    def __call__(self, v: ArrayLike) -> ArrayLike:
        arr = np.asarray(v, dtype=float)
        _check_domain(arr, *self.domain)
        out = self._values(np.clip(arr, self.domain[0], self.domain[1]))
        if np.isscalar(v) or (isinstance(v, np.ndarray) and v.ndim == 0):
            return float(out)
        return out

    def _values(self, v: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class TrafficQuadraticFlux(_FluxBase):
    """f(rho) = rho * w_max * (1 - rho / rho_max) on [0, rho_max]."""

    w_max: float = 1.0
    rho_max: float = 1.0

    def __post_init__(self):
        if self.w_max <= 0 or self.rho_max <= 0:
            raise ValueError("w_max and rho_max must be positive")

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, self.rho_max)

    @property
    def lipschitz_norm(self) -> float:
        return self.w_max

    def _values(self, v: np.ndarray) -> np.ndarray:
        return v * self.w_max * (1.0 - v / self.rho_max)

    def deriv_right(self, x: float) -> float:
        return self.w_max * (1.0 - 2.0 * x / self.rho_max)

    deriv_left = deriv_right

    def to_spec(self) -> dict:
        return {"kind": "traffic-quadratic", "w_max": self.w_max, "rho_max": self.rho_max}


@dataclass(frozen=True)
class BurgersQuadraticFlux(_FluxBase):
    """f(v) = v**2 / 2 on [-1, 1]."""

    @property
    def domain(self) -> tuple[float, float]:
        return (-1.0, 1.0)

    @property
    def lipschitz_norm(self) -> float:
        return 1.0

    def _values(self, v: np.ndarray) -> np.ndarray:
        return 0.5 * v * v

    def deriv_right(self, x: float) -> float:
        return x

    deriv_left = deriv_right

    def to_spec(self) -> dict:
        return {"kind": "burgers-quadratic"}


@dataclass(frozen=True)
class PiecewiseLinearFlux(_FluxBase):
    """Continuous piecewise-linear flux given by node values.

    Breakpoints must be strictly increasing with at least two entries.
    The Lipschitz norm is the largest absolute segment slope and is
    recomputed from the nodes on every access, so it can never drift
    from the stored geometry.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or vals.shape != bp.shape:
            raise ValueError("breakpoints and values must be 1-D arrays of equal length")
        if bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def domain(self) -> tuple[float, float]:
        return (float(self.breakpoints[0]), float(self.breakpoints[-1]))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    @property
    def lipschitz_norm(self) -> float:
        return float(np.max(np.abs(self.slopes)))

    def _values(self, v: np.ndarray) -> np.ndarray:
        return np.interp(v, self.breakpoints, self.values)

    def deriv_right(self, x: float) -> float:
        i = int(np.searchsorted(self.breakpoints, x, side="right")) - 1
        i = min(max(i, 0), self.breakpoints.size - 2)
        return float(self.slopes[i])

    def deriv_left(self, x: float) -> float:
        i = int(np.searchsorted(self.breakpoints, x, side="left")) - 1
        i = min(max(i, 0), self.breakpoints.size - 2)
        return float(self.slopes[i])

    def to_spec(self) -> dict:
        return {
            "kind": "piecewise-linear",
            "breakpoints": [float(x) for x in self.breakpoints],
            "values": [float(y) for y in self.values],
        }


FluxFunction = Union[TrafficQuadraticFlux, BurgersQuadraticFlux, PiecewiseLinearFlux]


def flux_from_spec(spec: dict) -> FluxFunction:
    """Rebuild a flux from its JSON form (inverse of to_spec)."""
    kind = spec.get("kind")
    if kind == "traffic-quadratic":
        return TrafficQuadraticFlux(
            w_max=float(spec.get("w_max", 1.0)), rho_max=float(spec.get("rho_max", 1.0))
        )
    if kind == "burgers-quadratic":
        return BurgersQuadraticFlux()
    if kind == "piecewise-linear":
        return PiecewiseLinearFlux(
            np.asarray(spec["breakpoints"], dtype=float),
            np.asarray(spec["values"], dtype=float),
        )
    raise ValueError(f"unknown flux kind: {kind!r}")


def piecewise_linearize(flux: FluxFunction, level: int) -> PiecewiseLinearFlux:
    """Interpolate ``flux`` at the dyadic points j/2**level of its domain.

    The result agrees with ``flux`` at every grid point; between points it
    is the chord.  Linear fluxes are reproduced exactly at any level.
    """
    lo, hi = flux.domain
    grid = dyadic_points(level, lo, hi)
    return PiecewiseLinearFlux(grid, np.asarray(flux(grid), dtype=float))


def _restricted_nodes(flux: PiecewiseLinearFlux, a: float, b: float):
    """Node set of ``flux`` on [a, b] with interpolated endpoint values."""
    lo, hi = flux.domain
    if not (lo - DOMAIN_TOL <= a < b <= hi + DOMAIN_TOL):
        raise ValueError(f"need domain lo <= a < b <= hi, got a={a}, b={b}")
    a = min(max(a, lo), hi)
    b = min(max(b, lo), hi)
    bp = flux.breakpoints
    i = int(np.searchsorted(bp, a, side="right"))
    j = int(np.searchsorted(bp, b, side="left"))
    xs = np.concatenate(([a], bp[i:j], [b]))
    ys = np.concatenate(
        ([flux(a)], flux.values[i:j], [flux(b)])
    )
    return xs, ys


def _merge_collinear(xs: list, ys: list) -> PiecewiseLinearFlux:
    out_x = [xs[0]]
    out_y = [ys[0]]
    last_slope = None
    for k in range(1, len(xs)):
        slope = (ys[k] - out_y[-1]) / (xs[k] - out_x[-1])
        if last_slope is not None and abs(slope - last_slope) <= COLLINEAR_TOL:
            out_x[-1] = xs[k]
            out_y[-1] = ys[k]
            last_slope = (out_y[-1] - out_y[-2]) / (out_x[-1] - out_x[-2])
        else:
            out_x.append(xs[k])
            out_y.append(ys[k])
            last_slope = slope
    return PiecewiseLinearFlux(np.asarray(out_x), np.asarray(out_y))


def convex_envelope(flux: PiecewiseLinearFlux, a: float, b: float) -> PiecewiseLinearFlux:
    """Largest convex minorant of ``flux`` on [a, b], as a flux on [a, b]."""
    xs, ys = _restricted_nodes(flux, a, b)
    hull_x = [float(xs[0])]
    hull_y = [float(ys[0])]
    for x, y in zip(xs[1:], ys[1:]):
        x, y = float(x), float(y)
        # pop while the previous node sits on or above the new chord
        while len(hull_x) >= 2:
            x0, y0 = hull_x[-2], hull_y[-2]
            if (hull_y[-1] - y0) * (x - x0) >= (y - y0) * (hull_x[-1] - x0):
                hull_x.pop()
                hull_y.pop()
            else:
                break
        hull_x.append(x)
        hull_y.append(y)
    return _merge_collinear(hull_x, hull_y)


def concave_envelope(flux: PiecewiseLinearFlux, a: float, b: float) -> PiecewiseLinearFlux:
    """Smallest concave majorant of ``flux`` on [a, b], as a flux on [a, b]."""
    xs, ys = _restricted_nodes(flux, a, b)
    hull_x = [float(xs[0])]
    hull_y = [float(ys[0])]
    for x, y in zip(xs[1:], ys[1:]):
        x, y = float(x), float(y)
        while len(hull_x) >= 2:
            x0, y0 = hull_x[-2], hull_y[-2]
            if (hull_y[-1] - y0) * (x - x0) <= (y - y0) * (hull_x[-1] - x0):
                hull_x.pop()
                hull_y.pop()
            else:
                break
        hull_x.append(x)
        hull_y.append(y)
    return _merge_collinear(hull_x, hull_y)


def lipschitz_distance(f: FluxFunction, g: FluxFunction) -> float:
    """sup |(f - g)(u) - (f - g)(v)| / |u - v| over the common domain.

    Exact for any mix of the supported kinds: on each segment of the union
    breakpoint grid the difference has a linear derivative, so the sup of
    |f' - g'| is attained at segment endpoints (one-sided).
    """
    lo = max(f.domain[0], g.domain[0])
    hi = min(f.domain[1], g.domain[1])
    if not lo < hi:
        raise ValueError("flux domains do not overlap")
    knots = {lo, hi}
    for h in (f, g):
        if isinstance(h, PiecewiseLinearFlux):
            knots.update(float(x) for x in h.breakpoints if lo < x < hi)
    grid = sorted(knots)
    best = 0.0
    for x0, x1 in zip(grid[:-1], grid[1:]):
        d0 = f.deriv_right(x0) - g.deriv_right(x0)
        d1 = f.deriv_left(x1) - g.deriv_left(x1)
        best = max(best, abs(d0), abs(d1))
    return best


# ---------------------------------------------------------------------------
# velocity functions


@dataclass(frozen=True)
class LinearTrafficVelocity:
    """w(rho) = w_max * (1 - rho / rho_max)."""

    w_max: float = 1.0
    rho_max: float = 1.0

    def __post_init__(self):
        if self.w_max <= 0 or self.rho_max <= 0:
            raise ValueError("w_max and rho_max must be positive")

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, self.rho_max)

    @property
    def lipschitz_norm(self) -> float:
        return self.w_max / self.rho_max

    def __call__(self, rho: ArrayLike) -> ArrayLike:
        arr = np.asarray(rho, dtype=float)
        out = self.w_max * (1.0 - arr / self.rho_max)
        if np.isscalar(rho) or (isinstance(rho, np.ndarray) and rho.ndim == 0):
            return float(out)
        return out

    def is_admissible(self) -> bool:
        """Strictly decreasing, vanishing at rho_max, finite Lipschitz norm."""
        return True

    def to_spec(self) -> dict:
        return {"kind": "linear-traffic", "w_max": self.w_max, "rho_max": self.rho_max}


@dataclass(frozen=True)
class TableVelocity:
    """Piecewise-linear velocity given by node values on [0, rho_max]."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or vals.shape != bp.shape or bp.size < 2:
            raise ValueError("breakpoints and values must be 1-D arrays, length >= 2")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def domain(self) -> tuple[float, float]:
        return (float(self.breakpoints[0]), float(self.breakpoints[-1]))

    @property
    def lipschitz_norm(self) -> float:
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.breakpoints))))

    def __call__(self, rho: ArrayLike) -> ArrayLike:
        arr = np.asarray(rho, dtype=float)
        _check_domain(arr, *self.domain)
        out = np.interp(np.clip(arr, *self.domain), self.breakpoints, self.values)
        if np.isscalar(rho) or (isinstance(rho, np.ndarray) and rho.ndim == 0):
            return float(out)
        return out

    def is_admissible(self) -> bool:
        """Strictly decreasing with w(rho_max) = 0 (within 1e-14)."""
        return bool(np.all(np.diff(self.values) < 0)) and abs(self.values[-1]) <= 1e-14

    def to_spec(self) -> dict:
        return {
            "kind": "table",
            "breakpoints": [float(x) for x in self.breakpoints],
            "values": [float(y) for y in self.values],
        }


VelocityFunction = Union[LinearTrafficVelocity, TableVelocity]


def velocity_from_spec(spec: dict) -> VelocityFunction:
    kind = spec.get("kind")
    if kind == "linear-traffic":
        return LinearTrafficVelocity(
            w_max=float(spec.get("w_max", 1.0)), rho_max=float(spec.get("rho_max", 1.0))
        )
    if kind == "table":
        return TableVelocity(
            np.asarray(spec["breakpoints"], dtype=float),
            np.asarray(spec["values"], dtype=float),
        )
    raise ValueError(f"unknown velocity kind: {kind!r}")


def traffic_flux_from_velocity(
    w: VelocityFunction, level: int, extra_breakpoints: Sequence[float] = ()
) -> PiecewiseLinearFlux:
    """Chord interpolant of rho * w(rho) on the dyadic grid of [0, rho_max].

    ``extra_breakpoints`` are merged into the grid so that chosen states can
    be made exact flux nodes (their Rankine-Hugoniot speeds then come out in
    closed form).
    """
    lo, hi = w.domain
    grid = dyadic_points(level, lo, hi)
    if len(extra_breakpoints) > 0:
        grid = np.unique(np.concatenate((grid, np.asarray(extra_breakpoints, dtype=float))))
        if grid[0] < lo - 1e-12 or grid[-1] > hi + 1e-12:
            raise ValueError("extra breakpoints outside the velocity domain")
    vals = grid * np.asarray(w(grid), dtype=float)
    return PiecewiseLinearFlux(grid, vals)
