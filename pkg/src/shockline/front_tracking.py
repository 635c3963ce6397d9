"""Exact front tracking for 1-D scalar conservation laws.

Piecewise-constant initial data plus a piecewise-linear flux evolve as a
finite set of straight-line discontinuities (fronts).  Collisions are the
only events; each one is resolved by a fresh Riemann solution of the outer
states, so the evolution is exact up to floating-point rounding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from heapq import heappush, heappop
from math import inf, sqrt
from typing import Iterable, Optional, Sequence

import numpy as np

from .flux import (
    PiecewiseLinearFlux,
    concave_envelope,
    convex_envelope,
)

# Two collision candidates are one multi-front collision when both their
# times and their positions agree within these tolerances.
EVENT_TIME_TOL = 1e-12
EVENT_SPACE_TOL = 1e-12
# Outgoing fronts with a smaller jump than this are dropped.
ZERO_STRENGTH_TOL = 1e-14


class EventCapError(RuntimeError):
    """Raised when a run exceeds its collision-event budget."""


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function: k breakpoints, k+1 values.

    Jumps with exactly equal neighbouring values are removed on
    construction, so every stored jump has positive strength.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        vals = np.atleast_1d(np.asarray(self.values, dtype=float))
        if bp.size + 1 != vals.size:
            raise ValueError(
                f"need len(values) == len(breakpoints) + 1, got {vals.size} and {bp.size}"
            )
        if bp.size and not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        keep = np.flatnonzero(vals[:-1] != vals[1:])
        if keep.size != bp.size:
            bp = bp[keep]
            vals = vals[np.concatenate((keep, [vals.size - 1]))] if keep.size else vals[-1:]
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float) -> "StepFunction":
        return cls(np.empty(0), np.asarray([value]))

    @property
    def far_left(self) -> float:
        return float(self.values[0])

    @property
    def far_right(self) -> float:
        return float(self.values[-1])

    def jumps(self):
        """Yield (position, left value, right value) for each stored jump."""
        for i, x in enumerate(self.breakpoints):
            yield float(x), float(self.values[i]), float(self.values[i + 1])

    def value_at(self, x: float) -> tuple[float, float]:
        """One-sided limits (left, right) at x."""
        i = int(np.searchsorted(self.breakpoints, x, side="left"))
        j = int(np.searchsorted(self.breakpoints, x, side="right"))
        return float(self.values[i]), float(self.values[j])

    def sample(self, xs: np.ndarray) -> np.ndarray:
        """Right-continuous evaluation on an array."""
        idx = np.searchsorted(self.breakpoints, xs, side="right")
        return self.values[idx]

    def total_variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values)))) if self.values.size > 1 else 0.0

    def min_value(self) -> float:
        return float(np.min(self.values))

    def max_value(self) -> float:
        return float(np.max(self.values))

    def integral(self, lo: float, hi: float) -> float:
        """Exact integral over [lo, hi]."""
        if hi < lo:
            raise ValueError("need lo <= hi")
        edges = np.concatenate(([lo], np.clip(self.breakpoints, lo, hi), [hi]))
        mids = 0.5 * (edges[:-1] + edges[1:])
        return float(np.sum(np.diff(edges) * self.sample(mids)))

    def translate(self, dx: float) -> "StepFunction":
        return StepFunction(self.breakpoints + dx, self.values.copy())

    def to_spec(self) -> dict:
        return {
            "breakpoints": [float(x) for x in self.breakpoints],
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "StepFunction":
        return cls(
            np.asarray(spec["breakpoints"], dtype=float),
            np.asarray(spec["values"], dtype=float),
        )


def quantize_step(v: StepFunction, level: int) -> StepFunction:
    """Snap values down to the grid j/2**level (floor rule)."""
    if level < 0:
        raise ValueError("level must be >= 0")
    scale = 2.0 ** level
    return StepFunction(v.breakpoints.copy(), np.floor(v.values * scale) / scale)


def l1_distance(a: StepFunction, b: StepFunction, window: Optional[tuple] = None) -> float:
    """Exact L1 distance, over ``window`` or the whole line.

    Without a window both functions must share far-field values, otherwise
    the whole-line distance is infinite and a ValueError is raised.
    """
    if window is None:
        if a.far_left != b.far_left or a.far_right != b.far_right:
            raise ValueError("far fields differ; L1 distance on the line is infinite")
        pts = np.concatenate((a.breakpoints, b.breakpoints))
        if pts.size == 0:
            return 0.0
        window = (float(np.min(pts)) - 1.0, float(np.max(pts)) + 1.0)
    lo, hi = window
    if hi <= lo:
        raise ValueError("window must have positive length")
    edges = np.unique(
        np.concatenate(([lo], np.clip(a.breakpoints, lo, hi), np.clip(b.breakpoints, lo, hi), [hi]))
    )
    mids = 0.5 * (edges[:-1] + edges[1:])
    return float(np.sum(np.diff(edges) * np.abs(a.sample(mids) - b.sample(mids))))


@dataclass
class Front:
    """One straight-line discontinuity in the (x, t) half-plane."""

    index: int
    birth_time: float
    birth_position: float
    speed: float
    left_value: float
    right_value: float
    death_time: float = inf

    def position_at(self, t: float) -> float:
        return self.birth_position + self.speed * (t - self.birth_time)

    @property
    def strength(self) -> float:
        return abs(self.left_value - self.right_value)


@dataclass(frozen=True)
class FrontEvent:
    """Fan emission (no incoming) or collision, in causal order."""

    time: float
    position: float
    incoming: tuple[int, ...]
    outgoing: tuple[int, ...]


def _riemann_parts(flux: PiecewiseLinearFlux, v_l: float, v_r: float):
    """Waves of the Riemann solution, left to right: (speed, left, right).

    Increasing data ride the convex envelope, decreasing data the concave
    one; either way the returned speeds are strictly increasing.
    """
    if v_l < v_r:
        env = convex_envelope(flux, v_l, v_r)
        states = env.breakpoints
        slopes = env.slopes
        return [
            (float(slopes[k]), float(states[k]), float(states[k + 1]))
            for k in range(slopes.size)
        ]
    env = concave_envelope(flux, v_r, v_l)
    states = env.breakpoints
    slopes = env.slopes
    return [
        (float(slopes[k]), float(states[k + 1]), float(states[k]))
        for k in range(slopes.size - 1, -1, -1)
    ]


def solve_riemann(
    flux: PiecewiseLinearFlux,
    v_left: float,
    v_right: float,
    position: float = 0.0,
    time: float = 0.0,
) -> list[Front]:
    """Fronts emitted by a single jump, ordered left to right."""
    if not isinstance(flux, PiecewiseLinearFlux):
        raise TypeError("front tracking needs a piecewise-linear flux; linearize first")
    if v_left == v_right:
        raise ValueError("degenerate Riemann datum: left and right states are equal")
    parts = _riemann_parts(flux, v_left, v_right)
    return [
        Front(k, time, position, s, a, b) for k, (s, a, b) in enumerate(parts)
    ]


@dataclass
class ShockSegment:
    """Space-time segment swept by one front, for shock catalogs."""

    front_index: int
    t0: float
    x0: float
    t1: float
    x1: float
    strength: float
    speed: float

    def distance_to(self, x: float, t: float) -> float:
        """Euclidean distance from (x, t) to the segment in the plane."""
        dx, dt = self.x1 - self.x0, self.t1 - self.t0
        denom = dx * dx + dt * dt
        if denom == 0.0:
            return sqrt((x - self.x0) ** 2 + (t - self.t0) ** 2)
        s = ((x - self.x0) * dx + (t - self.t0) * dt) / denom
        s = min(max(s, 0.0), 1.0)
        return sqrt((x - (self.x0 + s * dx)) ** 2 + (t - (self.t0 + s * dt)) ** 2)


@dataclass
class ShockCatalog:
    """Fronts stronger than a threshold, with neighborhood queries."""

    threshold: float
    segments: list[ShockSegment]

    def __len__(self) -> int:
        return len(self.segments)

    def min_distance(self, x: float, t: float) -> float:
        if not self.segments:
            return inf
        return min(seg.distance_to(x, t) for seg in self.segments)

    def covers(self, x: float, t: float, delta: float) -> bool:
        """True when (x, t) lies within delta of some cataloged shock."""
        return self.min_distance(x, t) <= delta


class FrontTrackingSolution:
    """Event-complete front-tracking solution on [0, horizon]."""

    def __init__(self, initial, flux, horizon, fronts, events):
        self.initial: StepFunction = initial
        self.flux: PiecewiseLinearFlux = flux
        self.horizon: float = horizon
        self.fronts: list[Front] = fronts
        self.events: list[FrontEvent] = events
        n = len(fronts)
        self._birth_t = np.fromiter((f.birth_time for f in fronts), dtype=float, count=n)
        self._birth_x = np.fromiter((f.birth_position for f in fronts), dtype=float, count=n)
        self._speed = np.fromiter((f.speed for f in fronts), dtype=float, count=n)
        self._death_t = np.fromiter((f.death_time for f in fronts), dtype=float, count=n)
        self._lv = np.fromiter((f.left_value for f in fronts), dtype=float, count=n)
        self._rv = np.fromiter((f.right_value for f in fronts), dtype=float, count=n)

    @property
    def front_count(self) -> int:
        return len(self.fronts)

    @property
    def collision_count(self) -> int:
        return sum(1 for e in self.events if e.incoming)

    def _check_time(self, t: float) -> None:
        if not 0.0 <= t <= self.horizon + 1e-12:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")

    def _alive(self, t: float) -> np.ndarray:
        return np.flatnonzero((self._birth_t <= t) & (t < self._death_t))

    def slice(self, t: float) -> StepFunction:
        """Field at time t as a StepFunction (outgoing states at event times)."""
        self._check_time(t)
        t = min(t, self.horizon)
        idx = self._alive(t)
        if idx.size == 0:
            return StepFunction.constant(self.initial.far_left)
        pos = self._birth_x[idx] + self._speed[idx] * (t - self._birth_t[idx])
        order = np.argsort(pos, kind="stable")
        idx = idx[order]
        pos = pos[order]
        bps: list[float] = []
        vals: list[float] = [float(self._lv[idx[0]])]
        for k, p in zip(idx, pos):
            if bps and p - bps[-1] <= EVENT_SPACE_TOL:
                vals[-1] = float(self._rv[k])
            else:
                bps.append(float(p))
                vals.append(float(self._rv[k]))
        return StepFunction(np.asarray(bps), np.asarray(vals))

    def evaluate_field(self, x: float, t: float) -> tuple[float, float]:
        """One-sided limits (left, right) of the field at (x, t)."""
        return self.slice(t).value_at(x)

    def shock_catalog(self, threshold: float = 0.0) -> ShockCatalog:
        """Space-time segments of all fronts with strength > threshold."""
        segs = []
        for f in self.fronts:
            if f.strength > threshold:
                t1 = min(f.death_time, self.horizon)
                segs.append(
                    ShockSegment(
                        f.index, f.birth_time, f.birth_position,
                        t1, f.position_at(t1), f.strength, f.speed,
                    )
                )
        return ShockCatalog(threshold, segs)

    def mass(self, t: float, window: tuple[float, float]) -> float:
        """Integral of the field at time t over a window."""
        return self.slice(t).integral(*window)


def evolve(
    initial: StepFunction,
    flux: PiecewiseLinearFlux,
    horizon: float,
    event_cap: int = 5_000_000,
) -> FrontTrackingSolution:
    """Run front tracking from ``initial`` up to ``horizon``.

    The event loop pops collision candidates from a heap keyed by
    (time, position), so simultaneous collisions at distinct positions are
    handled left to right.  Candidates within EVENT_TIME/SPACE_TOL of each
    other are merged into a single multi-front collision.  Outgoing waves
    with strength below ZERO_STRENGTH_TOL are dropped.
    """
    if not isinstance(flux, PiecewiseLinearFlux):
        raise TypeError("front tracking needs a piecewise-linear flux; linearize first")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    lo, hi = flux.domain
    if initial.min_value() < lo - 1e-12 or initial.max_value() > hi + 1e-12:
        raise ValueError("initial data leaves the flux domain")

    birth_t: list[float] = []
    birth_x: list[float] = []
    spd: list[float] = []
    lv: list[float] = []
    rv: list[float] = []
    death: list[float] = []
    nxt: list[int] = []
    prv: list[int] = []
    events: list[FrontEvent] = []
    heap: list = []
    counter = itertools.count()

    def new_front(t, x, s, a, b) -> int:
        k = len(birth_t)
        birth_t.append(t)
        birth_x.append(x)
        spd.append(s)
        lv.append(a)
        rv.append(b)
        death.append(inf)
        nxt.append(-1)
        prv.append(-1)
        return k

    def pos_at(k: int, t: float) -> float:
        return birth_x[k] + spd[k] * (t - birth_t[k])

    def push_pair(i: int, j: int, now: float) -> None:
        si, sj = spd[i], spd[j]
        if si <= sj:
            return
        ci = birth_x[i] - si * birth_t[i]
        cj = birth_x[j] - sj * birth_t[j]
        tc = (cj - ci) / (si - sj)
        if tc < now:
            tc = now
        if tc > horizon:
            return
        heappush(heap, (tc, ci + si * tc, next(counter), i, j))

    # emit the t = 0 fans, jump by jump, left to right
    tail = -1
    for x0, a, b in initial.jumps():
        ids = []
        for s, vl0, vr0 in _riemann_parts(flux, a, b):
            k = new_front(0.0, x0, s, vl0, vr0)
            if ids:
                nxt[ids[-1]] = k
                prv[k] = ids[-1]
            ids.append(k)
        if tail != -1:
            nxt[tail] = ids[0]
            prv[ids[0]] = tail
            push_pair(tail, ids[0], 0.0)
        tail = ids[-1]
        events.append(FrontEvent(0.0, x0, (), tuple(ids)))

    while heap:
        t, x, _, i, j = heappop(heap)
        if t > horizon:
            break
        if death[i] != inf or death[j] != inf or nxt[i] != j:
            continue  # stale candidate
        group = [i, j]
        while prv[group[0]] != -1 and abs(pos_at(prv[group[0]], t) - x) <= EVENT_SPACE_TOL:
            group.insert(0, prv[group[0]])
        while nxt[group[-1]] != -1 and abs(pos_at(nxt[group[-1]], t) - x) <= EVENT_SPACE_TOL:
            group.append(nxt[group[-1]])
        left_outer = prv[group[0]]
        right_outer = nxt[group[-1]]
        v_l = lv[group[0]]
        v_r = rv[group[-1]]
        for k in group:
            death[k] = t
            nxt[k] = -1
            prv[k] = -1
        ids: list[int] = []
        if abs(v_l - v_r) > ZERO_STRENGTH_TOL:
            for s, a, b in _riemann_parts(flux, v_l, v_r):
                if abs(a - b) <= ZERO_STRENGTH_TOL:
                    continue
                k = new_front(t, x, s, a, b)
                if ids:
                    nxt[ids[-1]] = k
                    prv[k] = ids[-1]
                ids.append(k)
        out_ids = tuple(ids)
        if ids:
            nxt[ids[-1]] = right_outer
            prv[ids[0]] = left_outer
            if left_outer != -1:
                nxt[left_outer] = ids[0]
                push_pair(left_outer, ids[0], t)
            if right_outer != -1:
                prv[right_outer] = ids[-1]
                push_pair(ids[-1], right_outer, t)
        else:
            if left_outer != -1:
                nxt[left_outer] = right_outer
            if right_outer != -1:
                prv[right_outer] = left_outer
            if left_outer != -1 and right_outer != -1:
                push_pair(left_outer, right_outer, t)
        events.append(FrontEvent(t, x, tuple(group), out_ids))
        if len(events) > event_cap:
            raise EventCapError(
                f"more than {event_cap} events before t={t:.6g}; "
                "raise event_cap or coarsen the flux level"
            )

    fronts = [
        Front(k, birth_t[k], birth_x[k], spd[k], lv[k], rv[k], death[k])
        for k in range(len(birth_t))
    ]
    return FrontTrackingSolution(initial, flux, horizon, fronts, events)
