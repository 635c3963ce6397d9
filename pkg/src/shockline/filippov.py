"""Particle paths through front-tracking fields (Filippov solutions).

Away from fronts the particle follows dz/dt = w(v(z, t)).  When it meets a
front it either crosses (the downstream flow carries it away) or sticks
(the front speed lies between the one-sided flow speeds), in which case it
travels with the front until the front dies in a collision.

The tracker replays the solution's event log once, maintaining the two
fronts bracketing the particle, so its cost is linear in the number of
events plus crossings.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from math import inf, log
from typing import Callable, Optional

import numpy as np

from .flux import LinearTrafficVelocity, TableVelocity, VelocityFunction
from .front_tracking import FrontTrackingSolution


def _scalar_velocity(w: VelocityFunction) -> Callable[[float], float]:
    """Fast scalar evaluation path for the hot tracking loop."""
    if isinstance(w, LinearTrafficVelocity):
        c0, c1 = w.w_max, w.w_max / w.rho_max
        return lambda v: c0 - c1 * v
    if isinstance(w, TableVelocity):
        bp = w.breakpoints.tolist()
        vals = w.values.tolist()
        n = len(bp)

        def interp(v: float) -> float:
            i = bisect_right(bp, v)
            if i <= 0:
                return vals[0]
            if i >= n:
                return vals[-1]
            x0, x1 = bp[i - 1], bp[i]
            y0, y1 = vals[i - 1], vals[i]
            return y0 + (v - x0) * (y1 - y0) / (x1 - x0)

        return interp
    return lambda v: float(w(v))


@dataclass
class Trajectory:
    """Piecewise-linear particle path.

    Nodes sit exactly at front crossings and at field-event times, so
    positions[k+1] == positions[k] + speeds[k] * (times[k+1] - times[k])
    holds by construction.
    """

    times: np.ndarray
    positions: np.ndarray
    speeds: np.ndarray
    sticking: list = field(default_factory=list)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        z = np.asarray(self.positions, dtype=float)
        s = np.asarray(self.speeds, dtype=float)
        if t.size != z.size or s.size != max(t.size - 1, 0):
            raise ValueError("need len(speeds) == len(times) - 1 == len(positions) - 1")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("node times must be strictly increasing")
        self.times, self.positions, self.speeds = t, z, s

    @property
    def start_time(self) -> float:
        return float(self.times[0])

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    def position_at(self, t):
        """Evaluate the path; accepts scalars or arrays inside [t0, T]."""
        ts = np.asarray(t, dtype=float)
        if np.any(ts < self.times[0] - 1e-12) or np.any(ts > self.times[-1] + 1e-12):
            raise ValueError("query time outside the tracked interval")
        if self.times.size == 1:
            out = np.full(ts.shape, self.positions[0])
        else:
            k = np.clip(np.searchsorted(self.times, ts, side="right") - 1, 0, self.times.size - 2)
            out = self.positions[k] + self.speeds[k] * (ts - self.times[k])
        if np.isscalar(t) or (isinstance(t, np.ndarray) and t.ndim == 0):
            return float(out)
        return out

    def observe(self, times) -> np.ndarray:
        return np.atleast_1d(self.position_at(np.asarray(times, dtype=float)))

    def sup_distance(self, other: "Trajectory") -> float:
        """Exact sup-norm distance on the overlap of the two time ranges.

        Both paths are piecewise linear, so the sup is attained at a node
        of one of them.
        """
        lo = max(self.start_time, other.start_time)
        hi = min(self.end_time, other.end_time)
        if hi < lo:
            raise ValueError("trajectories do not overlap in time")
        ts = np.concatenate((self.times, other.times, [lo, hi]))
        ts = np.unique(np.clip(ts, lo, hi))
        return float(np.max(np.abs(self.position_at(ts) - other.position_at(ts))))


def track(
    solution: FrontTrackingSolution,
    velocity: VelocityFunction,
    x0: float,
    t0: float,
    horizon: Optional[float] = None,
) -> Trajectory:
    """Track the particle from (x0, t0) to ``horizon``.

    Requires 0 < t0 <= horizon <= solution.horizon; starting at t0 = 0 on
    a discontinuity has no unique path, so t0 must be positive.
    """
    T = solution.horizon if horizon is None else float(horizon)
    if t0 <= 0.0:
        raise ValueError("t0 must be positive: paths started at t0 = 0 need not be unique")
    if not t0 <= T <= solution.horizon + 1e-12:
        raise ValueError(f"need t0 <= horizon <= {solution.horizon}, got t0={t0}, horizon={T}")
    T = min(T, solution.horizon)

    w = _scalar_velocity(velocity)
    fronts = solution.fronts
    n = len(fronts)
    bt = solution._birth_t.tolist()
    bx = solution._birth_x.tolist()
    spd = solution._speed.tolist()
    lv = solution._lv.tolist()
    rv = solution._rv.tolist()

    nxt = [-1] * n
    prv = [-1] * n
    head = -1
    tail = -1

    def apply_event(e) -> None:
        nonlocal head, tail
        out = e.outgoing
        for a, b in zip(out[:-1], out[1:]):
            nxt[a] = b
            prv[b] = a
        if not e.incoming:
            # t = 0 fan emission; emissions arrive left to right
            if tail == -1:
                head = out[0]
            else:
                nxt[tail] = out[0]
                prv[out[0]] = tail
            tail = out[-1]
            return
        lo = prv[e.incoming[0]]
        hi = nxt[e.incoming[-1]]
        if out:
            prv[out[0]] = lo
            nxt[out[-1]] = hi
            if lo != -1:
                nxt[lo] = out[0]
            else:
                head = out[0]
            if hi != -1:
                prv[hi] = out[-1]
        else:
            if lo != -1:
                nxt[lo] = hi
            else:
                head = hi
            if hi != -1:
                prv[hi] = lo

    events = solution.events
    ei = 0
    while ei < len(events) and events[ei].time <= t0:
        apply_event(events[ei])
        ei += 1

    def pos(k: int, t: float) -> float:
        return bx[k] + spd[k] * (t - bt[k])

    # locate the particle among the alive fronts at t0
    left_id, right_id = -1, head
    while right_id != -1 and pos(right_id, t0) < x0:
        left_id = right_id
        right_id = nxt[right_id]

    far_left = solution.initial.far_left

    def cell_value() -> float:
        if left_id != -1:
            return rv[left_id]
        if right_id != -1:
            return lv[right_id]
        return far_left

    nodes_t = [t0]
    nodes_z = [x0]
    seg_speed: list[float] = []
    sticking: list[tuple[float, float, int]] = []
    stuck = False
    stick_front = -1
    stick_start = 0.0

    def append_node(t_new: float, s_used: float) -> None:
        if t_new > nodes_t[-1]:
            nodes_z.append(nodes_z[-1] + s_used * (t_new - nodes_t[-1]))
            nodes_t.append(t_new)
            seg_speed.append(s_used)

    def start_stick(f: int, t: float) -> None:
        nonlocal stuck, stick_front, stick_start
        stuck = True
        stick_front = f
        stick_start = t

    def end_stick(t: float) -> None:
        nonlocal stuck, stick_front
        if stuck:
            if t > stick_start:
                sticking.append((stick_start, t, stick_front))
            stuck = False
            stick_front = -1

    # starting exactly on a front: same crossing/sticking rule as a contact
    if right_id != -1 and pos(right_id, t0) == x0:
        f = right_id
        if w(rv[f]) > spd[f]:
            left_id, right_id = f, nxt[f]
        elif w(lv[f]) < spd[f]:
            pass  # stays on the left side
        else:
            start_stick(f, t0)

    def advance_to(t_end: float) -> None:
        nonlocal left_id, right_id
        while nodes_t[-1] < t_end:
            if stuck:
                append_node(t_end, spd[stick_front])
                return
            t_cur = nodes_t[-1]
            z = nodes_z[-1]
            s_p = w(cell_value())
            tau, hit, from_left = t_end, -1, False
            if right_id != -1 and s_p > spd[right_id]:
                cand = t_cur + (pos(right_id, t_cur) - z) / (s_p - spd[right_id])
                if cand <= tau:
                    tau, hit, from_left = cand, right_id, True
            if left_id != -1 and spd[left_id] > s_p:
                cand = t_cur + (z - pos(left_id, t_cur)) / (spd[left_id] - s_p)
                if cand < tau:
                    tau, hit, from_left = cand, left_id, False
            if hit == -1 or tau >= t_end:
                append_node(t_end, s_p)
                return
            append_node(tau, s_p)
            sf = spd[hit]
            if from_left:
                if w(rv[hit]) >= sf:
                    left_id, right_id = hit, nxt[hit]
                else:
                    start_stick(hit, tau)
            else:
                if w(lv[hit]) <= sf:
                    left_id, right_id = prv[hit], hit
                else:
                    start_stick(hit, tau)

    def rescan_at_event(e) -> None:
        """Re-anchor the particle sitting at an event point among the outgoing fan."""
        nonlocal left_id, right_id
        out = e.outgoing
        if not out:
            # annihilation: the two outer cells merged
            left_id = _locate_left(e.position, e.time)
            right_id = nxt[left_id] if left_id != -1 else head
            return
        m = len(out)
        for k in range(m):
            c_left = lv[out[k]]
            if w(c_left) <= spd[out[k]]:
                left_id = prv[out[k]]
                right_id = out[k]
                return
            if w(rv[out[k]]) < spd[out[k]]:
                start_stick(out[k], e.time)
                return
        left_id = out[m - 1]
        right_id = nxt[out[m - 1]]

    def _locate_left(x: float, t: float) -> int:
        """Rightmost alive front strictly left of x at time t."""
        k = head
        best = -1
        while k != -1 and pos(k, t) < x - 1e-12:
            best = k
            k = nxt[k]
        return best

    while True:
        t_next = events[ei].time if ei < len(events) else inf
        t_stop = min(t_next, T)
        advance_to(t_stop)
        if t_next > T or ei >= len(events):
            break
        while ei < len(events) and events[ei].time == t_next:
            e = events[ei]
            apply_event(e)
            ei += 1
            if stuck:
                if stick_front in e.incoming:
                    end_stick(t_next)
                    rescan_at_event(e)
                continue
            in_set = e.incoming
            left_in = left_id in in_set
            right_in = right_id in in_set
            if left_in and right_in:
                rescan_at_event(e)
            elif left_in:
                left_id = prv[right_id] if right_id != -1 else _locate_left(nodes_z[-1], t_next)
            elif right_in:
                right_id = nxt[left_id] if left_id != -1 else head
        if t_next >= T:
            break

    advance_to(T)
    end_stick(T)
    return Trajectory(
        np.asarray(nodes_t), np.asarray(nodes_z), np.asarray(seg_speed), sticking
    )


def check_speed_inclusion(
    traj: Trajectory,
    solution: FrontTrackingSolution,
    velocity: VelocityFunction,
    max_samples: int = 1000,
    seed: int = 0,
) -> float:
    """Largest violation of the one-sided speed inclusion at segment midpoints.

    For each sampled segment the speed must lie within [min, max] of the
    velocities of the one-sided field limits at the midpoint; the return
    value is max(0, violation) over samples and is 0 for an admissible path.
    """
    nseg = traj.speeds.size
    if nseg == 0:
        return 0.0
    idx = np.arange(nseg)
    if nseg > max_samples:
        idx = np.random.default_rng(seed).choice(nseg, size=max_samples, replace=False)
        idx.sort()
    worst = 0.0
    for k in idx:
        tm = 0.5 * (traj.times[k] + traj.times[k + 1])
        zm = traj.positions[k] + traj.speeds[k] * (tm - traj.times[k])
        vl, vr = solution.evaluate_field(zm, tm)
        wl, wr = float(velocity(vl)), float(velocity(vr))
        lo, hi = min(wl, wr), max(wl, wr)
        worst = max(worst, lo - traj.speeds[k], traj.speeds[k] - hi)
    return max(worst, 0.0)


def riemann_comparison(
    flux,
    flux_bar,
    velocity: VelocityFunction,
    velocity_bar: VelocityFunction,
    rho_left: float,
    rho_right: float,
    rho_left_bar: float,
    rho_right_bar: float,
    jump_position: float,
    jump_position_bar: float,
    start: float,
    start_bar: float,
    t0: float,
    t: float,
) -> float:
    """Closed-form displacement difference for two single-shock problems.

    ``jump_position`` is where each shock sits at time ``t0``, when both
    particles are released.  Each particle starts left of its shock,
    crosses it, and afterwards moves with the downstream speed; valid once
    t - t0 exceeds both hitting times.  Returns z_bar(t) - z(t).
    """
    if t0 <= 0 or t <= t0:
        raise ValueError("need 0 < t0 < t")
    for name, (rl, rr) in {
        "base": (rho_left, rho_right),
        "perturbed": (rho_left_bar, rho_right_bar),
    }.items():
        if rr <= 0:
            raise ValueError(f"{name} downstream density must be positive")
        if rl > rr:
            raise ValueError(f"{name} states do not form an admissible up-jump shock")

    def hitting_time(f, w, rl, rr, a, z0):
        if rl == rr:
            return 0.0
        lam = (f(rl) - f(rr)) / (rl - rr)
        gap = a - z0
        if gap < 0:
            raise ValueError("particle must start on the left of the jump")
        rel = float(w(rl)) - lam
        if rel <= 0:
            raise ValueError("particle never reaches the shock (no speed excess)")
        return gap / rel

    tau = hitting_time(flux, velocity, rho_left, rho_right, jump_position, start)
    tau_bar = hitting_time(
        flux_bar, velocity_bar, rho_left_bar, rho_right_bar, jump_position_bar, start_bar
    )
    if t - t0 < max(tau, tau_bar) - 1e-14:
        raise ValueError(
            f"t - t0 = {t - t0} is below the larger hitting time {max(tau, tau_bar)}"
        )
    drift = (float(velocity_bar(rho_right_bar)) - float(velocity(rho_right))) * (t - t0)
    geom_bar = (1.0 - rho_left_bar / rho_right_bar) * (jump_position_bar - start_bar)
    geom = (1.0 - rho_left / rho_right) * (jump_position - start)
    return drift + geom_bar - geom + (start_bar - start)


@dataclass
class SpreadReport:
    """Spread between two paths started at the same time, and its growth fit."""

    times: np.ndarray
    spread: np.ndarray
    initial_spread: float
    fitted_exponent: float
    envelope_ok: bool
    first: Trajectory
    second: Trajectory


def initial_position_spread(
    solution: FrontTrackingSolution,
    velocity: VelocityFunction,
    x0: float,
    y0: float,
    t0: float,
    horizon: Optional[float] = None,
    check_points: int = 1000,
) -> SpreadReport:
    """Track from two starting points and fit |x-y|^2 <= |x0-y0|^2 (t/t0)^C.

    The fitted exponent is the smallest C >= 0 for which the envelope holds
    at the evaluation times (trajectory nodes plus a uniform grid).
    """
    a = track(solution, velocity, x0, t0, horizon)
    b = track(solution, velocity, y0, t0, horizon)
    T = a.end_time
    ts = np.unique(np.concatenate((a.times, b.times, np.linspace(t0, T, check_points))))
    spread = np.abs(a.position_at(ts) - b.position_at(ts))
    d0 = abs(x0 - y0)
    if d0 == 0.0:
        c_fit = 0.0
        ok = bool(np.all(spread == 0.0))
    else:
        c_fit = 0.0
        for t, d in zip(ts, spread):
            if t <= t0 * (1.0 + 1e-12) or d <= d0:
                continue
            c_fit = max(c_fit, 2.0 * log(d / d0) / log(t / t0))
        ok = bool(np.all(spread ** 2 <= d0 * d0 * (ts / t0) ** c_fit + 1e-12))
    return SpreadReport(ts, spread, d0, c_fit, ok, a, b)
