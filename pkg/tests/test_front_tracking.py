"""Event-driven front tracking: Riemann fans, collisions, field slices.

Oracles: Rankine-Hugoniot speeds evaluated directly from the flux, a
hand-solved two-shock merge, and conservation/TVD/contraction properties
on seeded random step data.
"""

import numpy as np
import pytest

from shockline.flux import (
    BurgersQuadraticFlux,
    PiecewiseLinearFlux,
    TrafficQuadraticFlux,
    piecewise_linearize,
)
from shockline.front_tracking import (
    EventCapError,
    StepFunction,
    evolve,
    l1_distance,
    quantize_step,
    solve_riemann,
)

TRAFFIC3 = piecewise_linearize(TrafficQuadraticFlux(1.0, 1.0), 3)


def rh_speed(flux, vl, vr):
    return (flux(vl) - flux(vr)) / (vl - vr)


def random_step(rng, max_jumps=10, level=8, lo=0.0, hi=1.0):
    """Step data with dyadic values; far fields drawn like the rest."""
    k = int(rng.integers(1, max_jumps + 1))
    bps = np.sort(rng.uniform(-2.0, 2.0, k))
    bps = bps[np.concatenate(([True], np.diff(bps) > 1e-3))]
    grid = np.arange(int(lo * 2 ** level), int(hi * 2 ** level) + 1) / 2 ** level
    vals = rng.choice(grid, bps.size + 1)
    for i in range(1, vals.size):
        if vals[i] == vals[i - 1]:
            vals[i] = grid[(np.searchsorted(grid, vals[i]) + 1) % grid.size]
    return StepFunction(bps, vals)


# ---------------------------------------------------------------------------
# StepFunction behavior


def test_step_function_drops_equal_adjacent_values():
    s = StepFunction([0.0, 1.0, 2.0], [0.2, 0.5, 0.5, 0.7])
    assert np.array_equal(s.breakpoints, [0.0, 2.0])
    assert np.array_equal(s.values, [0.2, 0.5, 0.7])


def test_step_function_one_sided_limits():
    s = StepFunction([0.0], [0.2, 0.8])
    assert s.value_at(-1.0) == (0.2, 0.2)
    assert s.value_at(0.0) == (0.2, 0.8)
    assert s.value_at(1.0) == (0.8, 0.8)


def test_step_function_integral_and_tv():
    s = StepFunction([0.0, 1.0], [0.0, 1.0, 0.5])
    assert s.integral(-1.0, 2.0) == pytest.approx(1.5, abs=1e-15)
    assert s.integral(0.25, 0.75) == pytest.approx(0.5, abs=1e-15)
    assert s.total_variation() == pytest.approx(1.5, abs=1e-15)


def test_quantization_floors_to_grid():
    s = StepFunction([0.0], [0.2, 0.8])
    q = quantize_step(s, 3)
    assert np.array_equal(q.values, [0.125, 0.75])
    # 1 and exact grid values are fixed points
    t = StepFunction([0.0], [1.0, 0.375])
    assert np.array_equal(quantize_step(t, 3).values, [1.0, 0.375])


def test_quantization_error_below_grid_width():
    rng = np.random.default_rng(5)
    for level in (2, 5, 9):
        vals = rng.uniform(0, 1, 6)
        s = StepFunction(np.arange(5.0), vals)
        q = quantize_step(s, level)
        mids = np.arange(6.0) - 0.5  # one sample point per cell
        assert np.all(q.sample(mids) <= vals + 1e-15)
        assert np.all(vals - q.sample(mids) < 2.0 ** -level)


def test_l1_distance_frozen_examples():
    w = (-0.5, 0.5)
    a = StepFunction.constant(0.2)
    b = StepFunction.constant(0.8)
    assert l1_distance(a, a, w) == 0.0
    assert l1_distance(a, b, w) == pytest.approx(0.6, abs=1e-15)
    # indicator difference of height 0.3 on an interval of length 0.25
    c = StepFunction([0.0, 0.25], [0.2, 0.5, 0.2])
    assert l1_distance(a, c, (-1.0, 1.0)) == pytest.approx(0.075, abs=1e-15)


def test_l1_distance_whole_line_needs_matching_far_fields():
    a = StepFunction([0.0], [0.2, 0.8])
    b = StepFunction([0.0], [0.2, 0.7])
    with pytest.raises(ValueError):
        l1_distance(a, b)
    c = StepFunction([0.5], [0.2, 0.8])
    assert l1_distance(a, c) == pytest.approx(0.3, abs=1e-15)


# ---------------------------------------------------------------------------
# Riemann solutions


def test_riemann_equal_states_rejected():
    with pytest.raises(ValueError):
        solve_riemann(TRAFFIC3, 0.3, 0.3)


def test_riemann_traffic_shock_is_stationary():
    # f(0.2) = f(0.8) = 0.16 on this flux, so the jump speed is exactly 0
    flux = PiecewiseLinearFlux(
        np.array([0.0, 0.2, 0.8, 1.0]), np.array([0.0, 0.16, 0.16, 0.0])
    )
    fronts = solve_riemann(flux, 0.2, 0.8)
    assert len(fronts) == 1
    assert fronts[0].speed == 0.0
    assert (fronts[0].left_value, fronts[0].right_value) == (0.2, 0.8)


def test_riemann_traffic_shock_speed_near_zero_any_level():
    for level in (1, 4, 8):
        flux = piecewise_linearize(TrafficQuadraticFlux(1.0, 1.0), level)
        fronts = solve_riemann(flux, 0.2, 0.8)
        assert len(fronts) == 1
        assert abs(fronts[0].speed) < 1e-12


def test_riemann_traffic_fan_level_one_frozen():
    flux = piecewise_linearize(TrafficQuadraticFlux(1.0, 1.0), 1)
    fronts = solve_riemann(flux, 1.0, 0.0)
    states = [(f.speed, f.left_value, f.right_value) for f in fronts]
    assert states == [(-0.5, 1.0, 0.5), (0.5, 0.5, 0.0)]


def test_riemann_burgers_fan_frozen():
    flux = piecewise_linearize(BurgersQuadraticFlux(), 2)  # spacing 0.25
    fronts = solve_riemann(flux, -0.5, 0.5)
    speeds = [f.speed for f in fronts]
    assert speeds == pytest.approx([-0.375, -0.125, 0.125, 0.375], abs=1e-15)
    assert fronts[0].left_value == -0.5
    assert fronts[-1].right_value == 0.5


def test_riemann_fronts_satisfy_rh_and_ordering():
    rng = np.random.default_rng(2)
    for _ in range(50):
        vl, vr = rng.choice(np.arange(9) / 8.0, 2, replace=False)
        fronts = solve_riemann(TRAFFIC3, vl, vr)
        assert fronts[0].left_value == vl
        assert fronts[-1].right_value == vr
        speeds = [f.speed for f in fronts]
        assert all(a < b for a, b in zip(speeds, speeds[1:]))
        for f in fronts:
            assert f.speed == pytest.approx(
                rh_speed(TRAFFIC3, f.left_value, f.right_value), abs=1e-12
            )


# ---------------------------------------------------------------------------
# evolution


def test_constant_data_gives_empty_solution():
    sol = evolve(StepFunction.constant(0.4375), TRAFFIC3, 2.0)
    assert len(sol.fronts) == 0
    assert sol.collision_count == 0
    assert sol.evaluate_field(0.3, 1.7) == (0.4375, 0.4375)
    assert np.array_equal(sol.slice(1.0).values, [0.4375])


def test_single_jump_is_pure_riemann_fan():
    s = StepFunction([0.25], [0.875, 0.125])
    sol = evolve(s, TRAFFIC3, 2.0)
    assert sol.collision_count == 0
    direct = solve_riemann(TRAFFIC3, 0.875, 0.125, position=0.25)
    assert len(sol.fronts) == len(direct)
    for got, want in zip(sol.fronts, direct):
        assert got.speed == want.speed
        assert got.left_value == want.left_value


def test_two_shock_merge_hand_solved():
    # speeds +0.375 and -0.375 from positions 0 and 0.5 meet at
    # t = 0.5 / 0.75 = 2/3, x = 0.25; merged front is stationary
    s = StepFunction([0.0, 0.5], [0.125, 0.5, 0.875])
    sol = evolve(s, TRAFFIC3, 2.0)
    assert sol.collision_count == 1
    ev = [e for e in sol.events if e.incoming][0]
    assert ev.time == pytest.approx(2.0 / 3.0, abs=1e-14)
    assert ev.position == pytest.approx(0.25, abs=1e-14)
    assert len(ev.incoming) == 2 and len(ev.outgoing) == 1
    merged = sol.fronts[ev.outgoing[0]]
    assert merged.speed == pytest.approx(0.0, abs=1e-15)
    final = sol.slice(2.0)
    assert np.array_equal(final.values, [0.125, 0.875])
    # pre-merge slice has more jumps than post-merge
    assert sol.slice(0.5).breakpoints.size > final.breakpoints.size


def test_evaluate_field_on_stationary_shock():
    flux = PiecewiseLinearFlux(
        np.array([0.0, 0.2, 0.8, 1.0]), np.array([0.0, 0.16, 0.16, 0.0])
    )
    sol = evolve(StepFunction([0.0], [0.2, 0.8]), flux, 2.0)
    assert sol.evaluate_field(0.0, 1.0) == (0.2, 0.8)
    assert sol.evaluate_field(-5.0, 1.0) == (0.2, 0.2)
    assert sol.evaluate_field(5.0, 1.0) == (0.8, 0.8)
    with pytest.raises(ValueError):
        sol.evaluate_field(0.0, 2.5)


def test_slice_at_zero_returns_initial():
    s = StepFunction([0.0, 0.7], [0.25, 0.625, 0.375])
    sol = evolve(s, TRAFFIC3, 1.0)
    s0 = sol.slice(0.0)
    assert np.array_equal(s0.breakpoints, s.breakpoints)
    assert np.array_equal(s0.values, s.values)


def test_fan_slice_has_one_value_per_envelope_breakpoint():
    s = StepFunction([0.0], [0.875, 0.125])
    sol = evolve(s, TRAFFIC3, 1.0)
    # concave envelope of f^3 between 0.125 and 0.875 keeps all 7 nodes,
    # so the fan carries 6 fronts and the slice 7 values
    assert np.array_equal(
        sol.slice(1.0).values,
        [0.875, 0.75, 0.625, 0.5, 0.375, 0.25, 0.125],
    )


def test_shock_catalog_thresholds():
    s = StepFunction([0.0], [0.2, 0.8])
    flux = PiecewiseLinearFlux(
        np.array([0.0, 0.2, 0.8, 1.0]), np.array([0.0, 0.16, 0.16, 0.0])
    )
    sol = evolve(s, flux, 2.0)
    assert len(sol.shock_catalog(0.0).segments) == 1
    assert len(sol.shock_catalog(0.5).segments) == 1  # strength 0.6 > 0.5
    # threshold at the total variation drops everything (strict comparison)
    assert len(sol.shock_catalog(s.total_variation()).segments) == 0
    seg = sol.shock_catalog(0.5).segments[0]
    assert seg.strength == pytest.approx(0.6, abs=1e-15)
    assert seg.distance_to(0.0, 1.0) == 0.0
    assert seg.distance_to(0.3, 1.0) == pytest.approx(0.3, abs=1e-14)


def test_event_cap_raises():
    s = StepFunction([0.0, 0.5], [0.125, 0.5, 0.875])
    with pytest.raises(EventCapError):
        evolve(s, TRAFFIC3, 2.0, event_cap=2)


def test_evolution_is_deterministic():
    rng = np.random.default_rng(9)
    s = random_step(rng)
    a = evolve(s, TRAFFIC3, 2.0)
    b = evolve(s, TRAFFIC3, 2.0)
    assert len(a.fronts) == len(b.fronts)
    for fa, fb in zip(a.fronts, b.fronts):
        assert (fa.birth_time, fa.birth_position, fa.speed) == (
            fb.birth_time,
            fb.birth_position,
            fb.speed,
        )


# ---------------------------------------------------------------------------
# conservation laws as properties


FLUX8 = piecewise_linearize(TrafficQuadraticFlux(1.0, 1.0), 8)


def test_conservation_tvd_max_principle_random_data():
    rng = np.random.default_rng(42)
    horizon = 2.0
    for _ in range(30):
        s = random_step(rng, max_jumps=10, level=8)
        sol = evolve(s, FLUX8, horizon)
        window = (
            float(s.breakpoints[0]) - FLUX8.lipschitz_norm * horizon - 0.5,
            float(s.breakpoints[-1]) + FLUX8.lipschitz_norm * horizon + 0.5,
        )
        m0 = s.integral(*window)
        rate = FLUX8(s.far_left) - FLUX8(s.far_right)
        tv0 = s.total_variation()
        lo, hi = s.min_value(), s.max_value()
        tv_prev = tv0
        for t in (0.5, 1.0, 2.0):
            sl = sol.slice(t)
            assert abs(sl.integral(*window) - m0 - rate * t) <= 1e-10
            assert sl.total_variation() <= tv_prev + 1e-12
            tv_prev = sl.total_variation()
            assert sl.min_value() >= lo - 1e-12
            assert sl.max_value() <= hi + 1e-12


def test_l1_contraction_random_pairs():
    rng = np.random.default_rng(77)
    for _ in range(10):
        a = random_step(rng, max_jumps=6)
        b = random_step(rng, max_jumps=6)
        # share far fields so whole-line distances are finite
        vals = b.values.copy()
        vals[0] = a.far_left
        vals[-1] = a.far_right
        try:
            b = StepFunction(b.breakpoints, vals)
        except ValueError:
            continue
        d0 = l1_distance(a, b)
        sa = evolve(a, FLUX8, 2.0)
        sb = evolve(b, FLUX8, 2.0)
        for t in (0.5, 1.0, 2.0):
            assert l1_distance(sa.slice(t), sb.slice(t)) <= d0 + 1e-10


def test_outgoing_speeds_increase_at_every_event():
    rng = np.random.default_rng(13)
    for _ in range(10):
        s = random_step(rng, max_jumps=8)
        sol = evolve(s, FLUX8, 2.0)
        for e in sol.events:
            speeds = [sol.fronts[i].speed for i in e.outgoing]
            assert all(x < y for x, y in zip(speeds, speeds[1:]))
            for i in e.outgoing:
                f = sol.fronts[i]
                assert f.speed == pytest.approx(
                    rh_speed(FLUX8, f.left_value, f.right_value), abs=1e-12
                )


def test_semigroup_restart_matches_direct_slice():
    rng = np.random.default_rng(4)
    for _ in range(5):
        s = random_step(rng, max_jumps=6)
        sol = evolve(s, FLUX8, 2.0)
        mid = sol.slice(0.7)
        resumed = evolve(mid, FLUX8, 1.3)
        direct = sol.slice(2.0)
        again = resumed.slice(1.3)
        assert l1_distance(direct, again, (-6.0, 6.0)) <= 1e-10
