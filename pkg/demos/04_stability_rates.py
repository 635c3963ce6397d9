"""Measured Holder-1/2 stability rates for car trajectories.

Perturb the experiment by eps and the endpoint of the tracked car moves by
at most C * sqrt(eps).  The perturbation families cover the initial density
(shift, dither, extra steps) and the velocity model (scale, tilt, curve).
Sharpening the flux linearization or the viscosity gives convergence
ladders, and the Burgers change of variables maps traffic solutions onto
Burgers solutions exactly.
"""

import numpy as np

from shockline import (
    LinearTrafficVelocity,
    StepFunction,
    burgers_transform_check,
    flux_stability,
    initial_field_stability,
    trajectory_convergence_study,
    viscous_convergence_study,
)

W = LinearTrafficVelocity(w_max=1.0, rho_max=1.0)
BASE = StepFunction([-0.6, -0.2, 0.1, 0.45, 0.8],
                    [0.5, 0.75, 0.375, 0.625, 0.25, 0.5625])
EPS = [2.0 ** -k for k in range(3, 10)]


def perturbation_ladders():
    print("endpoint error vs perturbation size (bound C*sqrt(eps)):")
    for family in ("shift", "dither", "steps"):
        rep = initial_field_stability(BASE, W, -1.0, 0.1, 2.0, EPS, family, level=10)
        print(f"  initial/{family:<7} slope {rep.slope:5.2f}  "
              f"bounds hold: {rep.all_bounds_hold}")
    for family in ("scale", "tilt", "curve"):
        rep = flux_stability(BASE, W, -1.0, 0.1, 2.0, EPS, family, level=10)
        print(f"  velocity/{family:<6} slope {rep.slope:5.2f}  "
              f"bounds hold: {rep.all_bounds_hold}")
    print("  slope ~ 0.5 on log-log axes is the square-root signature.")


def refinement_ladders():
    rep = trajectory_convergence_study(BASE, W, -1.0, 0.1, 2.0, [4, 6, 8], 10)
    print("\nsharper flux linearization:")
    for level, err in zip(rep.labels, rep.errors):
        print(f"  level {level:2.0f}   endpoint error {err:.2e}")
    rep = viscous_convergence_study(
        StepFunction([0.0], [0.25, 0.625]), W, -0.5, 0.1, 1.0,
        [0.1, 0.05, 0.025], ref_level=10, n_cells=1200, store_every=4,
    )
    print("smaller viscosity:")
    for eps, err in zip(rep.labels, rep.errors):
        print(f"  eps {eps:6.3f}   endpoint error {err:.2e}")


def burgers_bridge():
    check = burgers_transform_check(BASE, 8, 1.0)
    print("\nBurgers change of variables:")
    print(f"  L1 gap after mapping      {check.l1_difference:.1e}")
    print(f"  worst breakpoint mismatch {check.max_breakpoint_gap:.1e}")


if __name__ == "__main__":
    perturbation_ladders()
    refinement_ladders()
    burgers_bridge()
