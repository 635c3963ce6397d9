"""Command-line front end.

Exit codes: 0 success, 2 config error, 3 solver error, 4 failed --check
assertion.  Identical config and seed produce byte-identical outputs;
SHOCKLINE_OUT overrides --out when set.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import numpy as np

from . import config as cfgio
from .bayes import (
    BallAverageForward,
    PointwiseForward,
    PriorSpec,
    TrajectoryForward,
    VelocityTrajectoryForward,
    ViscousTrajectoryForward,
    hellinger_between,
    run_pcn,
    synth_observations,
)
from .config import ConfigError, ScenarioConfig
from .experiments import flux_stability, initial_field_stability
from .filippov import check_speed_inclusion, track
from .flux import (
    LinearTrafficVelocity,
    PiecewiseLinearFlux,
    TrafficQuadraticFlux,
    piecewise_linearize,
    traffic_flux_from_velocity,
)
from .front_tracking import evolve, quantize_step
from .viscous import solve_viscous


class CheckFailure(RuntimeError):
    """An embedded --check assertion did not hold."""


def _tracking_flux(cfg: ScenarioConfig) -> PiecewiseLinearFlux:
    """The piecewise-linear flux the event loop runs on."""
    if cfg.velocity is not None:
        return traffic_flux_from_velocity(cfg.velocity, cfg.level)
    if isinstance(cfg.flux, PiecewiseLinearFlux):
        return cfg.flux
    return piecewise_linearize(cfg.flux, cfg.level)


def _smooth_flux(cfg: ScenarioConfig):
    """The flux the viscous solver runs on; smooth where one is known."""
    if cfg.flux is not None and not isinstance(cfg.flux, PiecewiseLinearFlux):
        return cfg.flux
    if isinstance(cfg.velocity, LinearTrafficVelocity):
        return TrafficQuadraticFlux(cfg.velocity.w_max, cfg.velocity.rho_max)
    return _tracking_flux(cfg)


def _solution(cfg: ScenarioConfig):
    rho0 = quantize_step(cfg.initial, cfg.level)
    return rho0, evolve(rho0, _tracking_flux(cfg), cfg.horizon)


def _conservation_window(cfg: ScenarioConfig) -> tuple[float, float]:
    flux = _tracking_flux(cfg)
    reach = flux.lipschitz_norm * cfg.horizon + 1.0
    bp = cfg.initial.breakpoints
    lo = (bp[0] if bp.size else 0.0) - reach
    hi = (bp[-1] if bp.size else 0.0) + reach
    return float(lo), float(hi)


def cmd_solve(cfg: ScenarioConfig, args, out: str) -> int:
    rho0, sol = _solution(cfg)
    times = list(cfg.times) if cfg.times else [cfg.horizon]
    names = []
    for i, t in enumerate(times):
        name = f"slice_{i:02d}.csv"
        cfgio.write_slice_csv(os.path.join(out, name), sol.slice(t))
        names.append(name)
    cfgio.write_events_json(os.path.join(out, "events.json"), sol)
    window = _conservation_window(cfg)
    summary = {
        "times": times,
        "slices": names,
        "events": "events.json",
        "collisions": sol.collision_count,
        "level": cfg.level,
        "mass_window": list(window),
        "mass_initial": rho0.integral(*window),
    }
    cfgio.write_json(os.path.join(out, "summary.json"), summary)
    if args.check:
        tv0 = rho0.total_variation()
        m0 = rho0.integral(*window)
        flux = _tracking_flux(cfg)
        # mass in a window all waves stay inside changes at exactly the
        # far-field flux imbalance
        rate = flux(rho0.far_left) - flux(rho0.far_right)
        lo, hi = rho0.min_value(), rho0.max_value()
        for t in times:
            s = sol.slice(t)
            if abs(s.integral(*window) - m0 - rate * t) > 1e-10:
                raise CheckFailure(f"mass drift at t={t} exceeds 1e-10")
            if s.total_variation() > tv0 + 1e-10:
                raise CheckFailure(f"total variation grew by t={t}")
            if s.min_value() < lo - 1e-12 or s.max_value() > hi + 1e-12:
                raise CheckFailure(f"new extremum at t={t}")
    return 0


def cmd_track(cfg: ScenarioConfig, args, out: str) -> int:
    if cfg.particle is None:
        raise ConfigError("track needs a particle block with x0 and t0")
    if cfg.velocity is None:
        raise ConfigError("track needs a velocity spec")
    x0, t0 = cfg.particle
    _, sol = _solution(cfg)
    traj = track(sol, cfg.velocity, x0, t0, cfg.horizon)
    cfgio.write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj)
    cfgio.write_json(
        os.path.join(out, "summary.json"),
        {
            "nodes": len(traj.times),
            "start": [x0, t0],
            "final_position": traj.positions[-1],
            "sticking_spans": [[a, b] for a, b, _ in traj.sticking],
        },
    )
    if args.check:
        worst = check_speed_inclusion(traj, sol, cfg.velocity)
        if worst > 1e-10:
            raise CheckFailure(f"speed-inclusion violation {worst:.3e} > 1e-10")
    return 0


def cmd_stability(cfg: ScenarioConfig, args, out: str) -> int:
    blk = cfg.block("stability")
    if cfg.velocity is None:
        raise ConfigError("stability needs a velocity spec")
    if cfg.particle is None:
        raise ConfigError("stability needs a particle block")
    target = blk.get("target", "initial")
    family = blk.get("family", "shift")
    epsilons = [float(e) for e in blk.get("epsilons", ())]
    if not epsilons:
        raise ConfigError("stability block needs a nonempty epsilons ladder")
    x0, t0 = cfg.particle
    kwargs = dict(
        x0=x0, t0=t0, horizon=cfg.horizon,
        epsilons=epsilons, family=family, level=cfg.level,
        seed=cfg.seed if args.seed is None else args.seed,
    )
    if target == "initial":
        if "window" in blk:
            kwargs["window"] = tuple(blk["window"])
        report = initial_field_stability(cfg.initial, cfg.velocity, **kwargs)
    elif target == "velocity":
        kwargs.pop("seed")
        kwargs.pop("family")
        report = flux_stability(
            cfg.initial, cfg.velocity, family=family, **kwargs
        )
    else:
        raise ConfigError(f"unknown stability target {target!r}")
    cfgio.write_rate_report(
        os.path.join(out, "rate_report.json"),
        os.path.join(out, "rate_report.csv"),
        report,
    )
    if args.check and not report.all_bounds_hold:
        raise CheckFailure("a measured error exceeds its stability bound")
    return 0


def _forward_from_block(blk: dict, cfg: ScenarioConfig):
    kind = blk.get("kind", "trajectory")
    level = int(blk.get("level", cfg.level))
    times = blk.get("times") or list(cfg.times)
    if not times:
        raise ConfigError("forward block needs observation times")
    if kind in ("trajectory", "viscous-trajectory", "velocity-trajectory"):
        if "x0" in blk and "t0" in blk:
            x0, t0 = float(blk["x0"]), float(blk["t0"])
        elif cfg.particle is not None:
            x0, t0 = cfg.particle
        else:
            raise ConfigError("trajectory forward needs x0 and t0")
        if t0 <= 0:
            raise ConfigError("forward t0 must be positive")
    if kind == "trajectory":
        if cfg.velocity is None:
            raise ConfigError("trajectory forward needs a velocity spec")
        return TrajectoryForward(cfg.velocity, level, x0, t0, tuple(times))
    if kind == "velocity-trajectory":
        return VelocityTrajectoryForward(cfg.initial, level, x0, t0, tuple(times))
    if kind == "viscous-trajectory":
        return ViscousTrajectoryForward(
            cfg.velocity, _smooth_flux(cfg), float(blk["epsilon"]),
            x0, t0, tuple(times),
            n_cells=int(blk.get("n_cells", 400)),
            store_every=int(blk.get("store_every", 4)),
        )
    if kind == "pointwise":
        return PointwiseForward(
            cfg.velocity, level, tuple(blk["positions"]), tuple(times)
        )
    if kind == "ball-average":
        return BallAverageForward(
            cfg.velocity, level, tuple(blk["positions"]), tuple(times),
            float(blk["radius"]),
        )
    raise ConfigError(f"unknown forward kind {kind!r}")


def _truth_from_block(blk: dict, prior: PriorSpec):
    if "truth" in blk:
        try:
            return cfgio.StepFunction.from_spec(blk["truth"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad truth field: {exc}") from exc
    if "truth_latent" in blk:
        return prior.transform(np.asarray(blk["truth_latent"], dtype=float))
    raise ConfigError("synthetic block needs 'truth' or 'truth_latent'")


def cmd_synth(cfg: ScenarioConfig, args, out: str) -> int:
    blk = cfg.block("inversion")
    synth = blk.get("synthetic")
    if synth is None:
        raise ConfigError("synth needs an inversion.synthetic block")
    prior = cfgio.prior_from_block(blk.get("prior", {}))
    forward = _forward_from_block(blk.get("forward", {}), cfg)
    seed = int(synth.get("seed", cfg.seed)) if args.seed is None else args.seed
    truth = _truth_from_block(synth, prior)
    obs = synth_observations(forward, truth, float(synth.get("noise_std", 0.0)), seed)
    cfgio.write_observations_json(os.path.join(out, "observations.json"), obs)
    if args.check:
        again = synth_observations(
            forward, truth, float(synth.get("noise_std", 0.0)), seed
        )
        if not np.array_equal(obs.values, again.values):
            raise CheckFailure("synthetic data not reproducible under its seed")
    return 0


def _observations(blk: dict, cfg: ScenarioConfig, forward, args):
    if "observations_file" in blk:
        return cfgio.read_observations_json(blk["observations_file"])
    if "observations" in blk:
        try:
            return cfgio.ObservationSet.from_spec(blk["observations"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad observations block: {exc}") from exc
    if "synthetic" in blk:
        synth = blk["synthetic"]
        prior = cfgio.prior_from_block(blk.get("prior", {}))
        seed = int(synth.get("seed", cfg.seed))
        truth = _truth_from_block(synth, prior)
        return synth_observations(
            forward, truth, float(synth.get("noise_std", 0.0)), seed
        )
    raise ConfigError("inversion block needs observations, observations_file, "
                      "or a synthetic recipe")


def cmd_invert(cfg: ScenarioConfig, args, out: str) -> int:
    blk = cfg.block("inversion")
    prior = cfgio.prior_from_block(blk.get("prior", {}))
    forward = _forward_from_block(blk.get("forward", {}), cfg)
    obs = _observations(blk, cfg, forward, args)
    sampler = blk.get("sampler", {})
    chain_length = int(sampler.get("chain_length", 1000))
    beta = float(sampler.get("beta", 0.1))
    burn_in = int(sampler.get("burn_in", 0))
    seed = cfg.seed if args.seed is None else args.seed
    run = run_pcn(prior, obs, forward, chain_length, beta, seed, burn_in=burn_in)
    cfgio.write_chain_csv(
        os.path.join(out, "chain.csv"), run, thin=int(sampler.get("thin", 1))
    )
    band_lo, band_hi = run.credible_band()
    summary = {
        "acceptance_rate": run.acceptance_rate,
        "chain_length": run.chain_length,
        "beta": beta,
        "seed": seed,
        "posterior_mean_values": run.mean_values,
        "credible_band_low": band_lo,
        "credible_band_high": band_hi,
        "grid": prior.grid,
    }
    ladder_blk = blk.get("ladder")
    if ladder_blk:
        levels = [int(n) for n in ladder_blk.get("levels", ())]
        ref_level = int(ladder_blk.get("reference", 12))
        n_samples = int(ladder_blk.get("n_samples", 500))
        rows = []
        ref_fwd = _forward_from_block(
            dict(blk.get("forward", {}), level=ref_level), cfg
        )
        for n in levels:
            fwd_n = _forward_from_block(dict(blk.get("forward", {}), level=n), cfg)
            est = hellinger_between(
                prior, obs, fwd_n, ref_fwd, n_samples,
                seed=seed, jobs=args.jobs,
            )
            rows.append({"level": n, **est.to_dict()})
        summary["hellinger_table"] = rows
    cfgio.write_json(os.path.join(out, "summary.json"), summary)
    if args.check:
        if not 0.0 < run.acceptance_rate < 1.0:
            raise CheckFailure(
                f"degenerate acceptance rate {run.acceptance_rate}"
            )
        if ladder_blk:
            dists = [r["value"] for r in summary["hellinger_table"]]
            if any(b > a + 1e-14 for a, b in zip(dists, dists[1:])):
                raise CheckFailure("Hellinger ladder is not nonincreasing")
    return 0


def cmd_viscous(cfg: ScenarioConfig, args, out: str) -> int:
    blk = cfg.block("viscous")
    epsilon = float(blk.get("epsilon", 0.05))
    fld = solve_viscous(
        cfg.initial,
        _smooth_flux(cfg),
        epsilon,
        cfg.horizon,
        window=tuple(blk["window"]) if "window" in blk else None,
        n_cells=int(blk.get("n_cells", 2000)),
        cfl_safety=float(blk.get("cfl_safety", 0.9)),
        store_every=int(blk.get("store_every", 1)),
    )
    times = [float(t) for t in blk.get("snapshot_times", ())] or list(cfg.times) or [
        cfg.horizon
    ]
    names = []
    for i, t in enumerate(times):
        name = f"snapshot_{i:02d}.csv"
        cfgio.write_snapshot_csv(os.path.join(out, name), fld.x, fld.snapshot(t))
        names.append(name)
    cfgio.write_json(
        os.path.join(out, "summary.json"),
        {
            "epsilon": epsilon,
            "dx": fld.dx,
            "dt": fld.dt,
            "times": times,
            "snapshots": names,
            "mass_initial": fld.mass(0.0),
            "mass_final": fld.mass(cfg.horizon),
            "boundary_account": fld.boundary_account,
        },
    )
    if args.check:
        drift = abs(
            fld.mass(cfg.horizon) - fld.mass(0.0) - fld.boundary_account
        )
        if drift > 1e-8:
            raise CheckFailure(f"mass accounting off by {drift:.3e} > 1e-8")
        lo, hi = cfg.initial.min_value(), cfg.initial.max_value()
        final = fld.snapshot(cfg.horizon)
        if final.min() < lo - 1e-12 or final.max() > hi + 1e-12:
            raise CheckFailure("viscous solution left the initial value hull")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "track": cmd_track,
    "stability": cmd_stability,
    "invert": cmd_invert,
    "viscous": cmd_viscous,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shockline",
        description="Front-tracking conservation-law solver, particle "
        "trajectories, stability experiments, and Bayesian inversion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "evolve a scenario and export slices plus an event log"),
        ("track", "follow a particle through a solved scenario"),
        ("stability", "run a perturbation ladder and export the rate report"),
        ("invert", "sample a posterior with pCN and export the chain"),
        ("viscous", "solve the viscous regularization and export snapshots"),
        ("synth", "generate synthetic observations from a known truth"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario JSON path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--check", action="store_true",
                       help="run embedded acceptance assertions")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sample batches")
    return parser


def main(argv: Optional[list] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = cfgio.load_scenario(args.config)
        out = os.environ.get("SHOCKLINE_OUT") or args.out
        os.makedirs(out, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # solver-level failure
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
