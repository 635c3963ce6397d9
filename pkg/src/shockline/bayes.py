"""Bayesian inversion around the front-tracking forward maps.

Gaussian latents on a grid are pushed through monotone links into density
fields with values in (0, 1) or into admissible velocity functions.  The
posterior for noisy observations of particle paths or field values is
explored with a preconditioned Crank-Nicolson chain, and distances between
posteriors (exact vs. approximate forward maps, or perturbed data) are
estimated with a common-sample Hellinger estimator.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from math import inf, log, sqrt
from typing import Optional, Sequence, Union

import numpy as np

from .filippov import track
from .flux import (
    TableVelocity,
    VelocityFunction,
    traffic_flux_from_velocity,
)
from .front_tracking import (
    FrontTrackingSolution,
    StepFunction,
    evolve,
    quantize_step,
)
from .viscous import solve_viscous, track_smooth

LOG_UNDERFLOW = log(1e-300)


def latent_to_unit_interval(v):
    """Monotone link from the real line onto (0, 1); maps 0 to 1/2.

    Equal to exp(v)/2 for v <= 0 and 1 - exp(-v)/2 otherwise, so tail
    values approach the interval ends only exponentially slowly.
    """
    arr = np.asarray(v, dtype=float)
    out = np.where(arr <= 0, 0.5 * np.exp(np.minimum(arr, 0.0)),
                   1.0 - 0.5 * np.exp(-np.maximum(arr, 0.0)))
    if np.isscalar(v) or (isinstance(v, np.ndarray) and v.ndim == 0):
        return float(out)
    return out


@dataclass(frozen=True)
class PriorSpec:
    """Gaussian latent prior and its push-forward.

    kind 'initial-field': the latent lives on a spatial grid spanning
    ``window``; the sample is a StepFunction with cell edges at grid
    midpoints and values squashed into (0, 1).

    kind 'velocity': the latent lives on a grid of [0, 1]; the sample is
    the table velocity w(r) = w_max * I(r)/I(0) with I(r) the integral of
    exp(latent) from r to 1, hence strictly decreasing with w(1) = 0.
    """

    kind: str = "initial-field"
    n: int = 64
    length_scale: float = 0.5
    amplitude: float = 1.0
    window: tuple[float, float] = (-1.0, 2.0)
    mean: float = 0.0
    w_max: float = 1.0

    def __post_init__(self):
        if self.kind not in ("initial-field", "velocity"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("need n >= 2 latent points")
        if self.length_scale <= 0 or self.amplitude < 0:
            raise ValueError("length_scale must be positive and amplitude nonnegative")
        lo, hi = self.window
        if hi <= lo:
            raise ValueError("window must have positive length")
        if self.kind == "velocity" and (lo, hi) != (0.0, 1.0):
            raise ValueError("velocity priors use the latent window (0, 1)")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.window[0], self.window[1], self.n)

    @cached_property
    def covariance(self) -> np.ndarray:
        x = self.grid
        d = x[:, None] - x[None, :]
        return self.amplitude ** 2 * np.exp(-0.5 * (d / self.length_scale) ** 2)

    @cached_property
    def factor(self) -> np.ndarray:
        """PSD square root of the covariance via symmetric eigendecomposition."""
        vals, vecs = np.linalg.eigh(self.covariance)
        floor = -1e-10 * max(float(vals[-1]), 1.0)
        if float(vals[0]) < floor:
            raise ValueError(
                f"covariance is not positive semidefinite (min eigenvalue {vals[0]:.3e})"
            )
        return vecs * np.sqrt(np.clip(vals, 0.0, None))

    def sample_latent(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        if size is None:
            return self.mean + self.factor @ rng.standard_normal(self.n)
        return self.mean + rng.standard_normal((size, self.n)) @ self.factor.T

    def transform(self, latent: np.ndarray):
        """Push one latent vector to its field or velocity sample."""
        latent = np.asarray(latent, dtype=float)
        if latent.shape != (self.n,):
            raise ValueError(f"latent must have shape ({self.n},)")
        if self.kind == "initial-field":
            u = latent_to_unit_interval(latent)
            x = self.grid
            edges = 0.5 * (x[:-1] + x[1:])
            return StepFunction(edges, u)
        g = latent - np.max(latent)
        integrand = np.exp(g)
        x = self.grid
        # right-to-left trapezoid accumulation: exact zero at the right end
        seg = 0.5 * (integrand[:-1] + integrand[1:]) * np.diff(x)
        tail = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
        return TableVelocity(x, self.w_max * tail / tail[0])

    def transformed_values(self, latent: np.ndarray) -> np.ndarray:
        """Values of the push-forward on the latent grid (for averaging)."""
        s = self.transform(latent)
        return s.values if isinstance(s, StepFunction) else np.asarray(s.values)

    def field_from_values(self, values: np.ndarray):
        """Rebuild a sample object from grid values (e.g. a posterior mean)."""
        if self.kind == "initial-field":
            x = self.grid
            return StepFunction(0.5 * (x[:-1] + x[1:]), values)
        return TableVelocity(self.grid, values)

    def to_spec(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "length_scale": self.length_scale,
            "amplitude": self.amplitude,
            "window": [float(self.window[0]), float(self.window[1])],
            "mean": self.mean,
            "w_max": self.w_max,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "PriorSpec":
        return cls(
            kind=spec.get("kind", "initial-field"),
            n=int(spec.get("n", 64)),
            length_scale=float(spec.get("length_scale", 0.5)),
            amplitude=float(spec.get("amplitude", 1.0)),
            window=tuple(spec.get("window", (-1.0, 2.0))),
            mean=float(spec.get("mean", 0.0)),
            w_max=float(spec.get("w_max", 1.0)),
        )


@dataclass
class ObservationSet:
    """Observed values with their geometry and noise level."""

    kind: str  # trajectory | pointwise | ball-average
    values: np.ndarray
    noise_std: float
    times: np.ndarray
    positions: Optional[np.ndarray] = None
    radius: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        if self.noise_std <= 0:
            raise ValueError("noise_std must be positive")

    def to_spec(self) -> dict:
        out = {
            "kind": self.kind,
            "values": [float(v) for v in self.values],
            "noise_std": self.noise_std,
            "times": [float(t) for t in self.times],
            "meta": self.meta,
        }
        if self.positions is not None:
            out["positions"] = [float(x) for x in self.positions]
        if self.radius is not None:
            out["radius"] = self.radius
        return out

    @classmethod
    def from_spec(cls, spec: dict) -> "ObservationSet":
        return cls(
            kind=spec["kind"],
            values=np.asarray(spec["values"], dtype=float),
            noise_std=float(spec["noise_std"]),
            times=np.asarray(spec["times"], dtype=float),
            positions=(
                np.asarray(spec["positions"], dtype=float) if "positions" in spec else None
            ),
            radius=spec.get("radius"),
            meta=spec.get("meta", {}),
        )


# ---------------------------------------------------------------------------
# forward maps


@dataclass
class TrajectoryForward:
    """Particle positions z(t_j) for an unknown initial density field."""

    velocity: VelocityFunction
    level: int
    x0: float
    t0: float
    times: tuple
    kind: str = field(default="trajectory", init=False)
    flux: object = field(init=False, repr=False)

    def __post_init__(self):
        self.times = tuple(float(t) for t in self.times)
        if min(self.times) < self.t0:
            raise ValueError("observation times must be >= t0")
        self.flux = traffic_flux_from_velocity(self.velocity, self.level)

    @property
    def horizon(self) -> float:
        return max(self.times)

    def solve(self, sample: StepFunction) -> FrontTrackingSolution:
        return evolve(quantize_step(sample, self.level), self.flux, self.horizon)

    def __call__(self, sample: StepFunction) -> np.ndarray:
        traj = track(self.solve(sample), self.velocity, self.x0, self.t0, self.horizon)
        return traj.observe(self.times)


@dataclass
class PointwiseForward:
    """Field values at points (x_j, t_j); one-sided limits are averaged."""

    velocity: VelocityFunction
    level: int
    positions: tuple
    times: tuple
    kind: str = field(default="pointwise", init=False)
    flux: object = field(init=False, repr=False)

    def __post_init__(self):
        self.times = tuple(float(t) for t in self.times)
        self.positions = tuple(float(x) for x in self.positions)
        if len(self.times) != len(self.positions):
            raise ValueError("positions and times must pair up")
        self.flux = traffic_flux_from_velocity(self.velocity, self.level)

    @property
    def horizon(self) -> float:
        return max(self.times)

    def solve(self, sample: StepFunction) -> FrontTrackingSolution:
        return evolve(quantize_step(sample, self.level), self.flux, self.horizon)

    def __call__(self, sample: StepFunction) -> np.ndarray:
        sol = self.solve(sample)
        out = np.empty(len(self.times))
        cache: dict[float, StepFunction] = {}
        for j, (x, t) in enumerate(zip(self.positions, self.times)):
            if t not in cache:
                cache[t] = sol.slice(t)
            lv, rv = cache[t].value_at(x)
            out[j] = 0.5 * (lv + rv)
        return out


@dataclass
class BallAverageForward:
    """Integrals of the field over balls B_r(x_j) at times t_j."""

    velocity: VelocityFunction
    level: int
    positions: tuple
    times: tuple
    radius: float
    kind: str = field(default="ball-average", init=False)
    flux: object = field(init=False, repr=False)

    def __post_init__(self):
        self.times = tuple(float(t) for t in self.times)
        self.positions = tuple(float(x) for x in self.positions)
        if len(self.times) != len(self.positions):
            raise ValueError("positions and times must pair up")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        self.flux = traffic_flux_from_velocity(self.velocity, self.level)

    @property
    def horizon(self) -> float:
        return max(self.times)

    def solve(self, sample: StepFunction) -> FrontTrackingSolution:
        return evolve(quantize_step(sample, self.level), self.flux, self.horizon)

    def __call__(self, sample: StepFunction) -> np.ndarray:
        sol = self.solve(sample)
        out = np.empty(len(self.times))
        cache: dict[float, StepFunction] = {}
        for j, (x, t) in enumerate(zip(self.positions, self.times)):
            if t not in cache:
                cache[t] = sol.slice(t)
            out[j] = cache[t].integral(x - self.radius, x + self.radius)
        return out


@dataclass
class VelocityTrajectoryForward:
    """Particle positions z(t_j) for an unknown velocity function."""

    initial: StepFunction
    level: int
    x0: float
    t0: float
    times: tuple
    kind: str = field(default="trajectory", init=False)

    def __post_init__(self):
        self.times = tuple(float(t) for t in self.times)
        self.initial = quantize_step(self.initial, self.level)

    @property
    def horizon(self) -> float:
        return max(self.times)

    def solve(self, sample: VelocityFunction) -> FrontTrackingSolution:
        flux = traffic_flux_from_velocity(sample, self.level)
        return evolve(self.initial, flux, self.horizon)

    def __call__(self, sample: VelocityFunction) -> np.ndarray:
        traj = track(self.solve(sample), sample, self.x0, self.t0, self.horizon)
        return traj.observe(self.times)


@dataclass
class ViscousTrajectoryForward:
    """Particle positions through the viscous regularization."""

    velocity: VelocityFunction
    flux: object
    epsilon: float
    x0: float
    t0: float
    times: tuple
    n_cells: int = 400
    store_every: int = 4
    kind: str = field(default="trajectory", init=False)

    def __post_init__(self):
        self.times = tuple(float(t) for t in self.times)

    @property
    def horizon(self) -> float:
        return max(self.times)

    def __call__(self, sample: StepFunction) -> np.ndarray:
        fld = solve_viscous(
            sample, self.flux, self.epsilon, self.horizon,
            n_cells=self.n_cells, store_every=self.store_every,
        )
        traj = track_smooth(fld, self.velocity, self.x0, self.t0, self.horizon)
        return traj.observe(self.times)


ForwardMap = Union[
    TrajectoryForward,
    PointwiseForward,
    BallAverageForward,
    VelocityTrajectoryForward,
    ViscousTrajectoryForward,
]


def potential(sample, obs: ObservationSet, forward: ForwardMap) -> float:
    """Least-squares misfit |y - G(u)|^2 / (2 noise_std^2)."""
    g = forward(sample)
    if g.shape != obs.values.shape:
        raise ValueError("forward output and observations differ in length")
    r = obs.values - g
    return float(np.dot(r, r) / (2.0 * obs.noise_std ** 2))


def synth_observations(
    forward: ForwardMap,
    truth,
    noise_std: float,
    seed: int = 0,
    positions: Optional[Sequence[float]] = None,
) -> ObservationSet:
    """Noisy data from a known truth; noise_std = 0 gives exact data."""
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    clean = forward(truth)
    meta = {"seed": seed, "clean_values": [float(v) for v in clean]}
    if noise_std > 0:
        noise = np.random.default_rng(seed).standard_normal(clean.size) * noise_std
        values, std = clean + noise, noise_std
    else:
        # noiseless data still needs a scale for the misfit; unit by convention
        values, std = clean, 1.0
        meta["noiseless"] = True
    pts = getattr(forward, "positions", positions)
    return ObservationSet(
        kind=forward.kind,
        values=values,
        noise_std=std,
        times=np.asarray(forward.times),
        positions=np.asarray(pts, dtype=float) if pts is not None else None,
        radius=getattr(forward, "radius", None),
        meta=meta,
    )


@dataclass
class PosteriorRun:
    """pCN chain output with running posterior-mean field values."""

    prior: PriorSpec
    beta: float
    seed: int
    latent_chain: np.ndarray
    potentials: np.ndarray
    accepted: np.ndarray
    mean_values: np.ndarray
    burn_in: int = 0

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted))

    @property
    def chain_length(self) -> int:
        return int(self.latent_chain.shape[0])

    def posterior_mean_field(self):
        return self.prior.field_from_values(self.mean_values)

    def credible_band(self, lo_q: float = 0.05, hi_q: float = 0.95, thin: int = 10):
        vals = np.stack(
            [self.prior.transformed_values(v) for v in self.latent_chain[:: max(thin, 1)]]
        )
        return np.quantile(vals, lo_q, axis=0), np.quantile(vals, hi_q, axis=0)


def run_pcn(
    prior: PriorSpec,
    obs: ObservationSet,
    forward: ForwardMap,
    chain_length: int,
    beta: float,
    seed: int,
    burn_in: int = 0,
) -> PosteriorRun:
    """Preconditioned Crank-Nicolson sampling of the posterior latent.

    Proposal v' = mean + sqrt(1 - beta^2)(v - mean) + beta * xi with xi a
    fresh prior fluctuation; acceptance probability min(1, exp(Phi - Phi')).
    beta = 0 reproduces the starting point forever.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if chain_length < 1:
        raise ValueError("chain_length must be positive")
    if not 0 <= burn_in < chain_length:
        raise ValueError("burn_in must be in [0, chain_length)")
    rng = np.random.default_rng(seed)
    factor = prior.factor
    contraction = sqrt(1.0 - beta * beta)

    v = prior.sample_latent(rng)
    phi = potential(prior.transform(v), obs, forward)
    chain = np.empty((chain_length, prior.n))
    phis = np.empty(chain_length)
    accepted = np.zeros(chain_length, dtype=bool)
    mean_acc = np.zeros(prior.n)
    kept = 0
    for m in range(chain_length):
        xi = factor @ rng.standard_normal(prior.n)
        v_prop = prior.mean + contraction * (v - prior.mean) + beta * xi
        phi_prop = potential(prior.transform(v_prop), obs, forward)
        if log(rng.uniform()) < phi - phi_prop:
            v = v_prop
            phi = phi_prop
            accepted[m] = True
        chain[m] = v
        phis[m] = phi
        if m >= burn_in:
            mean_acc += prior.transformed_values(v)
            kept += 1
    return PosteriorRun(
        prior=prior,
        beta=beta,
        seed=seed,
        latent_chain=chain,
        potentials=phis,
        accepted=accepted,
        mean_values=mean_acc / max(kept, 1),
        burn_in=burn_in,
    )


# ---------------------------------------------------------------------------
# Hellinger estimation


@dataclass
class HellingerEstimate:
    value: float
    stderr: float
    n_samples: int
    log_evidence_a: float
    log_evidence_b: float
    batch_values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "log_evidence_a": self.log_evidence_a,
            "log_evidence_b": self.log_evidence_b,
        }


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    if m == -inf:
        return -inf
    return m + log(float(np.sum(np.exp(x - m))))


def _hellinger_from_potentials(
    phi_a: np.ndarray, phi_b: np.ndarray, n_batches: int
) -> tuple[float, float, float, float, np.ndarray]:
    m = phi_a.size

    def estimate(pa: np.ndarray, pb: np.ndarray) -> tuple[float, float, float]:
        la, lb = -pa, -pb
        log_za = _logsumexp(la) - log(la.size)
        log_zb = _logsumexp(lb) - log(lb.size)
        if log_za < LOG_UNDERFLOW or log_zb < LOG_UNDERFLOW:
            raise FloatingPointError(
                "evidence estimate underflows (below 1e-300); "
                "likelihood too peaked for this sample size"
            )
        ra = np.exp(0.5 * (la - log_za))
        rb = np.exp(0.5 * (lb - log_zb))
        d2 = 0.5 * float(np.mean((ra - rb) ** 2))
        return sqrt(max(d2, 0.0)), log_za, log_zb

    value, log_za, log_zb = estimate(phi_a, phi_b)
    bounds = np.linspace(0, m, n_batches + 1).astype(int)
    batch_vals = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi - lo >= 2:
            batch_vals.append(estimate(phi_a[lo:hi], phi_b[lo:hi])[0])
    batch_vals = np.asarray(batch_vals)
    stderr = (
        float(np.std(batch_vals, ddof=1) / sqrt(batch_vals.size))
        if batch_vals.size >= 2
        else inf
    )
    return value, stderr, log_za, log_zb, batch_vals


def _forward_batch(args):
    forward, prior_spec, latents = args
    prior = PriorSpec.from_spec(prior_spec)
    return np.stack([forward(prior.transform(v)) for v in latents])


def evaluate_forward_on_samples(
    prior: PriorSpec,
    forward: ForwardMap,
    latents: np.ndarray,
    jobs: int = 1,
) -> np.ndarray:
    """G(u_m) for each latent row, optionally on a process pool."""
    if jobs <= 1 or latents.shape[0] < 4 * jobs:
        return np.stack([forward(prior.transform(v)) for v in latents])
    chunks = np.array_split(latents, jobs)
    spec = prior.to_spec()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_forward_batch, [(forward, spec, c) for c in chunks]))
    return np.concatenate(parts)


def _potentials(g: np.ndarray, obs: ObservationSet) -> np.ndarray:
    r = obs.values[None, :] - g
    return np.sum(r * r, axis=1) / (2.0 * obs.noise_std ** 2)


def hellinger_between(
    prior: PriorSpec,
    obs: ObservationSet,
    forward_a: ForwardMap,
    forward_b: ForwardMap,
    n_samples: int,
    seed: int = 0,
    obs_b: Optional[ObservationSet] = None,
    n_batches: int = 10,
    jobs: int = 1,
) -> HellingerEstimate:
    """Hellinger distance between two posteriors sharing the same prior.

    Uses one common set of prior samples for both sides, so identical
    forward maps (and identical data) give exactly zero.  Raises
    FloatingPointError when an evidence estimate falls below 1e-300.
    """
    if n_samples < max(2 * n_batches, 4):
        raise ValueError("n_samples too small for batch-means error bars")
    rng = np.random.default_rng(seed)
    latents = prior.sample_latent(rng, size=n_samples)
    g_a = evaluate_forward_on_samples(prior, forward_a, latents, jobs)
    g_b = g_a if forward_b is forward_a else evaluate_forward_on_samples(
        prior, forward_b, latents, jobs
    )
    phi_a = _potentials(g_a, obs)
    phi_b = _potentials(g_b, obs if obs_b is None else obs_b)
    value, stderr, log_za, log_zb, batches = _hellinger_from_potentials(
        phi_a, phi_b, n_batches
    )
    return HellingerEstimate(value, stderr, n_samples, log_za, log_zb, batches)


@dataclass
class StudyRow:
    label: float
    hellinger: float
    stderr: float
    forward_discrepancy: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "hellinger": self.hellinger,
            "stderr": self.stderr,
            "forward_discrepancy": self.forward_discrepancy,
        }


@dataclass
class StudyReport:
    """Posterior-approximation ladder against a fixed reference forward."""

    rows: list
    control_value: float
    fitted_constant: float
    monotone_nonincreasing: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "control_value": self.control_value,
            "fitted_constant": self.fitted_constant,
            "monotone_nonincreasing": self.monotone_nonincreasing,
            "meta": self.meta,
        }


def posterior_convergence_study(
    prior: PriorSpec,
    obs: ObservationSet,
    ladder: Sequence[tuple[float, ForwardMap]],
    reference: ForwardMap,
    n_samples: int,
    seed: int = 0,
    n_batches: int = 10,
    jobs: int = 1,
) -> StudyReport:
    """Hellinger distances posterior(approx) vs posterior(reference).

    All rungs share one common sample set.  The report records the mean
    forward discrepancy per rung, the fitted constant
    max d / sqrt(discrepancy), the A = B control (always exactly 0), and
    whether the distances decrease along the ladder as given.
    """
    rng = np.random.default_rng(seed)
    latents = prior.sample_latent(rng, size=n_samples)
    g_ref = evaluate_forward_on_samples(prior, reference, latents, jobs)
    phi_ref = _potentials(g_ref, obs)
    control = _hellinger_from_potentials(phi_ref, phi_ref, n_batches)[0]
    rows = []
    for label, fwd in ladder:
        g_n = evaluate_forward_on_samples(prior, fwd, latents, jobs)
        phi_n = _potentials(g_n, obs)
        value, stderr, _, _, _ = _hellinger_from_potentials(phi_n, phi_ref, n_batches)
        disc = float(np.mean(np.abs(g_n - g_ref)))
        rows.append(StudyRow(float(label), value, stderr, disc))
    dists = np.asarray([r.hellinger for r in rows])
    discs = np.asarray([max(r.forward_discrepancy, 1e-300) for r in rows])
    fitted = float(np.max(dists / np.sqrt(discs))) if rows else 0.0
    return StudyReport(
        rows=rows,
        control_value=control,
        fitted_constant=fitted,
        monotone_nonincreasing=bool(np.all(np.diff(dists) <= 1e-14)),
        meta={"n_samples": n_samples, "seed": seed},
    )


def place_observation_points(
    sol: FrontTrackingSolution,
    times: Sequence[float],
    x_range: tuple[float, float],
    shock_threshold: float = 0.05,
    clearance: float = 0.02,
    scan_points: int = 400,
) -> list[tuple[float, float]]:
    """One observation point per time, outside shock neighborhoods.

    Scans x_range at each time and keeps the candidate farthest from every
    shock stronger than ``shock_threshold``; errors out if no candidate has
    clearance greater than ``clearance``.
    """
    catalog = sol.shock_catalog(shock_threshold)
    points = []
    xs = np.linspace(x_range[0], x_range[1], scan_points)
    for t in times:
        dists = np.asarray([catalog.min_distance(x, t) for x in xs])
        k = int(np.argmax(dists))
        if dists[k] <= clearance:
            raise ValueError(
                f"no observation point at t={t} clears the shock set by {clearance}"
            )
        points.append((float(xs[k]), float(t)))
    return points


def shock_containment_fraction(
    prior: PriorSpec,
    approx_forward,
    ref_forward,
    latents: np.ndarray,
    shock_threshold: float,
    clearance: float,
) -> float:
    """Fraction of samples whose strong approximate shocks stay within
    ``clearance`` of the reference run's strong-shock set."""
    ok = 0
    for v in latents:
        sample = prior.transform(v)
        sol_a = approx_forward.solve(sample)
        sol_r = ref_forward.solve(sample)
        cat_r = sol_r.shock_catalog(shock_threshold)
        contained = True
        for seg in sol_a.shock_catalog(shock_threshold).segments:
            for xq, tq in (
                (seg.x0, seg.t0),
                (0.5 * (seg.x0 + seg.x1), 0.5 * (seg.t0 + seg.t1)),
                (seg.x1, seg.t1),
            ):
                if not cat_r.covers(xq, tq, clearance):
                    contained = False
                    break
            if not contained:
                break
        ok += contained
    return ok / max(len(latents), 1)
