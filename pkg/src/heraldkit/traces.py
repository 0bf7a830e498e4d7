"""Synthesis of raw homodyne time traces: one quadrature value embedded in
the temporal mode of the heralded photon, vacuum noise in every orthogonal
mode, optional additive electronic noise, and a swept local-oscillator phase.

Per-sample white noise of variance 1/(2 dt) realizes vacuum variance 1/2 in
any unit-norm discrete mode, so traces come out already calibrated to
shot-noise units.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fock import DensityMatrix, quadrature_pdf

VACUUM_VARIANCE = 0.5
MIN_WINDOW_CAPTURE = 0.999


@dataclass(frozen=True)
class TemporalMode:
    """Discretized matched-filter mode: a two-sided exponential of bandwidth
    ``gamma`` sampled every ``dt`` seconds, normalized to sum(f^2) dt = 1."""

    gamma: float
    dt: float
    f: np.ndarray

    def __post_init__(self):
        if abs(float(np.sum(self.f**2)) * self.dt - 1.0) > 1e-12:
            raise ValueError("mode is not normalized to unit discrete norm")
        if not np.allclose(self.f, self.f[::-1], rtol=0, atol=0):
            raise ValueError("mode must be symmetric about the trace center")
        if np.any(self.f <= 0):
            raise ValueError("mode samples must be positive")
        self.f.flags.writeable = False

    @property
    def n_samples(self) -> int:
        return self.f.shape[0]


def minimum_samples(gamma: float, dt: float, capture: float = MIN_WINDOW_CAPTURE) -> int:
    """Smallest window length whose tail loss of the mode energy stays below
    1 - capture."""
    return math.ceil(-math.log(1.0 - capture) / (math.pi * gamma * dt))


def build_temporal_mode(gamma: float, dt: float, n_samples: int) -> TemporalMode:
    """Sample f(t) = sqrt(pi gamma) exp(-pi gamma |t|) centered in the window.

    The window must capture at least 99.9% of the continuous-time mode
    energy; the error message names the minimum usable n_samples.
    """
    if gamma <= 0 or dt <= 0 or n_samples < 2:
        raise ValueError("need gamma > 0, dt > 0 and n_samples >= 2")
    half_window = n_samples * dt / 2.0
    captured = 1.0 - math.exp(-2.0 * math.pi * gamma * half_window)
    if captured < MIN_WINDOW_CAPTURE:
        raise ValueError(
            f"window captures only {captured:.4%} of the mode energy; "
            f"use n_samples >= {minimum_samples(gamma, dt)} at this rate"
        )
    t = (np.arange(n_samples) - (n_samples - 1) / 2.0) * dt
    f = np.sqrt(np.pi * gamma) * np.exp(-np.pi * gamma * np.abs(t))
    f /= np.sqrt(np.sum(f**2) * dt)
    return TemporalMode(gamma=gamma, dt=dt, f=f)


@dataclass(frozen=True)
class TimeTrace:
    """One digitized difference-photocurrent record in shot-noise units,
    tagged with the local-oscillator phase and the herald that triggered it."""

    samples: np.ndarray
    dt: float
    theta: float = 0.0
    herald_id: int = 0

    def __post_init__(self):
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("trace samples must be finite")


@dataclass(frozen=True)
class NoiseModel:
    """Detection-noise model: vacuum variance is fixed by convention at 1/2;
    ``electronic_ratio`` is the electronic-noise variance as a fraction of
    it (0.01 corresponds to electronics 20 dB below vacuum)."""

    electronic_ratio: float = 0.01

    def __post_init__(self):
        if self.electronic_ratio < 0:
            raise ValueError("electronic_ratio must be nonnegative")


class QuadratureSampler:
    """Inverse-CDF sampler for the homodyne outcome distribution of a state.

    For photon-number-diagonal states the distribution is phase-independent
    and one sampler serves every local-oscillator phase (pass theta=None).
    """

    def __init__(self, rho: DensityMatrix, theta: float | None = None, grid_points: int = 8192):
        if theta is None:
            if not rho.is_diagonal():
                raise ValueError("theta=None requires a photon-number-diagonal state")
            theta = 0.0
        x_max = np.sqrt(2.0 * rho.n_max + 1.0) + 5.0
        x = np.linspace(-x_max, x_max, grid_points)
        pdf = np.clip(quadrature_pdf(rho, theta, x), 0.0, None)
        cdf = np.concatenate(([0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(x))))
        cdf /= cdf[-1]
        self._x = x
        self._cdf = cdf

    def ppf(self, u):
        return np.interp(u, self._cdf, self._x)

    def sample(self, size, rng) -> np.ndarray:
        return self.ppf(rng.random(size))

    def cdf(self, x):
        return np.interp(x, self._x, self._cdf)


def sample_quadrature(rho: DensityMatrix, theta: float, rng_seed=None) -> float:
    """Draw one homodyne outcome from the state at the given phase."""
    rng = np.random.default_rng(rng_seed)
    return float(QuadratureSampler(rho, theta).sample(None, rng))


def synthesize_trace(
    x_sig: float,
    mode: TemporalMode,
    noise: NoiseModel,
    rng_seed=None,
    theta: float = 0.0,
    herald_id: int = 0,
) -> TimeTrace:
    """Build a trace whose matched-filter projection is exactly ``x_sig``.

    White vacuum noise n_k (variance 1/(2 dt) per sample) fills every mode;
    the signal quadrature replaces the component along f via
    x_k = n_k + (x_sig - <f, n> dt) f_k.  Electronic noise is then added
    independently, so the projection onto f gains variance
    electronic_ratio / 2 while any orthogonal unit-norm mode keeps variance
    (1 + electronic_ratio) / 2.
    """
    rng = np.random.default_rng(rng_seed)
    samples = _synthesize_samples(x_sig, mode, noise, rng)
    return TimeTrace(samples=samples, dt=mode.dt, theta=theta, herald_id=herald_id)


def _synthesize_samples(x_sig, mode, noise, rng):
    sd = math.sqrt(VACUUM_VARIANCE / mode.dt)
    n = rng.normal(0.0, sd, mode.n_samples)
    samples = n + (x_sig - np.dot(mode.f, n) * mode.dt) * mode.f
    if noise.electronic_ratio > 0:
        samples = samples + rng.normal(
            0.0, math.sqrt(noise.electronic_ratio) * sd, mode.n_samples
        )
    return samples


@dataclass
class TraceSet:
    """Acquisition packed as arrays (one row per herald); samples are stored
    as float32, matching the on-disk trace format bit for bit."""

    herald_ids: np.ndarray
    thetas: np.ndarray
    samples: np.ndarray
    dt: float

    def __len__(self):
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def __getitem__(self, i) -> TimeTrace:
        return TimeTrace(
            samples=self.samples[i].astype(np.float64),
            dt=self.dt,
            theta=float(self.thetas[i]),
            herald_id=int(self.herald_ids[i]),
        )


def _event_rng(seed, herald_id):
    # child stream keyed by (master seed, herald id): parallel chunking and
    # serial generation produce identical traces
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(herald_id,)))


def run_acquisition(
    rho: DensityMatrix,
    n_events: int,
    mode: TemporalMode,
    noise: NoiseModel,
    phase_schedule: str = "ramp",
    ramp_period: int = 1000,
    seed: int = 0,
    threads: int = 1,
):
    """Synthesize ``n_events`` heralded traces and an acquisition manifest.

    The local-oscillator phase follows a linear ramp over [0, pi) repeated
    every ``ramp_period`` events, or is drawn uniformly per event when
    ``phase_schedule="uniform"``.  Deterministic in (seed, config); events
    are independent streams, so any thread count gives identical output.
    """
    if n_events < 0:
        raise ValueError("n_events must be nonnegative")
    if phase_schedule not in ("ramp", "uniform"):
        raise ValueError(f"unknown phase schedule {phase_schedule!r}")
    if phase_schedule == "ramp" and ramp_period < 1:
        raise ValueError("ramp_period must be at least 1")

    diagonal = rho.is_diagonal()
    shared_sampler = QuadratureSampler(rho, None) if diagonal else None
    # phase-resolved samplers are only worth caching on the periodic ramp;
    # uniform phases would grow the cache without ever hitting it
    cache_phases = phase_schedule == "ramp"
    sampler_cache: dict[float, QuadratureSampler] = {}

    thetas = np.empty(n_events)
    if phase_schedule == "ramp":
        thetas[:] = (np.arange(n_events) % ramp_period) * (np.pi / ramp_period)

    out = np.empty((n_events, mode.n_samples), dtype=np.float32)
    herald_ids = np.arange(n_events, dtype=np.uint64)

    def fill(lo, hi):
        for i in range(lo, hi):
            rng = _event_rng(seed, i)
            if phase_schedule == "uniform":
                thetas[i] = rng.uniform(0.0, np.pi)
            if shared_sampler is not None:
                sampler = shared_sampler
            elif cache_phases:
                key = round(float(thetas[i]), 12)
                if key not in sampler_cache:
                    sampler_cache[key] = QuadratureSampler(rho, float(thetas[i]))
                sampler = sampler_cache[key]
            else:
                sampler = QuadratureSampler(rho, float(thetas[i]))
            x_sig = float(sampler.ppf(rng.random()))
            out[i] = _synthesize_samples(x_sig, mode, noise, rng)

    if threads > 1 and n_events > 0:
        chunk = math.ceil(n_events / threads)
        bounds = [(lo, min(lo + chunk, n_events)) for lo in range(0, n_events, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: fill(*b), bounds))
    else:
        fill(0, n_events)

    manifest = {
        "format": "HTRC",
        "version": 1,
        "seed": int(seed),
        "n_events": int(n_events),
        "n_samples": int(mode.n_samples),
        "dt_s": float(mode.dt),
        "mode_gamma_hz": float(mode.gamma),
        "electronic_ratio": float(noise.electronic_ratio),
        "phase_schedule": phase_schedule,
        "ramp_period": int(ramp_period),
        "source_state": rho.to_json(),
    }
    traces = TraceSet(herald_ids=herald_ids, thetas=thetas, samples=out, dt=mode.dt)
    return traces, manifest
