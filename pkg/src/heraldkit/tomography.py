"""Maximum-likelihood density-matrix reconstruction from (x, theta) samples.

The estimator is the fixed-point iteration rho <- N[R(rho) rho R(rho)] with
R(rho) = (1/N) sum_j Pi_j / Tr(rho Pi_j) over the homodyne projectors
Pi_j = |x_j, theta_j><x_j, theta_j|.  Each step cannot decrease the
likelihood, and the iteration preserves positivity by construction, so no
regularization is applied.  A fast expectation-maximization path estimates
just the photon-number distribution for phase-randomized data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .extraction import QuadratureData
from .fock import DensityMatrix, _wavefunction_table, projector_amplitudes

RECOMMENDED_RESAMPLES = 20


class BootstrapWarning(UserWarning):
    """Bootstrap was run with too few resamples for a stable error estimate."""


@dataclass(frozen=True)
class TomographySettings:
    """Knobs for the reconstruction.

    ``binning=None`` gives every sample its own projector (the default; fine
    up to ~1e5 samples).  ``binning=(n_x, n_theta)`` pools samples on a grid
    of that many quadrature and phase bins, which makes million-sample runs
    and bootstrap loops cheap at negligible bias.
    """

    n_max: int = 10
    max_iters: int = 2000
    loglik_rel_tol: float = 1e-10
    binning: tuple[int, int] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.loglik_rel_tol <= 0:
            raise ValueError("loglik_rel_tol must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")


@dataclass(frozen=True)
class ReconstructionResult:
    rho: DensityMatrix
    loglik_history: np.ndarray
    iterations_used: int
    converged: bool
    diag_errors: np.ndarray | None = None

    def with_errors(self, errors) -> "ReconstructionResult":
        return replace(self, diag_errors=np.asarray(errors, dtype=float))


@dataclass(frozen=True)
class DiagonalResult:
    probs: np.ndarray
    loglik_history: np.ndarray
    iterations_used: int
    converged: bool


def _as_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(samples, QuadratureData):
        return samples.x, samples.theta
    x, theta = samples
    return np.asarray(x, dtype=float), np.asarray(theta, dtype=float)


def _projector_table(samples, settings):
    """Amplitude matrix and weights, either per sample or pooled on bins."""
    x, theta = _as_arrays(samples)
    if x.size == 0:
        raise ValueError("no quadrature samples to reconstruct from")
    if settings.binning is None:
        amps = projector_amplitudes(settings.n_max, x, theta)
        return amps, np.ones(x.size)
    n_x, n_theta = settings.binning
    # fold phases into [0, pi) using |x, theta+pi> = |-x, theta>
    half_turns = np.floor(theta / np.pi)
    theta = theta - half_turns * np.pi
    x = np.where(half_turns.astype(int) % 2 == 0, x, -x)
    x_edges = np.linspace(x.min() - 1e-9, x.max() + 1e-9, n_x + 1)
    t_edges = np.linspace(0.0, np.pi, n_theta + 1)
    counts, _, _ = np.histogram2d(x, theta, bins=(x_edges, t_edges))
    x_mid = 0.5 * (x_edges[:-1] + x_edges[1:])
    t_mid = 0.5 * (t_edges[:-1] + t_edges[1:])
    gx, gt = np.meshgrid(x_mid, t_mid, indexing="ij")
    occupied = counts.ravel() > 0
    amps = projector_amplitudes(settings.n_max, gx.ravel()[occupied], gt.ravel()[occupied])
    return amps, counts.ravel()[occupied]


def _probabilities(rho_entries, amps):
    return np.einsum("jm,mn,jn->j", amps.conj(), rho_entries, amps).real


def response_operator(rho: DensityMatrix, samples, settings: TomographySettings):
    """R(rho) = (1/N) sum_j w_j Pi_j / Tr(rho Pi_j); at the likelihood maximum
    R(rho) rho = rho, which makes this the convergence diagnostic."""
    amps, weights = _projector_table(samples, settings)
    return _response_from_table(rho.entries, amps, weights)[0]


def _response_from_table(rho_entries, amps, weights):
    p = _probabilities(rho_entries, amps)
    if np.any(p <= 0.0) or not np.all(np.isfinite(p)):
        bad = int(np.argmin(p))
        raise FloatingPointError(
            f"projector probability underflowed for sample index {bad} (p={p[bad]!r})"
        )
    # R_mn = sum_j w_j A_jm conj(A_jn) / p_j, normalized by the sample count
    scaled = amps * (weights / p)[:, None]
    r = scaled.T @ amps.conj() / weights.sum()
    loglik = float(np.dot(weights, np.log(p)))
    return r, loglik


def maxlik_reconstruct(samples, settings: TomographySettings | None = None) -> ReconstructionResult:
    """Iterate the likelihood fixed point from the maximally mixed state.

    Stops when the relative log-likelihood gain drops below
    ``loglik_rel_tol`` (converged) or after ``max_iters`` steps.  The
    returned history is nondecreasing to within numerical noise.
    """
    settings = settings or TomographySettings()
    amps, weights = _projector_table(samples, settings)
    d = settings.n_max + 1
    rho = np.eye(d, dtype=complex) / d
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, settings.max_iters + 1):
        r, loglik = _response_from_table(rho, amps, weights)
        rho = r @ rho @ r
        rho /= np.trace(rho).real
        rho = 0.5 * (rho + rho.conj().T)
        history.append(loglik)
        if len(history) > 1:
            prev = history[-2]
            if abs(loglik - prev) < settings.loglik_rel_tol * abs(loglik):
                converged = True
                break
    return ReconstructionResult(
        rho=DensityMatrix(rho),
        loglik_history=np.asarray(history),
        iterations_used=iterations,
        converged=converged,
    )


def loglikelihood(rho: DensityMatrix, samples) -> float:
    """Sum of log Tr(rho Pi_j) over the samples, via the projector amplitudes."""
    x, theta = _as_arrays(samples)
    if x.size == 0:
        raise ValueError("no quadrature samples")
    amps = projector_amplitudes(rho.n_max, x, theta)
    p = _probabilities(rho.entries, amps)
    if np.any(p <= 0.0):
        bad = int(np.argmin(p))
        raise FloatingPointError(f"zero probability at sample index {bad}")
    return float(np.sum(np.log(p)))


def reconstruct_diagonal(samples, settings: TomographySettings | None = None) -> DiagonalResult:
    """Expectation-maximization for the photon-number distribution alone.

    Valid for phase-randomized acquisition, where p(x) = sum_n p_n psi_n(x)^2
    carries all the information about the diagonal; cross-checks the full
    reconstruction at a fraction of the cost.
    """
    settings = settings or TomographySettings()
    x, _ = _as_arrays(samples)
    if x.size == 0:
        raise ValueError("no quadrature samples to reconstruct from")
    kernels = _wavefunction_table(settings.n_max, x) ** 2  # (d, N)
    d = settings.n_max + 1
    probs = np.full(d, 1.0 / d)
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, settings.max_iters + 1):
        mix = probs @ kernels
        history.append(float(np.sum(np.log(mix))))
        probs = probs * (kernels @ (1.0 / mix)) / x.size
        probs /= probs.sum()  # guards rounding drift; EM preserves the sum
        if len(history) > 1 and abs(history[-1] - history[-2]) < settings.loglik_rel_tol * abs(
            history[-1]
        ):
            converged = True
            break
    return DiagonalResult(
        probs=probs,
        loglik_history=np.asarray(history),
        iterations_used=iterations,
        converged=converged,
    )


def bootstrap_errors(samples, settings: TomographySettings, n_resamples: int) -> np.ndarray:
    """Nonparametric bootstrap of the diagonal: resample the records with
    replacement, redo the reconstruction, report the per-n standard
    deviation.  Deterministic for a fixed ``settings.seed``."""
    if n_resamples < 1:
        raise ValueError("n_resamples must be at least 1")
    if n_resamples == 1:
        warnings.warn(
            "a single resample carries no variance information; returning zeros",
            BootstrapWarning,
        )
        return np.zeros(settings.n_max + 1)
    if n_resamples < RECOMMENDED_RESAMPLES:
        warnings.warn(
            f"{n_resamples} resamples is below the recommended "
            f"{RECOMMENDED_RESAMPLES}; error bars will be noisy",
            BootstrapWarning,
        )
    x, theta = _as_arrays(samples)
    rng = np.random.default_rng(settings.seed)
    diags = np.empty((n_resamples, settings.n_max + 1))
    for i in range(n_resamples):
        idx = rng.integers(0, x.size, size=x.size)
        result = maxlik_reconstruct(QuadratureData(x=x[idx], theta=theta[idx]), settings)
        diags[i] = result.rho.diagonal()
    return diags.std(axis=0, ddof=1)
