"""Truncated Fock-basis state algebra: density matrices, quadrature statistics,
Wigner functions, fidelity, and photon-loss channels with their inverses.

Convention: the vacuum quadrature variance is 1/2 ([x, p] = i), so the
ground-state wavefunction is psi_0(x) = pi**-0.25 * exp(-x**2/2) and Fock
state |n> has <x^2> = n + 1/2.  Data calibrated to vacuum variance 1 must be
rescaled by 1/sqrt(2) before it enters this module.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import genlaguerre

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


class LossInversionWarning(UserWarning):
    """Loss inversion produced a matrix that is not positive semidefinite."""


class DensityMatrix:
    """Density matrix on the truncated Fock basis {|0>, ..., |n_max>}.

    Entries are validated at construction (Hermitian to 1e-12, unit trace to
    1e-10, smallest eigenvalue >= -1e-9) and stored read-only, so instances
    are safe to share between threads.  ``check_psd=False`` skips only the
    positivity check; ``invert_loss`` uses it to return non-physical raw
    inverses intact rather than clipping them.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries, check_psd: bool = True):
        m = np.array(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        m = 0.5 * (m + m.conj().T)
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"trace is {np.trace(m).real!r}, not 1 within 1e-10")
        if check_psd:
            lam_min = np.linalg.eigvalsh(m)[0]
            if lam_min < -PSD_TOL:
                raise ValueError(f"smallest eigenvalue {lam_min:.3e} below -1e-9")
        m.flags.writeable = False
        self._entries = m

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n_max(self) -> int:
        return self._entries.shape[0] - 1

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def diagonal(self) -> np.ndarray:
        return self._entries.diagonal().real.copy()

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue; negative values measure the PSD violation."""
        return float(np.linalg.eigvalsh(self._entries)[0])

    def is_diagonal(self, tol: float = 1e-12) -> bool:
        off = self._entries - np.diag(self._entries.diagonal())
        return bool(np.max(np.abs(off)) <= tol)

    def __repr__(self):
        d = ", ".join(f"{p:.4f}" for p in self.diagonal()[:4])
        return f"DensityMatrix(n_max={self.n_max}, diag=[{d}, ...])"

    @classmethod
    def vacuum(cls, n_max: int) -> "DensityMatrix":
        return cls.fock(0, n_max)

    @classmethod
    def fock(cls, n: int, n_max: int) -> "DensityMatrix":
        if not 0 <= n <= n_max:
            raise ValueError(f"need 0 <= n <= n_max, got n={n}, n_max={n_max}")
        m = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        m[n, n] = 1.0
        return cls(m)

    @classmethod
    def from_diagonal(cls, probs) -> "DensityMatrix":
        p = np.asarray(probs, dtype=float)
        return cls(np.diag(p.astype(complex)))

    def to_json(self) -> dict:
        return {
            "n_max": self.n_max,
            "re": self._entries.real.tolist(),
            "im": self._entries.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict, check_psd: bool = True) -> "DensityMatrix":
        m = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        if m.shape[0] != obj["n_max"] + 1:
            raise ValueError("n_max field inconsistent with matrix shape")
        return cls(m, check_psd=check_psd)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path, check_psd: bool = True) -> "DensityMatrix":
        with open(path) as fh:
            return cls.from_json(json.load(fh), check_psd=check_psd)


def fock_wavefunction(n: int, x):
    """Position wavefunction psi_n(x) of Fock state |n>.

    Evaluated by the stable two-term recurrence
    psi_n = sqrt(2/n) x psi_{n-1} - sqrt((n-1)/n) psi_{n-2},
    which avoids the factorial overflow of the explicit Hermite form.
    """
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("quadrature values must be finite")
    return _wavefunction_table(n, x)[n]


def _wavefunction_table(n_max, x):
    """psi_n(x) for all n = 0..n_max, shape (n_max+1,) + x.shape."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape, dtype=float)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(2, n_max + 1):
        out[k] = np.sqrt(2.0 / k) * x * out[k - 1] - np.sqrt((k - 1) / k) * out[k - 2]
    return out


def projector_amplitudes(n_max, x, theta):
    """Amplitudes <n|x, theta> = exp(i n theta) psi_n(x), shape (len(x), n_max+1).

    These span the homodyne projector |x, theta><x, theta| used both by the
    quadrature pdf and by the likelihood machinery in the tomography module.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), x.shape)
    psi = _wavefunction_table(n_max, x)
    phases = np.exp(1j * np.outer(theta, np.arange(n_max + 1)))
    return phases * psi.T


def quadrature_pdf(rho: DensityMatrix, theta, x):
    """Homodyne probability density p(x | theta) = <x,theta| rho |x,theta>."""
    if not isinstance(rho, DensityMatrix):
        raise TypeError("rho must be a DensityMatrix")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    a = projector_amplitudes(rho.n_max, x, theta)
    p = np.einsum("jm,mn,jn->j", a.conj(), rho.entries, a).real
    return float(p[0]) if scalar else p


def wigner(rho: DensityMatrix, x, p):
    """Wigner function W(x, p) via the Fock-basis Laguerre kernel.

    Normalization matches the vacuum-variance-1/2 convention:
    W_|n>(x, p) = ((-1)^n / pi) exp(-(x^2+p^2)) L_n(2(x^2+p^2)), so the
    integral of W over the (x, p) plane is 1 and |W| <= 1/pi for any state.
    """
    if not isinstance(rho, DensityMatrix):
        raise TypeError("rho must be a DensityMatrix")
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    scalar = x.ndim == 0 and p.ndim == 0
    x, p = np.atleast_1d(x), np.atleast_1d(p)
    r2 = x * x + p * p
    env = np.exp(-r2) / np.pi
    m_entries = rho.entries
    d = rho.dim
    w = np.zeros(np.broadcast(x, p).shape, dtype=complex)
    lnfact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, d)))))
    for m in range(d):
        w = w + m_entries[m, m].real * (-1.0) ** m * genlaguerre(m, 0)(2 * r2) * env
        for n in range(m):
            # kernel for |m><n| with m > n; the |n><m| partner is its conjugate
            coeff = np.exp(0.5 * ((m - n) * np.log(2.0) + lnfact[n] - lnfact[m]))
            kern = (
                (-1.0) ** n
                * coeff
                * (x - 1j * p) ** (m - n)
                * genlaguerre(n, m - n)(2 * r2)
                * env
            )
            w = w + m_entries[m, n] * kern + m_entries[n, m] * np.conj(kern)
    w = w.real
    return float(w[0]) if scalar else w


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a rectangular phase-space grid.

    ``values[i, j]`` is W(x_axis[i], p_axis[j]); units are inverse
    phase-space area, so ``integral()`` approaches 1 on a wide grid.
    """

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    def cell_area(self) -> float:
        return float((self.x_axis[1] - self.x_axis[0]) * (self.p_axis[1] - self.p_axis[0]))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area())

    def to_csv(self, path) -> None:
        """CSV layout: header row of p values, first column of x values."""
        with open(path, "w", newline="") as fh:
            fh.write("x\\p," + ",".join(f"{p:.10g}" for p in self.p_axis) + "\n")
            for xi, row in zip(self.x_axis, self.values):
                fh.write(f"{xi:.10g}," + ",".join(f"{v:.10g}" for v in row) + "\n")


def wigner_grid(rho: DensityMatrix, x_range, p_range, resolution: int) -> WignerGrid:
    """Evaluate the Wigner function on a regular grid with ``resolution``
    points per axis."""
    x_lo, x_hi = x_range
    p_lo, p_hi = p_range
    if not (x_hi > x_lo and p_hi > p_lo):
        raise ValueError("empty phase-space range")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    xs = np.linspace(x_lo, x_hi, resolution)
    ps = np.linspace(p_lo, p_hi, resolution)
    gx, gp = np.meshgrid(xs, ps, indexing="ij")
    return WignerGrid(xs, ps, wigner(rho, gx, gp))


def _loss_weights(dim, eta, k):
    """Probability of losing exactly k photons from |n>: C(n,k) eta^(n-k) (1-eta)^k."""
    n = np.arange(k, dim)
    combs = np.array([comb(int(v), k) for v in n], dtype=float)
    return combs * eta ** (n - k) * (1.0 - eta) ** k


def apply_loss(rho: DensityMatrix, eta: float) -> DensityMatrix:
    """Bernoulli photon-loss channel with transmission eta.

    On the diagonal this is the binomial map
    rho'_mm = sum_{n>=m} C(n,m) eta^m (1-eta)^(n-m) rho_nn; off-diagonal
    elements pick up the standard sqrt-weighted attenuation.  Exact on the
    truncated basis because loss only moves weight downward.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission must be in [0, 1], got {eta}")
    if eta == 1.0:
        return rho
    d = rho.dim
    out = np.zeros((d, d), dtype=complex)
    for k in range(d):
        f = _loss_weights(d, eta, k)
        # sqrt of the weight product keeps diagonal terms exact (sqrt(f*f) == f)
        out[: d - k, : d - k] += np.sqrt(np.outer(f, f)) * rho.entries[k:, k:]
    return DensityMatrix(out)


def invert_loss(rho: DensityMatrix, eta: float) -> DensityMatrix:
    """Algebraic inverse of ``apply_loss`` at fixed truncation.

    Solves the triangular linear system along each diagonal of the matrix.
    Noisy inputs can produce a non-positive result; it is returned raw with a
    ``LossInversionWarning`` carrying the PSD distance, never clipped, so the
    corrected numbers stay exactly the solution of the linear system.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"transmission must be in (0, 1] to invert, got {eta}")
    if eta == 1.0:
        return rho
    d = rho.dim
    out = np.zeros((d, d), dtype=complex)
    for off in range(d):
        # measured_diag = M @ raw_diag with M[i, i+k] from the loss Kraus map
        n = d - off
        m_mat = np.zeros((n, n))
        for k in range(d):
            f = _loss_weights(d, eta, k)
            if off + k < d:
                i = np.arange(0, n - k)
                m_mat[i, i + k] = np.sqrt(f[i] * f[i + off])
        raw = solve_triangular(m_mat, np.diag(rho.entries, off), lower=False)
        out += np.diag(raw, off)
        if off > 0:
            out += np.diag(raw.conj(), -off)
    result = DensityMatrix(out, check_psd=False)
    lam_min = result.min_eigenvalue()
    if lam_min < -PSD_TOL:
        warnings.warn(
            f"loss inversion at eta={eta} is not positive semidefinite "
            f"(smallest eigenvalue {lam_min:.3e}); returning the raw inverse",
            LossInversionWarning,
        )
    return result


def fidelity_with_fock(rho: DensityMatrix, n: int) -> float:
    """Fidelity with the pure Fock state |n>, i.e. <n| rho |n> = rho_nn."""
    if not 0 <= n <= rho.n_max:
        raise ValueError(f"need 0 <= n <= n_max={rho.n_max}, got {n}")
    return float(rho.entries[n, n].real)


@dataclass(frozen=True)
class QuadratureSample:
    """One homodyne outcome: quadrature value x at local-oscillator phase theta.

    Phases of photon-number-diagonal states are redundant modulo pi;
    ``canonical()`` folds theta into [0, pi) using |x, theta+pi> = |-x, theta>.
    """

    x: float
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.theta)):
            raise ValueError("quadrature sample must be finite")

    def canonical(self) -> "QuadratureSample":
        k = int(np.floor(self.theta / np.pi))
        theta = self.theta - k * np.pi
        x = self.x if k % 2 == 0 else -self.x
        return QuadratureSample(x, theta)
