"""Physical model of the source and apparatus: below-threshold pair emission,
heralding through an imperfect conditioning path, escape-efficiency and
detection budgets, the spectral filter cascade, and rate arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import DensityMatrix, apply_loss


def _check_fraction(name, value, closed_left=True):
    lo_ok = value >= 0.0 if closed_left else value > 0.0
    if not (lo_ok and value <= 1.0):
        raise ValueError(f"{name} must be a fraction in [0, 1], got {value}")


@dataclass(frozen=True)
class OpoParams:
    """Cavity parameters: output-coupler transmission, intracavity loss,
    bandwidth and free spectral range in Hz, and pump power as a fraction of
    the oscillation threshold (must stay below 1)."""

    t_out: float
    l_intra: float
    gamma: float
    delta_fsr: float
    pump_ratio: float

    def __post_init__(self):
        if not 0.0 < self.t_out < 1.0:
            raise ValueError(f"t_out must be in (0, 1), got {self.t_out}")
        if not 0.0 <= self.l_intra < 1.0:
            raise ValueError(f"l_intra must be in [0, 1), got {self.l_intra}")
        if self.gamma <= 0 or self.delta_fsr <= 0:
            raise ValueError("gamma and delta_fsr must be positive")
        if not 0.0 <= self.pump_ratio < 1.0:
            raise ValueError(
                f"pump_ratio must be below threshold (< 1), got {self.pump_ratio}"
            )


@dataclass(frozen=True)
class EfficiencyBudget:
    """Homodyne detection-chain efficiencies.  ``visibility`` is the field
    overlap; it enters the budget squared."""

    eta_noise: float
    eta_phot: float
    eta_prop: float
    visibility: float

    def __post_init__(self):
        for name in ("eta_noise", "eta_phot", "eta_prop", "visibility"):
            _check_fraction(name, getattr(self, name), closed_left=False)


@dataclass(frozen=True)
class ConditioningPath:
    """Heralding arm: single-photon detector efficiency, optical transmission
    of switch plus filters, dark-count rate and observed herald rate (Hz)."""

    eta_det: float
    transmission: float
    dark_rate: float = 0.0
    herald_rate: float = 0.0

    def __post_init__(self):
        _check_fraction("eta_det", self.eta_det)
        _check_fraction("transmission", self.transmission)
        if self.dark_rate < 0 or self.herald_rate < 0:
            raise ValueError("rates must be nonnegative")

    @property
    def efficiency(self) -> float:
        return self.eta_det * self.transmission


@dataclass(frozen=True)
class FilterSpec:
    """Two-stage spectral filter: a broadband interferential filter (FWHM in
    Hz, modeled as Lorentzian) followed by a Fabry-Perot cavity."""

    if_bandwidth: float
    fp_fsr: float
    fp_bandwidth: float

    def __post_init__(self):
        if self.if_bandwidth <= 0:
            raise ValueError("if_bandwidth must be positive")
        if not self.fp_fsr > self.fp_bandwidth > 0:
            raise ValueError("need fp_fsr > fp_bandwidth > 0")

    @property
    def finesse(self) -> float:
        return self.fp_fsr / self.fp_bandwidth


def escape_efficiency(t_out: float, l_intra: float) -> float:
    """Fraction of intracavity photons leaving through the output coupler,
    T / (T + L)."""
    if t_out <= 0 or l_intra < 0:
        raise ValueError("need t_out > 0 and l_intra >= 0")
    return t_out / (t_out + l_intra)


def total_detection_efficiency(budget: EfficiencyBudget) -> float:
    """Product eta_noise * eta_phot * visibility**2 * eta_prop."""
    return budget.eta_noise * budget.eta_phot * budget.visibility**2 * budget.eta_prop


def expected_vacuum(eta_tot: float, eta_opo: float) -> float:
    """Vacuum admixture 1 - eta_tot * eta_opo predicted by the efficiency
    budget (multiphoton terms neglected)."""
    _check_fraction("eta_tot", eta_tot)
    _check_fraction("eta_opo", eta_opo)
    return 1.0 - eta_tot * eta_opo


def _pair_weights(pump_ratio, eta_c, n_max, amplitude_exponent=0.5):
    """Unnormalized heralded photon-number weights lambda^(2n) (1-(1-eta_c)^n).

    lambda = pump_ratio**amplitude_exponent maps pump power to the pair
    amplitude; the default square root reproduces the observed few-percent
    two-photon contamination.  The n-dependent bracket is the probability
    that at least one of n idler photons fires the heralding detector.
    """
    lam2 = pump_ratio ** (2 * amplitude_exponent)
    n = np.arange(n_max + 1)
    return lam2**n * (1.0 - (1.0 - eta_c) ** n)


def heralded_state(
    params: OpoParams,
    path: ConditioningPath,
    eta_opo: float,
    eta_tot: float,
    n_max: int = 10,
    amplitude_exponent: float = 0.5,
) -> DensityMatrix:
    """Photon-number-diagonal state prepared by a herald, after all losses.

    The conditional diagonal is mixed with the unconditional (thermal-like)
    state in proportion to the dark-to-herald rate ratio, then sent through
    the loss channel with transmission eta_opo * eta_tot.  Off-diagonals are
    exactly zero: the heralding detector is phase-insensitive.
    """
    _check_fraction("eta_opo", eta_opo)
    _check_fraction("eta_tot", eta_tot)
    if not 0.0 <= params.pump_ratio < 1.0:
        raise ValueError("pump_ratio must be below threshold")

    w = _pair_weights(params.pump_ratio, path.efficiency, n_max, amplitude_exponent)
    if w.sum() <= 0.0:
        raise ValueError(
            "conditioning path never fires (pump_ratio or efficiency is zero)"
        )
    conditional = w / w.sum()

    if path.dark_rate > 0:
        lam2 = params.pump_ratio ** (2 * amplitude_exponent)
        thermal = lam2 ** np.arange(n_max + 1)
        thermal /= thermal.sum()
        if path.herald_rate > 0:
            ratio = path.dark_rate / path.herald_rate
            w_dark = ratio / (1.0 + ratio)
        else:
            w_dark = 1.0
        conditional = (1.0 - w_dark) * conditional + w_dark * thermal

    return apply_loss(DensityMatrix.from_diagonal(conditional), eta_opo * eta_tot)


def two_photon_fraction(
    pump_ratio: float, eta_c: float, n_max: int = 10, amplitude_exponent: float = 0.5
) -> float:
    """Two-photon weight of the heralded diagonal before any detection loss,
    rho_22 / sum_{n>=1} rho_nn; roughly 2 * pump_ratio for weak heralding."""
    if pump_ratio == 0.0:
        return 0.0
    w = _pair_weights(pump_ratio, eta_c, n_max, amplitude_exponent)
    return float(w[2] / w[1:].sum())


def fp_transmission(spec: FilterSpec, detuning: float) -> float:
    """Airy transmission of the Fabry-Perot stage at the given detuning from
    resonance: 1 / (1 + (2F/pi)^2 sin^2(pi delta / FSR))."""
    coeff = (2.0 * spec.finesse / np.pi) ** 2
    s = np.sin(np.pi * detuning / spec.fp_fsr)
    return float(1.0 / (1.0 + coeff * s * s))


def _if_transmission(spec: FilterSpec, detuning):
    # Lorentzian line of the interferential stage; true shape is unspecified,
    # which is why cascade figures carry an order-of-magnitude band
    return 1.0 / (1.0 + (2.0 * np.asarray(detuning) / spec.if_bandwidth) ** 2)


def cascade_mode_transmissions(spec: FilterSpec, params: OpoParams, p_max: int):
    """Combined filter transmission for the emission-comb modes p = 1..p_max
    at detunings p * delta_fsr, relative to the resonant p = 0 mode."""
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    p = np.arange(1, p_max + 1)
    det = p * params.delta_fsr
    coeff = (2.0 * spec.finesse / np.pi) ** 2
    airy = 1.0 / (1.0 + coeff * np.sin(np.pi * det / spec.fp_fsr) ** 2)
    return p, _if_transmission(spec, det) * airy


def cascade_rejection(spec: FilterSpec, params: OpoParams, p_max: int = 100) -> float:
    """Fraction of heralds caused by unwanted comb modes p = +-1..+-p_max.

    Modes are weighted equally (the far-below-threshold comb is flat across
    the filter span) and the sum is normalized to the p = 0 transmission.
    """
    _, t = cascade_mode_transmissions(spec, params, p_max)
    return float(2.0 * t.sum())


@dataclass(frozen=True)
class HeraldingStats:
    brightness_per_mhz: float
    corrected_rate: float


def heralding_stats(path: ConditioningPath, gamma: float) -> HeraldingStats:
    """Source brightness (heralds per second per MHz of bandwidth) and the
    herald rate corrected for the conditioning-path losses."""
    if gamma <= 0:
        raise ValueError("bandwidth must be positive")
    brightness = path.herald_rate / (gamma / 1e6)
    if path.herald_rate == 0.0:
        corrected = 0.0
    else:
        if path.efficiency == 0.0:
            raise ValueError("conditioning path efficiency is zero")
        corrected = path.herald_rate / path.efficiency
    return HeraldingStats(brightness_per_mhz=brightness, corrected_rate=corrected)
