"""Run configuration: built-in defaults matching the reference apparatus,
JSON file loading with section-wise merging, and builders for the parameter
bundles the physics modules consume.

All frequencies are in Hz and all efficiencies are fractions.
"""

from __future__ import annotations

import copy
import json

from .opo import ConditioningPath, EfficiencyBudget, FilterSpec, OpoParams
from .tomography import TomographySettings
from .traces import NoiseModel


class ConfigError(Exception):
    """Configuration file missing, unparseable, or semantically invalid."""


def default_config() -> dict:
    """Reference apparatus values: a 1064 nm cavity source pumped at 1/80 of
    threshold, the measured detection budget, and a 50000-event acquisition."""
    return {
        "seed": 1064,
        "opo": {
            "t_out": 0.10,
            "l_intra": 0.004,
            "gamma_hz": 60e6,
            "delta_fsr_hz": 4.3e9,
            "pump_ratio": 0.0125,
            "pair_amplitude_exponent": 0.5,
        },
        "budget": {
            "eta_noise": 0.96,
            "eta_phot": 0.97,
            "visibility": 0.98,
            "eta_prop": 0.95,
        },
        "conditioning": {
            "eta_det": 0.07,
            "transmission": 0.40,
            "dark_rate_hz": 0.0,
            "herald_rate_hz": 30e3,
        },
        "filters": {
            "if_bandwidth_hz": 132e9,
            "fp_fsr_hz": 330e9,
            "fp_bandwidth_hz": 320e6,
            "comb_modes": 100,
        },
        "acquisition": {
            "n_events": 50000,
            "n_vacuum": 50000,
            "dt_s": 0.2e-9,
            "n_samples": 500,
            "electronic_ratio": 0.01,
            "phase_schedule": "ramp",
            "ramp_period": 1000,
        },
        "extraction": {
            "gamma_hz": 60e6,
            "calibrate": True,
        },
        "tomography": {
            "n_max": 10,
            "max_iters": 2000,
            "loglik_rel_tol": 1e-10,
            "binning": None,
            "bootstrap": 0,
        },
        "reference": {
            "correction_eta": 0.85,
            "rho00_band": [0.16, 0.21],
            "rho11_band": [0.76, 0.81],
            "rho22_band": [0.01, 0.05],
            "corrected_rho11_band": [0.89, 0.93],
            "wigner_origin_max": -0.1,
            "eta_tot_expected": 0.8496,
            "eta_opo_expected": 0.9615,
            "vacuum_expected": 0.184,
            "rejection_quoted": 0.003,
            "brightness_bandwidth_hz": 75e6,
            "brightness_quoted_per_mhz": 400.0,
            "corrected_rate_quoted_hz": 750e3,
        },
    }


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {path + key!r} must be an object")
            out[key] = _merge(base[key], value, path=f"{path}{key}.")
        else:
            out[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, overlaid by the JSON file (if given), overlaid by flag
    overrides.  Unknown keys are rejected so typos fail loudly."""
    cfg = default_config()
    if path is not None:
        try:
            with open(path) as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        cfg = _merge(cfg, file_cfg)
    if overrides:
        cfg = _merge(cfg, overrides)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    """Build every parameter bundle once; the dataclass validators carry the
    real constraints and their messages."""
    try:
        opo_params(cfg)
        efficiency_budget(cfg)
        conditioning_path(cfg)
        filter_spec(cfg)
        noise_model(cfg)
        tomography_settings(cfg)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    acq = cfg["acquisition"]
    if acq["n_events"] < 0 or acq["n_vacuum"] < 0:
        raise ConfigError("event counts must be nonnegative")
    if acq["phase_schedule"] not in ("ramp", "uniform"):
        raise ConfigError(f"unknown phase schedule {acq['phase_schedule']!r}")


def opo_params(cfg: dict) -> OpoParams:
    section = cfg["opo"]
    return OpoParams(
        t_out=section["t_out"],
        l_intra=section["l_intra"],
        gamma=section["gamma_hz"],
        delta_fsr=section["delta_fsr_hz"],
        pump_ratio=section["pump_ratio"],
    )


def efficiency_budget(cfg: dict) -> EfficiencyBudget:
    section = cfg["budget"]
    return EfficiencyBudget(
        eta_noise=section["eta_noise"],
        eta_phot=section["eta_phot"],
        eta_prop=section["eta_prop"],
        visibility=section["visibility"],
    )


def conditioning_path(cfg: dict) -> ConditioningPath:
    section = cfg["conditioning"]
    return ConditioningPath(
        eta_det=section["eta_det"],
        transmission=section["transmission"],
        dark_rate=section["dark_rate_hz"],
        herald_rate=section["herald_rate_hz"],
    )


def filter_spec(cfg: dict) -> FilterSpec:
    section = cfg["filters"]
    return FilterSpec(
        if_bandwidth=section["if_bandwidth_hz"],
        fp_fsr=section["fp_fsr_hz"],
        fp_bandwidth=section["fp_bandwidth_hz"],
    )


def noise_model(cfg: dict) -> NoiseModel:
    return NoiseModel(electronic_ratio=cfg["acquisition"]["electronic_ratio"])


def tomography_settings(cfg: dict, seed: int | None = None) -> TomographySettings:
    section = cfg["tomography"]
    binning = section["binning"]
    if binning is not None:
        binning = (int(binning[0]), int(binning[1]))
    return TomographySettings(
        n_max=section["n_max"],
        max_iters=section["max_iters"],
        loglik_rel_tol=section["loglik_rel_tol"],
        binning=binning,
        seed=cfg["seed"] if seed is None else seed,
    )
