"""Figure rendering for the report paths.  Every plot mirrors a delimited
artifact written next to it (CSV or JSON), so scripts never need to parse
images; the PNGs exist for humans skimming a run directory.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fock import DensityMatrix, WignerGrid, quadrature_pdf

_SAVE_OPTS = {"dpi": 150, "bbox_inches": "tight"}


def quadrature_histogram(path, x_values, rho: DensityMatrix | None = None) -> None:
    """Histogram of the measured quadratures with the reconstructed
    phase-averaged density, plus ideal single-photon and vacuum curves."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.hist(x_values, bins=80, density=True, color="0.8", edgecolor="0.6", label="measured")
    grid = np.linspace(np.min(x_values), np.max(x_values), 400)
    if rho is not None:
        ax.plot(grid, quadrature_pdf(rho, 0.0, grid), "k-", lw=1.5, label="reconstruction")
    ax.plot(
        grid,
        2 * grid**2 * np.exp(-(grid**2)) / np.sqrt(np.pi),
        "b-",
        lw=1.0,
        label="ideal one photon",
    )
    ax.plot(grid, np.exp(-(grid**2)) / np.sqrt(np.pi), "-", color="0.4", lw=1.0, label="vacuum")
    ax.set_xlabel("quadrature x")
    ax.set_ylabel("probability density")
    ax.legend(frameon=False, fontsize=8)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def diagonal_bars(path, diag, corrected=None, errors=None) -> None:
    """Photon-number populations, optionally next to the loss-corrected ones."""
    diag = np.asarray(diag)
    n = np.arange(diag.size)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    width = 0.38 if corrected is not None else 0.7
    ax.bar(n - (width / 2 if corrected is not None else 0), diag, width=width,
           yerr=errors, capsize=2, color="tab:blue", label="measured")
    if corrected is not None:
        ax.bar(n + width / 2, np.asarray(corrected), width=width,
               color="tab:orange", label="loss corrected")
        ax.legend(frameon=False, fontsize=8)
    ax.set_xlabel("photon number n")
    ax.set_ylabel(r"$\rho_{nn}$")
    ax.set_xticks(n)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def wigner_map(path, grid: WignerGrid) -> None:
    """Color map of W(x, p) with the x cross-section through the origin."""
    fig, (ax, axc) = plt.subplots(
        1, 2, figsize=(8.0, 3.4), gridspec_kw={"width_ratios": [1.2, 1.0]}
    )
    vmax = np.max(np.abs(grid.values))
    mesh = ax.pcolormesh(
        grid.x_axis, grid.p_axis, grid.values.T, cmap="RdBu_r", vmin=-vmax, vmax=vmax,
        shading="auto",
    )
    fig.colorbar(mesh, ax=ax, label="W(x, p)")
    ax.set_xlabel("x")
    ax.set_ylabel("p")
    j = int(np.argmin(np.abs(grid.p_axis)))
    axc.plot(grid.x_axis, grid.values[:, j], "k-")
    axc.axhline(0.0, color="0.7", lw=0.8)
    axc.set_xlabel("x")
    axc.set_ylabel("W(x, 0)")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def gamma_scan_curve(path, gammas, rho11, wigner_origin, gamma_star) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ghz = np.asarray(gammas) / 1e6
    ax.plot(ghz, rho11, "o-", color="tab:blue")
    ax.set_xlabel("filter bandwidth (MHz)")
    ax.set_ylabel(r"$\rho_{11}$", color="tab:blue")
    ax.axvline(gamma_star / 1e6, color="0.6", ls="--", lw=0.8)
    twin = ax.twinx()
    twin.plot(ghz, wigner_origin, "s-", color="tab:red")
    twin.set_ylabel("W(0, 0)", color="tab:red")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def cascade_curve(path, mode_indices, transmissions) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.semilogy(mode_indices, transmissions, "o", ms=3)
    ax.set_xlabel("comb mode index p")
    ax.set_ylabel("relative transmission")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
