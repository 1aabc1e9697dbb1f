"""Matplotlib renderings of scenario results.

Every function draws one figure to a file next to the delimited reports
and returns the path.  The Agg backend is forced at import so the CLI can
render headless; figures are closed after saving to keep long runs flat
in memory.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .field import WaveField, to_position


def _position_norms(field: WaveField) -> tuple[np.ndarray, np.ndarray]:
    f = to_position(field)
    return f.grid.z, f.sample_norms()


def toy_fields_figure(chi0: WaveField, chi_t: WaveField, t: float,
                      path) -> str:
    """Initial against transported field magnitudes, jump line at z = 0."""
    fig, axes = plt.subplots(2, 1, figsize=(7.0, 5.0), sharex=True)
    for ax, field, label in ((axes[0], chi0, "initial"),
                             (axes[1], chi_t, f"t = {t:g}")):
        z, norms = _position_norms(field)
        ax.plot(z, norms, lw=1.2, color="tab:blue")
        pos = to_position(field)
        for i in range(pos.components):
            ax.plot(z, np.abs(pos.values[:, i]), lw=0.7, alpha=0.6)
        ax.axvline(0.0, color="k", lw=0.8, ls=":")
        ax.set_ylabel(f"|field| ({label})")
        ax.grid(alpha=0.3)
    axes[1].set_xlabel("z")
    fig.suptitle("single-jump transport")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def reflection_snapshot_figure(solution, t: float, path) -> str:
    """Truncated wave with its input and output read-offs."""
    fig, axes = plt.subplots(2, 1, figsize=(7.0, 5.0))
    z, norms = _position_norms(solution.truncated)
    axes[0].plot(z, norms, lw=1.2, color="tab:blue", label="truncated wave")
    axes[0].axvline(0.0, color="k", lw=0.8, ls=":")
    axes[0].set_xlabel("z")
    axes[0].legend(loc="upper right", fontsize=8)
    axes[0].grid(alpha=0.3)

    zi = solution.truncated.grid.zero_index
    half = z[zi:]
    axes[1].plot(half, solution.input_wave.sample_norms()[zi:], lw=1.1,
                 color="tab:green", label="input branch")
    axes[1].plot(half, solution.output_wave.sample_norms()[zi:], lw=1.1,
                 color="tab:red", label="output branch")
    axes[1].set_xlabel("z (half line)")
    axes[1].legend(loc="upper right", fontsize=8)
    axes[1].grid(alpha=0.3)
    fig.suptitle(f"boundary reflection at t = {t:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def refinement_figure(points: list, residuals: list, path) -> str:
    """Boundary residual under grid doubling with a first-order guide."""
    points = np.asarray(points, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.loglog(points, residuals, "o-", color="tab:blue", label="residual")
    guide = residuals[0] * points[0] / points
    ax.loglog(points, guide, "--", color="gray", lw=0.9, label="first order")
    ax.set_xlabel("grid points")
    ax.set_ylabel("boundary residual")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def sweep_figure(records, path) -> str:
    """Transport-distance integral against the carrier-momentum gap."""
    ok = [r for r in records if r.status == "ok" and r.error_I > 0]
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    if ok:
        vk = [r.varkappa for r in ok]
        ax.loglog(vk, [r.error_I for r in ok], "o-", color="tab:blue",
                  label="error integral")
        ax.loglog(vk, [r.bound for r in ok], "s--", color="tab:orange",
                  label="analytic bound")
        slope = next((r.slope_running for r in reversed(ok)
                      if not math.isnan(r.slope_running)), math.nan)
        if not math.isnan(slope):
            ax.set_title(f"fitted slope {slope:.2f}", fontsize=9)
    else:
        ax.text(0.5, 0.5, "no positive records", ha="center",
                transform=ax.transAxes)
    ax.set_xlabel("carrier momentum above the class cutoff")
    ax.set_ylabel("distance to pure transport (squared)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def jump_histogram_figure(ensemble, density, path) -> str:
    """Sampled jump times against the target density curve."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    upper = float(density.knots[np.nonzero(density.weights)[0][-1]]) \
        + 2.0 * density.grid.dz
    ax.hist(ensemble.times, bins=60, range=(0.0, max(upper, 10 * density.grid.dz)),
            density=True, color="tab:blue", alpha=0.55,
            label=f"{ensemble.count} samples")
    ax.plot(density.knots, density.weights, color="tab:red", lw=1.2,
            label="target density")
    ax.set_xlabel("jump time s")
    ax.set_ylabel("density")
    ax.set_title(f"seed {ensemble.seed}, truncated tail "
                 f"{density.tail_mass:.2e}", fontsize=9)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
