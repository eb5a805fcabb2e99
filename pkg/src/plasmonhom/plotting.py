"""Figure rendering for CLI reports. Uses the object API so no GUI backend is touched."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

BLACK = "#000000"
RED = "#d62728"
GRAY = "#7f7f7f"

_SAVE = dict(dpi=150, metadata={"Software": None})


def _finish(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    return path


def plot_dip(rows, path, fit=None, singles=None, title="HOM dip"):
    """Corrected coincidence rate vs delay, optional fit curve and singles inset."""
    d = np.array([r["delay_ps"] for r in rows])
    y = np.array([r["rate_cph"] for r in rows])
    s = np.array([r["sigma_cph"] for r in rows])
    fig = Figure(figsize=(5.0, 3.8))
    ax = fig.add_subplot()
    ax.errorbar(d, y, yerr=s, fmt="s", ms=4, color=BLACK, capsize=2, label="corrected")
    if fit is not None:
        dd = np.linspace(d.min(), d.max(), 600)
        ax.plot(dd, fit.model(dd * 1e-12), color=RED, lw=1.2,
                label=f"fit, V = {fit.visibility:.2f} ± {fit.sigma_visibility:.2f}")
        ax.legend(frameon=False, fontsize=8, loc="lower right")
    ax.set_xlabel("delay Δt (ps)")
    ax.set_ylabel("coincidences (cph)")
    ax.set_ylim(0, 1.1 * float(np.max(y + s)) if y.size and np.max(y + s) > 0 else 1.0)
    ax.set_title(title)
    if singles is not None:
        inset = ax.inset_axes([0.1, 0.1, 0.27, 0.27])
        inset.plot(d, np.asarray(singles[0]) / 1e6, "o", ms=2.5, color=RED)
        inset.plot(d, np.asarray(singles[1]) / 1e6, "o", ms=2.5, mfc="none", color=BLACK)
        inset.tick_params(labelsize=6)
        inset.ticklabel_format(axis="y", useOffset=False)
        inset.set_title("singles (1e6 cph)", fontsize=6)
    return _finish(fig, path)


def plot_theory(rows, path, title="analytic coincidence rate"):
    d = np.array([r["delay_ps"] for r in rows])
    fig = Figure(figsize=(5.0, 3.5))
    ax = fig.add_subplot()
    ax.plot(d, [r["rate_cph"] for r in rows], "-o", ms=3, color=RED, label="true")
    ax.plot(d, [r["raw_cph"] for r in rows], "--", color=GRAY, label="with accidentals")
    ax.set_xlabel("delay Δt (ps)")
    ax.set_ylabel("coincidences (cph)")
    ax.set_ylim(bottom=0)
    ax.legend(frameon=False, fontsize=8)
    ax.set_title(title)
    return _finish(fig, path)


def plot_characterization(path, bragg=None, query=None, propagation=None, fit=None):
    """Bragg T/R vs wavelength and/or out-coupled intensity vs guide length."""
    panels = [p for p in (bragg, propagation) if p is not None]
    fig = Figure(figsize=(4.2 * max(len(panels), 1), 3.4))
    axes = [fig.add_subplot(1, max(len(panels), 1), i + 1) for i in range(max(len(panels), 1))]
    k = 0
    if bragg is not None:
        ax = axes[k]
        k += 1
        ax.plot(bragg.wavelengths, bragg.transmissions, "o-", ms=3, color=BLACK, label="T")
        ax.plot(bragg.wavelengths, 1 - bragg.transmissions, "s-", ms=3, color=RED, label="R")
        if query is not None:
            ax.axvline(query, color=GRAY, lw=0.8, ls=":")
        ax.set_ylim(0, 1)
        ax.set_xlabel("wavelength (nm)")
        ax.set_ylabel("relative coefficient")
        ax.legend(frameon=False, fontsize=8)
    if propagation is not None:
        ax = axes[k]
        x, y = np.asarray(propagation, dtype=float).T
        ax.semilogy(x, y, "o", color=BLACK)
        if fit is not None:
            length, amp, _ = fit
            xx = np.linspace(0, x.max() * 1.05, 200)
            ax.semilogy(xx, amp * np.exp(-xx / length), color=RED, label=f"l = {length:.2f} µm")
            ax.legend(frameon=False, fontsize=8)
        ax.set_xlabel("waveguide length (µm)")
        ax.set_ylabel("intensity (a.u.)")
    return _finish(fig, path)
