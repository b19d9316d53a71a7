"""Matplotlib renderings of the report CSV contents.

Each function draws one figure from already-computed data and writes it next
to the delimited output.  Rendering never feeds back into the numerics.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_convergence(ledger_rows, path):
    """Iteration history: solution norms and the fixed-point residual."""
    rows = np.asarray(ledger_rows, dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(rows[:, 0], rows[:, 1], "o-", ms=3, label="H1 norm")
    ax1.plot(rows[:, 0], rows[:, 2], "s-", ms=3, label="H^{a/2} norm")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("norm")
    ax1.legend()
    positive = rows[:, 3] > 0
    if positive.any():
        ax2.semilogy(rows[positive, 0], rows[positive, 3], "o-", ms=3, color="crimson")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("fixed-point residual")
    return _finish(fig, path)


def plot_decay_scan(report, path):
    """Log-log boundary terms vs radius, with the truncated energy."""
    radii = np.asarray(report.radii)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for label, vals in (
        ("|I_a|", report.commutator),
        ("|I_b|", report.cubic_flux),
        ("|I_c|", report.pressure_flux),
    ):
        vals = np.abs(np.asarray(vals))
        keep = vals > 0
        if keep.any():
            ax1.loglog(radii[keep], vals[keep], "o-", ms=3, label=label)
    ax1.set_xlabel("cutoff radius R")
    ax1.set_ylabel("boundary term magnitude")
    ax1.legend()
    ax2.semilogx(radii, report.truncated_energy, "o-", ms=3)
    ax2.axhline(report.total_energy, color="gray", ls="--", lw=1)
    ax2.set_xlabel("cutoff radius R")
    ax2.set_ylabel("truncated energy")
    return _finish(fig, path)


def plot_ratio_histograms(records, path):
    """Histogram of checker ratios, one panel per checker name."""
    names = sorted({r.checker for r in records})
    fig, axes = plt.subplots(1, max(len(names), 1), figsize=(4.2 * max(len(names), 1), 3.4))
    if len(names) <= 1:
        axes = [axes]
    for ax, name in zip(axes, names):
        ratios = [r.ratio for r in records if r.checker == name]
        ax.hist(ratios, bins=24, color="steelblue", alpha=0.85)
        ax.set_title(name, fontsize=10)
        ax.set_xlabel("lhs / rhs")
    return _finish(fig, path)


def plot_energy_checks(checks, path):
    """Bar chart of inequality slacks."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    names = [c.name for c in checks]
    ax.bar(names, [c.rel_slack for c in checks], color="seagreen")
    ax.axhline(0.0, color="black", lw=1)
    ax.set_ylabel("relative slack (rhs - lhs)/scale")
    ax.tick_params(axis="x", labelrotation=15)
    return _finish(fig, path)


def plot_shell_spectrum(kappa, energy, path, overlays=()):
    """Shell spectrum on log-log axes with optional reference slopes."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    kappa = np.asarray(kappa)
    energy = np.asarray(energy)
    keep = (kappa > 0) & (energy > 0)
    if keep.any():
        ax.loglog(kappa[keep], energy[keep], "o-", ms=3)
        for slope, label in overlays:
            ref = energy[keep][0] * (kappa[keep] / kappa[keep][0]) ** slope
            ax.loglog(kappa[keep], ref, "--", lw=1, label=label)
        if overlays:
            ax.legend()
    ax.set_xlabel("wavenumber")
    ax.set_ylabel("shell energy")
    return _finish(fig, path)


def plot_sigma_sequence(plan, path):
    """Attained Sobolev orders per bootstrap pass."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    seq = plan.sigma_sequence
    ax.plot(range(1, len(seq) + 1), seq, "o-")
    ax.axhline(0.5 * plan.alpha, color="gray", ls="--", lw=1, label="alpha/2")
    ax.set_xlabel("pass")
    ax.set_ylabel("attained order")
    ax.legend()
    return _finish(fig, path)
