"""Matplotlib renderings of run artifacts (headless, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.family": "serif",
    "mathtext.fontset": "stix",
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "figure.figsize": (4.5, 3.2),
    "figure.dpi": 150,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_spectrum(eigenvalues, stable, path, title=None):
    """Eigenvalue scatter; unstable values in red."""
    lam = np.asarray(eigenvalues)
    ok = np.asarray(stable, dtype=bool)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.scatter(lam.real[ok], lam.imag[ok], s=10, c="k", label="stable")
        if np.any(~ok):
            ax.scatter(lam.real[~ok], lam.imag[~ok], s=14, c="r", label="unstable")
        ax.axvline(0.0, color="0.6", lw=0.6)
        ax.set_xlabel(r"Re$(\lambda)$")
        ax.set_ylabel(r"Im$(\lambda)$")
        ax.legend(loc="best")
        if title:
            ax.set_title(title, fontsize=9)
        return _save(fig, path)


def plot_errors(reports, path):
    """Semilog error against polynomial order, with optimal errors dashed."""
    N = [r.N for r in reports]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(N, [r.err_u for r in reports], "o-", label="base")
        ax.semilogy(N, [r.err_v for r in reports], "s-", label="overset")
        if all(r.opt_u is not None for r in reports):
            ax.semilogy(N, [r.opt_u for r in reports], "o--", mfc="none", label="base, optimal")
            ax.semilogy(N, [r.opt_v for r in reports], "s--", mfc="none", label="overset, optimal")
        ax.set_xlabel("N")
        ax.set_ylabel("error")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_energy(series, path):
    t = [r.t for r in series]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, [r.combined for r in series], label="combined")
        ax.plot(t, [r.overset_norm for r in series], "--", label="overset-domain norm")
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_sweep(values, errors, path, param="value"):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(values, errors, "o-")
        ax.set_xlabel(param)
        ax.set_ylabel("total error")
        return _save(fig, path)
