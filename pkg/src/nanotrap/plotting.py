"""Figures written next to the CLI's data files.

Uses ``matplotlib.figure.Figure`` directly so no GUI backend or global
pyplot state is involved.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .beam import beam_mode
from .params import DeviceParams

__all__ = ["STYLE", "plot_modes", "plot_cooling", "plot_sweep", "plot_secular", "plot_entangle"]

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
}


def _new(nrows=1, ncols=1, width=5.0, height=3.2):
    fig = Figure(figsize=(width, height), layout="constrained")
    axes = fig.subplots(nrows, ncols, squeeze=False)
    for ax in axes.flat:
        for key, val in STYLE.items():
            if key.startswith("xtick"):
                ax.tick_params(axis="x", labelsize=val)
            elif key.startswith("ytick"):
                ax.tick_params(axis="y", labelsize=val)
    return fig, axes


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    return path


def plot_modes(params: DeviceParams, path, n_show: int = 4) -> Path:
    fig, axes = _new()
    ax = axes[0, 0]
    L = params.half_length
    y = np.linspace(-L, L, 401)
    for n in range(1, min(n_show, params.n_modes) + 1):
        m = beam_mode(params, n)
        ax.plot(y * 1e9, m.shape(y), lw=1.2, label=f"n={n}, {m.omega / 2e9 / np.pi:.3g} GHz")
    ax.axhline(0, color="0.6", lw=0.6)
    ax.set_xlabel("y (nm)")
    ax.set_ylabel("u_n(y)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_cooling(times, n_ion, n_res, steady, path) -> Path:
    fig, axes = _new()
    ax = axes[0, 0]
    t_us = np.asarray(times) * 1e6
    ax.semilogy(t_us, np.maximum(n_ion, 1e-12), label="ion <a+a>")
    ax.semilogy(t_us, np.maximum(n_res, 1e-12), label="resonator <b+b>")
    ax.axhline(steady, color="k", ls="--", lw=0.8, label="steady state")
    ax.set_xlabel("t (us)")
    ax.set_ylabel("occupation")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_sweep(gamma_over_lambda, values, closed_form, best, path) -> Path:
    fig, axes = _new()
    ax = axes[0, 0]
    ax.loglog(gamma_over_lambda, values, "o", ms=3, label="numerical")
    ax.loglog(gamma_over_lambda, closed_form, "-", lw=1, label="closed form")
    ax.axvline(best, color="k", ls="--", lw=0.8, label=f"minimum at {best:.3g} lambda")
    ax.set_xlabel("gamma_a / lambda")
    ax.set_ylabel("<b+b> steady")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_secular(res, path, max_samples: int = 2560) -> Path:
    fig, axes = _new(2, 1, height=4.6)
    keep = slice(0, min(len(res.times), max_samples))
    axes[0, 0].plot(res.times[keep] * 1e9, res.x[keep], lw=0.8)
    axes[0, 0].set_xlabel("t (ns)")
    axes[0, 0].set_ylabel("x / x(0)")
    ax = axes[1, 0]
    ax.loglog(res.freqs[1:] / 2e9 / np.pi, np.maximum(res.spectrum[1:], 1e-300), lw=0.8)
    ax.axvline(res.omega_predicted / 2e9 / np.pi, color="k", ls="--", lw=0.8, label="predicted")
    if res.omega_measured is not None:
        ax.axvline(res.omega_measured / 2e9 / np.pi, color="C3", ls=":", lw=1.0, label="measured")
    ax.set_xlabel("f (GHz)")
    ax.set_ylabel("|FFT|")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_entangle(outcomes, path) -> Path:
    shown = [o for o in outcomes if o.state is not None]
    fig, axes = _new(1, max(len(shown), 1), width=3.0 * max(len(shown), 1), height=3.0)
    for ax, o in zip(axes.flat, shown):
        im = ax.imshow(np.abs(o.state.matrix), cmap="viridis", vmin=0)
        fid = "n/a" if o.fidelity is None else f"{o.fidelity:.4f}"
        ax.set_title(f"outcome {o.label}: p={o.probability:.3f}, F={fid}")
        fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)
