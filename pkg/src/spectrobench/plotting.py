"""Matplotlib figures written next to the CSV outputs.

CSV is the contract; figures are a convenience for looking at results.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.5, 3.8),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "savefig.bbox": "tight",
    "svg.hashsalt": "spectro-bench",
    "svg.fonttype": "none",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip(".") or "svg"
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=meta)
    plt.close(fig)
    return path


def blur_map(x, h_x, lam, h_lam, path, title: str = "") -> Path:
    """Outer-product x-lambda blur image, in the style of an uncertainty box."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.8))
        img = np.outer(h_lam / h_lam.max(), h_x / h_x.max())
        ax.imshow(
            img,
            extent=(x[0] * 1e6, x[-1] * 1e6, lam[0] * 1e9, lam[-1] * 1e9),
            origin="lower",
            aspect="auto",
            cmap="magma",
        )
        ax.set_xlabel("x (µm)")
        ax.set_ylabel("λ offset (nm)")
        ax.grid(False)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def kernel_plot(coords, values, path, xlabel: str, unit_scale: float = 1.0, label=None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(np.asarray(coords) * unit_scale, values / np.max(values), label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("normalized blur")
        if label:
            ax.legend()
        return _save(fig, path)


def reciprocal_line(sigma_lambda, sigma_x, slope, path, family: str = "") -> Path:
    s = np.asarray(sigma_lambda)
    y = 1.0 / np.asarray(sigma_x)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(s * 1e9, y * 1e-6, "o", label=family or "sweep")
        xs = np.linspace(0, s.max() * 1.05, 50)
        ax.plot(xs * 1e9, slope * xs * 1e-6, "--", label="fit through origin")
        ax.set_xlabel("σ_λ (nm)")
        ax.set_ylabel("1 / σ_x (1/µm)")
        ax.legend()
        return _save(fig, path)


def agreement(x, measured, analytic, path, xlabel: str, unit_scale: float = 1e3) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(x * unit_scale, analytic / analytic.max(), label="closed form")
        ax.plot(x * unit_scale, measured / measured.max(), ":", label="propagated")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("normalized intensity")
        ax.legend()
        return _save(fig, path)


def offset_curve(offsets, stds, path, label: str = "") -> Path:
    off = np.asarray(offsets, dtype=float) * 1e9
    std = np.array([np.nan if s is None else s for s in stds], dtype=float) * 1e6
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(off, std, "o-", label=label or None)
        ax.set_xlabel("mask offset Δλ (nm)")
        ax.set_ylabel("PSF std (µm)")
        if label:
            ax.legend()
        return _save(fig, path)


def mtf_tradeoff(spectral, spatial, path, family: str = "") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(np.asarray(spectral) * 1e-9, np.asarray(spatial) * 1e-3, "o-", label=family or None)
        ax.set_xlabel("spectral resolution (cycles/nm)")
        ax.set_ylabel("spatial resolution (cycles/mm)")
        if family:
            ax.legend()
        return _save(fig, path)


def image(img, pixel_pitch: float, path, title: str = "") -> Path:
    h, w = img.shape
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.imshow(img, cmap="gray", extent=(0, w * pixel_pitch * 1e6, h * pixel_pitch * 1e6, 0))
        ax.set_xlabel("x (µm)")
        ax.set_ylabel("y (µm)")
        ax.grid(False)
        if title:
            ax.set_title(title)
        return _save(fig, path)
