"""Matplotlib rendering of report artifacts (written alongside the CSV output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_mte_figure(grid_rows, path, title: str = "MTE approximation",
                      approx_label: str = "approximation") -> None:
    """Line plot of (u, MTE_true, MTE_approx) rows as produced by curve_grid."""
    arr = np.asarray(grid_rows, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(arr[:, 0], arr[:, 1], color="black", lw=1.8, label="true")
    ax.plot(arr[:, 0], arr[:, 2], color="tab:red", lw=1.5, ls="--", label=approx_label)
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("u")
    ax.set_ylabel("MTE(u)")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_profit_figure(nus, curves: dict[str, np.ndarray], path,
                         title: str = "Expected profit", marks: dict[str, float] | None = None) -> None:
    """Profit curves over reach, optionally with vertical argmax markers."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, values in curves.items():
        ax.plot(nus, values, lw=1.6, label=label)
    for label, nu in (marks or {}).items():
        ax.axvline(nu, lw=0.8, ls=":", color="gray")
        ax.annotate(f"{label}: {nu:.4g}", xy=(nu, ax.get_ylim()[0]),
                    rotation=90, fontsize=7, va="bottom", ha="right")
    ax.set_xlabel("reach nu")
    ax.set_ylabel("profit")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sequential_figure(u_grid, true_curves: dict[str, np.ndarray],
                             approx_curves: dict[str, np.ndarray], path,
                             title: str = "Per-exposure MTE approximations") -> None:
    """Solid true curves and dashed approximations per exposure level."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, (label, vals) in enumerate(true_curves.items()):
        ax.plot(u_grid, vals, lw=1.6, color=colors[i % len(colors)], label=f"{label} true")
    for i, (label, vals) in enumerate(approx_curves.items()):
        ax.plot(u_grid, vals, lw=1.3, ls="--", color=colors[i % len(colors)],
                label=f"{label} fit")
    ax.set_xlabel("u")
    ax.set_ylabel("MTE(u, x)")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
