"""Static PNG renderings of the analysis artifacts (optional, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import SQRT3_2, GroupProfile, KernelSurface  # noqa: E402
from .features import GROUP_NAMES  # noqa: E402

_GROUP_COLORS = {
    "familiarity": "#4c72b0",
    "meaning": "#dd8452",
    "surface": "#55a868",
    "transfer": "#c44e52",
}


def plot_profiles(profile: GroupProfile, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 3.2))
    x = np.arange(len(profile.item_ids))
    bottom = np.zeros(len(x))
    for j, g in enumerate(GROUP_NAMES):
        ax.fill_between(x, bottom, bottom + profile.rolling[:, j],
                        color=_GROUP_COLORS[g], label=g, linewidth=0)
        bottom += profile.rolling[:, j]
    ax.set_xlim(0, max(len(x) - 1, 1))
    ax.set_ylim(0, 1)
    ax.set_xlabel("items sorted by familiarity share")
    ax.set_ylabel("importance share")
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_simplex(points, surface, path) -> None:
    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    if surface is not None:
        ax.imshow(
            surface.fitted,
            origin="lower",
            extent=(0, 1, 0, SQRT3_2),
            cmap="RdYlGn",
            alpha=0.6,
            aspect="auto",
        )
    golds = [p.gold for p in points if p.gold is not None]
    if golds:
        xs = [p.x for p in points if p.gold is not None]
        ys = [p.y for p in points if p.gold is not None]
        ax.scatter(xs, ys, c=golds, cmap="RdYlGn", s=8, edgecolors="none")
    tri_x = [0, 1, 0.5, 0]
    tri_y = [0, 0, SQRT3_2, 0]
    ax.plot(tri_x, tri_y, color="black", linewidth=1)
    for label, (x, y) in {
        "familiarity": (0, -0.03),
        "meaning": (1, -0.03),
        "form": (0.5, SQRT3_2 + 0.02),
    }.items():
        ax.text(x, y, label, ha="center", fontsize=8)
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_similarity_export(records, path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
    sim = np.array([r["char_similarity"] for r in records], dtype=float)
    gold = np.array([r["gold"] for r in records], dtype=float)
    phi = np.array([r["phi_char_similarity"] for r in records], dtype=float)
    axes[0].scatter(sim, gold, s=8)
    axes[0].set_xlabel("character similarity")
    axes[0].set_ylabel("gold difficulty")
    axes[1].scatter(sim, phi, s=8)
    axes[1].set_xlabel("character similarity")
    axes[1].set_ylabel("attribution")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_l1(out_dir, l1: str, profile: GroupProfile, points, surface: KernelSurface, records) -> None:
    out_dir = Path(out_dir)
    plot_profiles(profile, out_dir / f"fig3_profiles_{l1}.png")
    plot_simplex(points, surface, out_dir / f"fig4_simplex_{l1}.png")
    if records:
        plot_similarity_export(records, out_dir / f"fig11_freq_similarity_{l1}.png")
