"""PNG figures for a finished plan (matplotlib, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, out, name: str) -> str:
    fig.tight_layout()
    # Fixed metadata keeps the files reproducible.
    fig.savefig(out.path(name), dpi=110, metadata={"Software": None})
    plt.close(fig)
    return name


def render_figures(out, records: dict, projection, variants: list[str]) -> list[str]:
    """Suboptimality and SNR per round for the first seed, plus the trajectory if present."""
    written = []
    fig, ax = plt.subplots(figsize=(6, 4))
    for v in variants:
        rounds = [r.round for r in records[v]]
        ax.semilogy(rounds, [max(r.suboptimality, 1e-16) for r in records[v]], label=v)
    ax.set_xlabel("round")
    ax.set_ylabel("f(w) - f(w*)")
    ax.legend()
    written.append(_save(fig, out, "suboptimality.png"))

    if any(np.isfinite(r.snr) for v in variants for r in records[v]):
        fig, ax = plt.subplots(figsize=(6, 4))
        for v in variants:
            ax.plot([r.round for r in records[v]], [r.snr for r in records[v]], label=v)
        ax.set_xlabel("round")
        ax.set_ylabel("SNR")
        ax.legend()
        written.append(_save(fig, out, "snr.png"))

    if projection is not None:
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.plot(projection.first[:, 0], projection.first[:, 1], label=variants[0])
        if len(variants) > 1:
            ax.plot(projection.second[:, 0], projection.second[:, 1], label=variants[-1])
        ax.plot(*projection.anchor, "k*", markersize=12, label="w*")
        ax.set_xlabel("PC 1")
        ax.set_ylabel("PC 2")
        ax.legend()
        written.append(_save(fig, out, "trajectory.png"))
    return written
