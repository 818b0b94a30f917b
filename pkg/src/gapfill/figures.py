"""Figure rendering for report outputs.

Every report path (profile, benchmark, pipeline) can drop a PNG next to its
delimited/JSON artifacts. All rendering goes through the Agg backend so it
works headless.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def fig_size(width: float = 7.0) -> tuple[float, float]:
    return (width, width * GOLDEN)


def render_missingness(profiles: Sequence[dict], path: str | Path) -> Path:
    """Bar chart of per-column missing rates."""
    names = [p["name"] for p in profiles]
    rates = [p["missing_rate"] for p in profiles]
    fig, ax = plt.subplots(figsize=fig_size())
    ax.bar(range(len(names)), rates, color="#4878d0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("missing rate")
    ax.set_ylim(0, 1)
    ax.set_title("Missingness by column")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_benchmark(reports: Sequence[dict], path: str | Path) -> Path:
    """Per-strategy metric bars with sd whiskers; RMSE when available,
    accuracy otherwise."""
    numeric = any(r.get("rmse_mean") is not None for r in reports)
    key, sd_key = ("rmse_mean", "rmse_sd") if numeric else ("accuracy_mean", "accuracy_sd")
    rows = [r for r in reports if r.get(key) is not None]
    labels = [r["strategy"] for r in rows]
    values = [r[key] for r in rows]
    errs = [r.get(sd_key) or 0.0 for r in rows]
    fig, ax = plt.subplots(figsize=fig_size())
    ax.bar(range(len(labels)), values, yerr=errs, capsize=4, color="#ee854a")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("mean RMSE" if numeric else "mean accuracy")
    ax.set_title("Tournament scores")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_selection(report: dict, out_dir: str | Path) -> list[Path]:
    """One tournament-score figure per treated column of a pipeline report,
    winner highlighted."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for entry in report["columns"]:
        candidates = [c for c in entry["candidates"] if c.get("scores")]
        if not candidates:
            continue
        numeric = entry["kind"] == "numeric"
        key = "rmse_mean" if numeric else "accuracy_mean"
        labels = [c["label"] for c in candidates]
        values = [c["scores"].get(key) for c in candidates]
        keep = [(lbl, v) for lbl, v in zip(labels, values) if v is not None]
        if not keep:
            continue
        labels, values = zip(*keep)
        colors = [
            "#6acc64" if lbl == entry.get("chosen") else "#b0b0b0" for lbl in labels
        ]
        fig, ax = plt.subplots(figsize=fig_size())
        ax.bar(range(len(labels)), values, color=colors)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylabel("mean RMSE" if numeric else "mean accuracy")
        ax.set_title(f"Candidates for {entry['column']}")
        fig.tight_layout()
        path = out_dir / f"selection_{entry['column']}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
