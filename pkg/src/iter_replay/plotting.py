"""Static learning-curve figures from the CSV outputs."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_progress(csv_path, out_path=None, title=None) -> Path:
    """Train/eval success against real environment steps for one run."""
    rows = _read(csv_path)
    if not rows:
        raise ValueError(f"{csv_path} has no data rows")
    steps = [int(r["env_steps"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, [float(r["eval_success"]) for r in rows], label="eval")
    ax.plot(steps, [float(r["train_success"]) for r in rows], label="train", alpha=0.6)
    ax.set_xlabel("real environment steps")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    ax.set_title(title or Path(csv_path).parent.name)
    out = Path(out_path) if out_path else Path(csv_path).with_suffix(".png")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_curves(csv_path, out_path=None, title=None) -> Path:
    """Median eval success with an interquartile band per ablation cell."""
    rows = _read(csv_path)
    if not rows:
        raise ValueError(f"{csv_path} has no data rows")
    by_cell: dict[str, list[dict]] = defaultdict(list)
    for r in rows:
        by_cell[r["cell"]].append(r)
    fig, ax = plt.subplots(figsize=(6, 4))
    for cell, rs in by_cell.items():
        x = [int(r["episodes"]) for r in rs]
        ax.plot(x, [float(r["median_eval"]) for r in rs], label=cell)
        ax.fill_between(x, [float(r["q25_eval"]) for r in rs], [float(r["q75_eval"]) for r in rs], alpha=0.2)
    ax.set_xlabel("real episodes")
    ax.set_ylabel("median eval success")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    out = Path(out_path) if out_path else Path(csv_path).with_suffix(".png")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_csv(csv_path, out_path=None) -> Path:
    """Dispatch on the CSV header: per-run progress or ablation curves."""
    with open(csv_path, newline="") as fh:
        header = next(csv.reader(fh), [])
    if "median_eval" in header:
        return plot_curves(csv_path, out_path)
    if "eval_success" in header:
        return plot_progress(csv_path, out_path)
    raise ValueError(f"unrecognised CSV columns in {csv_path}: {header}")
