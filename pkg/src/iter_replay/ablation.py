"""Grid experiments: one training run per (cell, seed), then median/IQR summaries.

A grid file is JSON::

    {
      "name": "reach_nker",
      "base": {"env": {"task": "reach"}, "train": {"epochs": 20}},
      "axes": {"ker.n_ker": [1, 2, 4]},
      "cells": [{"name": "her_b1024", "set": {"train.batch_size": 1024}}],
      "seeds": [0, 1, 2, 3, 4],
      "threshold": 0.9,
      "out": "runs/reach_nker"
    }

``axes`` expands to the Cartesian product of dotted-key overrides; ``cells``
adds explicitly named configurations.  Either may be omitted.  With
``"preset": true`` the base config starts from the desk-scale preset.  Each run
writes to ``<out>/<cell>/seed_<n>/``; a run whose manifest says
``"status": "complete"`` and whose stored config matches is skipped on resume.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import deep_merge, desk_preset, normalize, set_dotted
from .training import read_progress, run_training

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "cell",
    "n_seeds",
    "solved_seeds",
    "median_episodes",
    "q25_episodes",
    "q75_episodes",
    "median_final_eval",
    "median_wall_s",
    "overrides",
]
CURVE_COLUMNS = ["cell", "epoch", "episodes", "median_eval", "q25_eval", "q75_eval"]


@dataclass
class Cell:
    name: str
    overrides: dict

    def config(self, base: dict) -> dict:
        cfg = base
        for k, v in self.overrides.items():
            cfg = set_dotted(cfg, k, v)
        return normalize(cfg)


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def expand_cells(grid: dict) -> list[Cell]:
    cells: list[Cell] = []
    axes = grid.get("axes") or {}
    if axes:
        keys = list(axes)
        for combo in itertools.product(*(axes[k] for k in keys)):
            over = dict(zip(keys, combo))
            name = ",".join(f"{k.split('.')[-1]}={_fmt_value(v)}" for k, v in over.items())
            cells.append(Cell(name, over))
    for c in grid.get("cells") or []:
        cells.append(Cell(str(c["name"]), dict(c.get("set", {}))))
    if not cells:
        raise ValueError("grid defines neither axes nor cells")
    names = [c.name for c in cells]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate cell names in grid: {names}")
    return cells


def load_grid(path) -> dict:
    with open(path) as fh:
        grid = json.load(fh)
    validate_grid(grid)
    return grid


def validate_grid(grid: dict) -> None:
    seeds = grid.get("seeds")
    if not seeds:
        raise ValueError("grid needs a non-empty 'seeds' list")
    for cell in expand_cells(grid):
        cell.config(base_config(grid))


def base_config(grid: dict) -> dict:
    base = grid.get("base", {})
    if grid.get("preset"):
        task = base.get("env", {}).get("task", "push")
        preset = desk_preset(task)
        return deep_merge(preset, base)
    return base


def run_dir(out: Path, cell: Cell, seed: int) -> Path:
    return out / cell.name / f"seed_{seed}"


def is_complete(path: Path, cfg: dict | None = None) -> bool:
    """True when ``path`` holds a finished run (of exactly ``cfg``, if given)."""
    try:
        with open(path / "manifest.json") as fh:
            m = json.load(fh)
    except (OSError, ValueError):
        return False
    if m.get("status") != "complete":
        return False
    return cfg is None or m.get("config") == json.loads(json.dumps(cfg))


def _run_one(args) -> str:
    cfg, seed, path = args
    run_training(cfg, seed=seed, out_dir=path)
    return str(path)


def run_ablation(grid: dict, out_dir=None, resume: bool = True, workers: int = 1) -> list[dict]:
    """Run every missing (cell, seed) pair, then write ``summary.csv``, ``curves.csv`` and plots."""
    validate_grid(grid)
    out = Path(out_dir or grid.get("out") or "ablation_out")
    out.mkdir(parents=True, exist_ok=True)
    base = base_config(grid)
    cells = expand_cells(grid)
    seeds = [int(s) for s in grid["seeds"]]
    jobs = []
    for cell in cells:
        cfg = cell.config(base)
        for seed in seeds:
            path = run_dir(out, cell, seed)
            if resume and is_complete(path, cfg):
                log.info("skipping completed run %s", path)
                continue
            jobs.append((cfg, seed, path))
    manifest = {"grid": grid, "cells": [c.name for c in cells], "seeds": seeds, "pending": [str(j[2]) for j in jobs]}
    _write_json(out / "ablation_manifest.json", manifest)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for done in ex.map(_run_one, jobs):
                log.info("finished %s", done)
    else:
        for job in jobs:
            _run_one(job)
    manifest["pending"] = []
    _write_json(out / "ablation_manifest.json", manifest)
    rows = summarize(out, cells, seeds, float(grid.get("threshold", 0.9)))
    try:
        from .plotting import plot_curves

        plot_curves(out / "curves.csv", out / "curves.png")
    except ImportError:  # matplotlib missing: CSVs are still written
        log.warning("matplotlib unavailable; skipping plots")
    return rows


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)


def _episodes_column(rows: list[dict], cfg: dict) -> list[int]:
    per = int(cfg["train"]["episodes_per_epoch"])
    return [(int(r["epoch"]) + 1) * per for r in rows]


def summarize(out: Path, cells: list[Cell], seeds: list[int], threshold: float = 0.9) -> list[dict]:
    """Aggregate finished runs; unsolved seeds count as ``inf`` episodes."""
    summary, curves = [], []
    for cell in cells:
        eps, finals, walls, curves_by_seed = [], [], [], []
        per_epoch = None
        for seed in seeds:
            path = run_dir(out, cell, seed)
            if not (path / "progress.csv").exists():
                continue
            with open(path / "manifest.json") as fh:
                cfg = json.load(fh)["config"]
            rows = read_progress(path / "progress.csv")
            if not rows:
                continue
            per_epoch = int(cfg["train"]["episodes_per_epoch"])
            episodes = _episodes_column(rows, cfg)
            evals = [float(r["eval_success"]) for r in rows]
            hit = next((e for e, v in zip(episodes, evals) if v >= threshold), None)
            eps.append(math.inf if hit is None else hit)
            finals.append(evals[-1])
            if rows[-1].get("wall_s"):
                walls.append(float(rows[-1]["wall_s"]))
            curves_by_seed.append(evals)
        if not eps:
            continue
        arr = np.array(eps, dtype=float)
        summary.append(
            {
                "cell": cell.name,
                "n_seeds": len(eps),
                "solved_seeds": int(np.isfinite(arr).sum()),
                "median_episodes": _num(np.median(arr)),
                "q25_episodes": _pct(arr, 25),
                "q75_episodes": _pct(arr, 75),
                "median_final_eval": _num(np.median(finals)),
                "median_wall_s": _num(np.median(walls)) if walls else "",
                "overrides": json.dumps(cell.overrides, sort_keys=True),
            }
        )
        # runs that stopped early hold their last value (they stop only after sustained success)
        n = max(len(c) for c in curves_by_seed)
        padded = np.array([c + [c[-1]] * (n - len(c)) for c in curves_by_seed])
        for e in range(n):
            col = padded[:, e]
            curves.append(
                {
                    "cell": cell.name,
                    "epoch": e,
                    "episodes": (e + 1) * (per_epoch or 1),
                    "median_eval": _num(np.median(col)),
                    "q25_eval": _num(np.percentile(col, 25)),
                    "q75_eval": _num(np.percentile(col, 75)),
                }
            )
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    _write_csv(out / "curves.csv", CURVE_COLUMNS, curves)
    return summary


def _num(x) -> float:
    return float(x)


def _pct(arr: np.ndarray, q: float) -> float:
    """Percentile that tolerates ``inf`` entries (unsolved seeds)."""
    with np.errstate(invalid="ignore"):
        v = float(np.percentile(arr, q))
    return math.inf if math.isnan(v) else v


def _write_csv(path: Path, cols: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})


def read_summary(path) -> dict[str, dict]:
    with open(path, newline="") as fh:
        return {r["cell"]: r for r in csv.DictReader(fh)}
