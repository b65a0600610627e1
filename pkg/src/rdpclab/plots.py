"""Figure rendering for the report path.

Renders rate-vs-distortion-budget curves from a sweep CSV to PNG files next
to the report output. Uses the Agg backend so reports work headless.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def _median_curve(df: pd.DataFrame) -> pd.Series:
    return df.groupby("dist_budget")["rate_nats"].median().sort_index()


def render_rate_curves(df: pd.DataFrame, out_dir: Path, stem: str = "rate_vs_dist") -> list[Path]:
    """One figure per (perc, cls) budget pair, one median curve per m."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for (perc, cls), group in sorted(df.groupby(["perc_budget", "cls_budget"])):
        fig, ax = plt.subplots(figsize=(6, 4))
        for m, sub in sorted(group.groupby("m")):
            curve = _median_curve(sub)
            ax.plot(curve.index, curve.values, marker="o", label=f"m={m}")
        ax.set_xlabel("distortion budget")
        ax.set_ylabel("rate (nats)")
        ax.set_title(f"perception budget {perc}, classification budget {cls}")
        ax.legend()
        ax.grid(True, alpha=0.3)
        path = out_dir / f"{stem}_P{perc:g}_C{cls:g}.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def render_cls_comparison(df: pd.DataFrame, out_dir: Path, stem: str = "rate_vs_dist_by_cls") -> list[Path]:
    """One figure per (m, perc) comparing classification budgets."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for (m, perc), group in sorted(df.groupby(["m", "perc_budget"])):
        if group["cls_budget"].nunique() < 2:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        for cls, sub in sorted(group.groupby("cls_budget")):
            curve = _median_curve(sub)
            ax.plot(curve.index, curve.values, marker="o", label=f"C={cls:g}")
        ax.set_xlabel("distortion budget")
        ax.set_ylabel("rate (nats)")
        ax.set_title(f"m={m}, perception budget {perc:g}")
        ax.legend()
        ax.grid(True, alpha=0.3)
        path = out_dir / f"{stem}_m{m}_P{perc:g}.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths
