"""Budget/dimension sweeps and the tradeoff-curve report.

A sweep config is an explicit JSON file (no implicit ranges) listing the
source spec, the m values, the budget grids, and the seeds. Cells solve
independently on a process pool with pre-assigned seeds, then rows are
written in a fixed lexicographic order so reruns are byte-identical.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .metrics import RdpcBudget
from .model import GmmSource
from .rdpco import InfeasibleBudgetError, SolverConfig, solve

CSV_COLUMNS = [
    "seed",
    "n",
    "m",
    "dist_budget",
    "perc_budget",
    "cls_budget",
    "rate_nats",
    "rate_bits",
    "distortion",
    "perception_bound",
    "bhattacharyya",
    "classification_margin",
    "feasible",
    "converged",
    "outer_iters",
]


class SweepConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    n: int
    cn_seed: int
    cn_variance: float
    p0: float
    m_list: tuple[int, ...]
    dist_grid: tuple[float, ...]
    perc_grid: tuple[float, ...]
    cls_grid: tuple[float, ...]
    seeds: tuple[int, ...]
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, grid in (("dist", self.dist_grid), ("perc", self.perc_grid), ("cls", self.cls_grid)):
            if not grid:
                raise SweepConfigError(f"{name} grid is empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise SweepConfigError(f"{name} grid must be strictly increasing")
        if not self.seeds:
            raise SweepConfigError("at least one seed is required")
        if not self.m_list:
            raise SweepConfigError("at least one m value is required")

    @classmethod
    def from_file(cls, path: str | Path) -> "SweepConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SweepConfigError(f"cannot read sweep config {path}: {exc}") from exc
        try:
            return cls(
                n=int(raw["n"]),
                cn_seed=int(raw.get("cn_seed", 0)),
                cn_variance=float(raw.get("cn_variance", 4.0)),
                p0=float(raw.get("p0", 0.5)),
                m_list=tuple(int(m) for m in raw["m"]),
                dist_grid=tuple(float(x) for x in raw["dist_grid"]),
                perc_grid=tuple(float(x) for x in raw["perc_grid"]),
                cls_grid=tuple(float(x) for x in raw["cls_grid"]),
                seeds=tuple(int(s) for s in raw["seeds"]),
                solver=dict(raw.get("solver", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SweepConfigError(f"invalid sweep config: {exc}") from exc

    def source(self) -> GmmSource:
        rng = np.random.default_rng(self.cn_seed)
        return GmmSource(c_n=rng.standard_normal(self.n) * math.sqrt(self.cn_variance), p0=self.p0)

    def cells(self) -> list[tuple]:
        """All (m, dist, perc, cls, seed) cells in deterministic row order."""
        return [
            (m, d, p, c, s)
            for m in self.m_list
            for d in self.dist_grid
            for p in self.perc_grid
            for c in self.cls_grid
            for s in self.seeds
        ]


def _solve_cell(args: tuple) -> dict:
    config, m, dist, perc, cls, seed = args
    src = config.source()
    solver_cfg = SolverConfig(**{**config.solver, "seed": seed})
    row = {
        "seed": seed,
        "n": config.n,
        "m": m,
        "dist_budget": dist,
        "perc_budget": perc,
        "cls_budget": cls,
        "rate_nats": float("nan"),
        "rate_bits": float("nan"),
        "distortion": float("nan"),
        "perception_bound": float("nan"),
        "bhattacharyya": float("nan"),
        "classification_margin": float("nan"),
        "feasible": False,
        "converged": False,
        "outer_iters": 0,
    }
    try:
        point = solve(src, m, RdpcBudget(dist=dist, perc=perc, cls=cls), solver_cfg)
    except InfeasibleBudgetError:
        return row
    rep = point.report
    row.update(
        rate_nats=rep.rate_nats,
        rate_bits=rep.rate_bits,
        distortion=rep.distortion,
        perception_bound=rep.perception_bound,
        bhattacharyya=rep.bhattacharyya,
        classification_margin=rep.classification_margin,
        feasible=point.feasible,
        converged=point.converged,
        outer_iters=point.outer_iters,
    )
    return row


def run_sweep(config: SweepConfig, jobs: int = 1) -> list[dict]:
    """Solve every cell; row order matches config.cells() regardless of jobs."""
    tasks = [(config, *cell) for cell in config.cells()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_solve_cell, tasks))
    return [_solve_cell(t) for t in tasks]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(rows: list[dict], path: str | Path) -> None:
    """Write the fixed-schema CSV with 17-significant-digit floats."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[col]) for col in CSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in CSV_COLUMNS if c not in df.columns]
    if missing:
        raise SweepConfigError(f"CSV is missing columns: {missing}")
    return df


def analyze_sweep(df: pd.DataFrame, tol_frac: float = 0.02) -> dict:
    """Curve-shape checks on median rate curves from a sweep CSV.

    Per (m, perc, cls): the median rate over seeds must be non-increasing in
    the distortion budget (within tol_frac of the curve range) and its second
    differences must stay above -tol_frac of the range. A curve whose total
    range is below 1% of its level is flat (the budget never binds); its
    residual wiggle is solver jitter, so the shape checks pass trivially.
    Cross-curve: a smaller classification budget must not lower the rate, and
    the m=2 curve must lie at or below the m=3 curve.
    """
    curves: dict[tuple, pd.Series] = {}
    results = {"curves": [], "cls_comparisons": [], "m_comparisons": []}
    for (m, perc, cls), group in df.groupby(["m", "perc_budget", "cls_budget"]):
        curve = group.groupby("dist_budget")["rate_nats"].median().sort_index()
        curves[(m, perc, cls)] = curve
        values = curve.to_numpy()
        rng_ = float(values.max() - values.min())
        flat = rng_ <= 0.01 * float(np.max(np.abs(values)))
        tol = tol_frac * rng_
        mono = flat or bool(np.all(np.diff(values) <= tol))
        if flat or values.size < 3:
            convex = True
        else:
            second = np.diff(values, 2)
            convex = bool(np.all(second >= -tol))
        results["curves"].append(
            {
                "m": int(m),
                "perc_budget": float(perc),
                "cls_budget": float(cls),
                "dist_grid": [float(x) for x in curve.index],
                "median_rate_nats": [float(x) for x in values],
                "range": rng_,
                "flat": flat,
                "non_increasing": mono,
                "convex": convex,
            }
        )
    keys = sorted(curves)
    for m, perc, _ in keys:
        cls_values = sorted({c for mm, pp, c in keys if (mm, pp) == (m, perc)})
        for c_small, c_large in zip(cls_values, cls_values[1:]):
            a, b = curves[(m, perc, c_small)], curves[(m, perc, c_large)]
            shared = a.index.intersection(b.index)
            if shared.empty:
                continue
            comp = {
                "m": int(m),
                "perc_budget": float(perc),
                "cls_small": float(c_small),
                "cls_large": float(c_large),
                "pointwise_ge": bool(np.all(a[shared].to_numpy() >= b[shared].to_numpy() - 1e-12)),
            }
            if comp not in results["cls_comparisons"]:
                results["cls_comparisons"].append(comp)
    for (m, perc, cls) in keys:
        if m == 2 and (3, perc, cls) in curves:
            a, b = curves[(2, perc, cls)], curves[(3, perc, cls)]
            shared = a.index.intersection(b.index)
            if shared.empty:
                continue
            results["m_comparisons"].append(
                {
                    "perc_budget": float(perc),
                    "cls_budget": float(cls),
                    "m2_le_m3_pointwise": bool(
                        np.all(a[shared].to_numpy() <= b[shared].to_numpy() + 1e-12)
                    ),
                }
            )
    results["all_curves_ok"] = all(c["non_increasing"] and c["convex"] for c in results["curves"])
    results["all_cls_ok"] = all(c["pointwise_ge"] for c in results["cls_comparisons"])
    results["all_m_ok"] = all(c["m2_le_m3_pointwise"] for c in results["m_comparisons"])
    return results
