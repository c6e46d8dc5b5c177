"""Parameter sweeps over ``V`` or ``rho``, reduced across seeds.

Every (value, scheme, seed) cell is an independent run. Cells may execute in
worker processes, but results are always reduced in the canonical
(value, scheme, seed) order, so the output files do not depend on scheduling.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SimConfig
from .engine import run
from .federation import Scheme
from .metrics import SUMMARY_COLUMNS, MetricsSummary, fmt_value, summary_row

__all__ = ["SweepSpec", "CellResult", "SweepReport", "sweep", "AGGREGATED_METRICS"]

AGGREGATED_METRICS = (
    "entropic_objective", "mean_E_k", "mean_E_sys", "training_energy_j",
    "exceedance_frequency", "mean_staleness", "mean_exceedance", "esms",
)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]
    schemes: tuple[Scheme, ...]
    seeds: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.variable not in ("V", "rho"):
            raise ValueError(f"sweep variable must be 'V' or 'rho', got {self.variable!r}")
        if not (self.values and self.schemes and self.seeds):
            raise ValueError("sweep needs at least one value, scheme and seed")

    def cells(self) -> list[tuple[float, Scheme, int]]:
        return [(v, s, seed) for v in self.values for s in self.schemes for seed in self.seeds]


@dataclass(frozen=True)
class CellResult:
    value: float
    scheme: Scheme
    seed: int
    summary: MetricsSummary | None
    error: str | None = None


@dataclass(frozen=True)
class SweepReport:
    spec: SweepSpec
    cells: tuple[CellResult, ...]

    def aggregate(self) -> list[dict]:
        """Mean and sample std per (value, scheme) over the successful seeds."""
        rows = []
        for v in self.spec.values:
            for sch in self.spec.schemes:
                group = [c for c in self.cells if c.value == v and c.scheme is sch]
                ok = [c.summary for c in group if c.summary is not None]
                row = {"variable": self.spec.variable, "value": v, "scheme": sch.value,
                       "n_ok": len(ok), "n_failed": len(group) - len(ok),
                       "errors": "; ".join(f"seed {c.seed}: {c.error}" for c in group if c.error)}
                for name in AGGREGATED_METRICS:
                    xs = np.array([getattr(s, name) for s in ok if getattr(s, name) is not None], dtype=float)
                    row[f"{name}_mean"] = float(xs.mean()) if xs.size else None
                    row[f"{name}_std"] = float(xs.std(ddof=1)) if xs.size > 1 else None
                rows.append(row)
        return rows

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = self.aggregate()
        cols = ["variable", "value", "scheme", "n_ok", "n_failed"]
        for name in AGGREGATED_METRICS:
            cols += [f"{name}_mean", f"{name}_std"]
        cols.append("errors")
        agg_path = out / "sweep.csv"
        with open(agg_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow([fmt_value(r[c]) for c in cols])
        long_path = out / "sweep_long.csv"
        with open(long_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("variable", "value", "error") + SUMMARY_COLUMNS)
            for c in self.cells:
                body = summary_row(c.summary) if c.summary else [c.scheme.value, str(c.seed)] + [""] * (len(SUMMARY_COLUMNS) - 2)
                w.writerow([self.spec.variable, fmt_value(c.value), c.error or ""] + body)
        return agg_path, long_path


def _cell(base: SimConfig, variable: str, value: float, scheme: Scheme, seed: int) -> CellResult:
    try:
        cfg = base.with_(scheme=scheme, seed=seed, **{variable: value})
        return CellResult(value, scheme, seed, run(cfg).summary)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return CellResult(value, scheme, seed, None, f"{type(exc).__name__}: {exc}")


def _cell_star(args) -> CellResult:
    return _cell(*args)


def sweep(spec: SweepSpec, base: SimConfig, workers: int = 1) -> SweepReport:
    """Run the cross product of ``spec``; a failing cell is recorded, not raised."""
    jobs = [(base, spec.variable, v, s, seed) for v, s, seed in spec.cells()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_star, jobs))
    else:
        results = [_cell_star(j) for j in jobs]
    return SweepReport(spec, tuple(results))
