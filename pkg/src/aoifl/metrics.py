"""Evaluation metrics and CSV emission for single runs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .evt import GpdModel, gpd_mean
from .federation import Scheme

if TYPE_CHECKING:
    from .engine import RoundRecord, SimResult, TransmissionRecord

__all__ = [
    "MetricsSummary",
    "entropic_objective",
    "system_energy",
    "training_energy",
    "ccdf_and_esms",
    "summarize",
    "write_records_csv",
    "write_rounds_csv",
    "write_summary_csv",
    "RECORD_COLUMNS",
    "SUMMARY_COLUMNS",
]


@dataclass(frozen=True)
class MetricsSummary:
    scheme: str
    seed: int
    V: float
    rho: float
    n_records: int
    entropic_objective: float
    mean_E_k: float
    mean_E_sys: float
    training_energy_j: float
    exceedance_frequency: float
    mean_staleness: float
    mean_exceedance: float | None
    predicted_exceedance_mean: float | None
    esms: float | None
    max_gamma_rate: float
    mean_ccp_iters: float
    ccp_nonconverged: int
    ccdf_points: tuple[tuple[float, float], ...] = field(default=(), repr=False)


def entropic_objective(energies: Sequence[float] | np.ndarray, rho: float) -> float:
    """``(1/rho) ln mean(exp(rho E))`` over all sensors and uploads jointly."""
    e = np.asarray(energies, dtype=float)
    if e.size == 0:
        raise ValueError("no records")
    # shifted by the max and written with expm1/log1p so that small rho*E
    # does not cancel; the max term contributes expm1(0) = 0, so the log1p
    # argument stays above -1
    top = float(e.max())
    return top + math.log1p(float(np.mean(np.expm1(rho * (e - top))))) / rho


def training_energy(rounds: Iterable["RoundRecord"], since: float = 0.0) -> float:
    return sum(r.energy.total_j for r in rounds if r.end_time > since)


def system_energy(records: Sequence["TransmissionRecord"], rounds: Iterable["RoundRecord"], since: float = 0.0) -> float:
    """Per-upload system energy: data uploads plus training, divided by the upload count.

    Only records sampled after ``since`` and rounds ending after it count.
    """
    kept = [r.energy for r in records if r.sample_instant >= since]
    if not kept:
        raise ValueError("no records after burn-in")
    return (math.fsum(kept) + training_energy(rounds, since)) / len(kept)


def ccdf_and_esms(exceedances: Sequence[float], model: GpdModel | None):
    """Empirical survival points of the exceedances and the mean surplus of ``model``.

    Returns ``(points, esms)``; ``points`` are ``(q, P(Q >= q))`` at each
    sorted sample. ``esms`` is ``None`` without exceedances or model.
    """
    q = np.sort(np.asarray([x for x in exceedances if x is not None], dtype=float))
    if q.size == 0:
        return (), None
    n = q.size
    points = tuple((float(v), (n - i) / n) for i, v in enumerate(q))
    if model is None:
        return points, None
    try:
        return points, gpd_mean(model) - float(q.mean())
    except ValueError:
        return points, None


def _predicted_mean(result: "SimResult") -> float | None:
    scheme = result.config.scheme
    if scheme in (Scheme.FL, Scheme.CENT):
        models = [result.controller.global_model]
    elif scheme is Scheme.LOCAL:
        models = [s.gpd for s in result.sensors]
    else:
        return None
    means = [gpd_mean(m) for m in models if m.xi < 1]
    return float(np.mean(means)) if means else None


def summarize(result: "SimResult") -> MetricsSummary:
    cfg = result.config
    since = cfg.burn_in_fraction * cfg.horizon_s
    recs = [r for r in result.records if r.sample_instant >= since]
    if not recs:
        raise ValueError("no records after burn-in; lengthen the horizon")
    e = np.array([r.energy for r in recs])
    f = np.array([r.staleness for r in recs])
    exc = [r.exceedance for r in recs if r.exceedance is not None]
    pred = _predicted_mean(result)
    points, _ = ccdf_and_esms(exc, None)
    emp_mean = float(np.mean(exc)) if exc else None
    esms = pred - emp_mean if (pred is not None and emp_mean is not None) else None

    final_gamma = {s.sensor_id: s.queues.gamma / max(s.aoi.data_index, 1) for s in result.sensors}
    train = training_energy(result.rounds, since)
    return MetricsSummary(
        scheme=cfg.scheme.value,
        seed=cfg.seed,
        V=cfg.V,
        rho=cfg.rho,
        n_records=len(recs),
        entropic_objective=entropic_objective(e, cfg.rho),
        mean_E_k=float(e.mean()),
        mean_E_sys=(math.fsum(e) + train) / len(recs),
        training_energy_j=train,
        exceedance_frequency=len(exc) / len(recs),
        mean_staleness=float(f.mean()),
        mean_exceedance=emp_mean,
        predicted_exceedance_mean=pred,
        esms=esms,
        max_gamma_rate=max(final_gamma.values()),
        mean_ccp_iters=float(np.mean([r.ccp_iters for r in recs])),
        ccp_nonconverged=sum(not r.ccp_converged for r in recs),
        ccdf_points=points,
    )


RECORD_COLUMNS = (
    "sensor_id", "data_index", "sample_instant", "start_time", "procrastinated", "gain", "p_init",
    "power", "tx_time", "energy", "aoi", "staleness", "exceedance", "gamma", "upsilon", "lambda",
    "ccp_iters", "ccp_converged",
)

SUMMARY_COLUMNS = (
    "scheme", "seed", "V", "rho", "n_records", "entropic_objective", "mean_E_k", "mean_E_sys",
    "training_energy_j", "exceedance_frequency", "mean_staleness", "mean_exceedance",
    "predicted_exceedance_mean", "esms", "max_gamma_rate", "mean_ccp_iters", "ccp_nonconverged",
)


def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records_csv(records: Iterable["TransmissionRecord"], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow([fmt_value(x) for x in (
                r.sensor_id, r.data_index, r.sample_instant, r.start_time, r.procrastinated, r.gain,
                r.p_init, r.power, r.tx_time, r.energy, r.aoi, r.staleness, r.exceedance, r.gamma,
                r.upsilon, r.lam, r.ccp_iters, r.ccp_converged,
            )])


def write_rounds_csv(rounds: Iterable["RoundRecord"], path: str | Path) -> None:
    """Long format: one controller row and one row per sensor for every interval."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("interval", "end_time", "party", "sigma", "xi", "n_samples", "upsilon", "compute_j", "upload_j"))
        for r in rounds:
            g = r.global_model
            w.writerow([fmt_value(x) for x in (
                r.interval, r.end_time, "controller", g.sigma if g else None, g.xi if g else None,
                sum(r.sample_counts), None, r.energy.controller_compute_j, 0.0,
            )])
            for k, (m, n, ups) in enumerate(zip(r.local_models, r.sample_counts, r.upsilon_after)):
                w.writerow([fmt_value(x) for x in (
                    r.interval, r.end_time, k, m.sigma, m.xi, n, ups,
                    r.energy.sensor_compute_j[k], r.energy.sensor_upload_j[k],
                )])


def summary_row(s: MetricsSummary) -> list[str]:
    return [fmt_value(getattr(s, c)) for c in SUMMARY_COLUMNS]


def write_summary_csv(summaries: Iterable[MetricsSummary], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow(summary_row(s))
