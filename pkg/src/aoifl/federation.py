"""Federated GPD training round: window maxima, weighted aggregation, queue replacement.

Also holds the per-round training energy ledger that separates the
federated scheme from its centralised and local baselines.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

from .aoi import StalenessParams
from .evt import GpdModel, gpd_mean
from .lyapunov import VirtualQueues
from .phy import ChannelParams, TrainingEnergyParams, model_upload_energy, training_compute_energy

__all__ = [
    "Scheme",
    "RoundSchedule",
    "LocalReport",
    "GlobalModel",
    "RoundEnergy",
    "window_index",
    "extract_window_maxima",
    "aggregate",
    "replace_upsilon",
    "round_energy",
]

logger = logging.getLogger(__name__)


class Scheme(str, Enum):
    FL = "FL"
    CENT = "CENT"
    LOCAL = "LOCAL"
    NONT = "NonT"
    ESA = "ESA"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        for s in cls:
            if s.value.lower() == name.strip().lower():
                return s
        raise ValueError(f"unknown scheme {name!r}; expected one of {[s.value for s in cls]}")

    @property
    def trains(self) -> bool:
        return self in (Scheme.FL, Scheme.CENT, Scheme.LOCAL)


@dataclass(frozen=True)
class RoundSchedule:
    interval_s: float = 0.030
    window_s: float = 0.010

    def __post_init__(self) -> None:
        if not (0 < self.window_s <= self.interval_s):
            raise ValueError("need 0 < window <= interval")
        ratio = self.interval_s / self.window_s
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError(f"interval/window must be a positive integer, got {ratio}")

    @property
    def windows_per_interval(self) -> int:
        return int(round(self.interval_s / self.window_s))


@dataclass(frozen=True)
class LocalReport:
    model: GpdModel
    sample_count: int
    exceedance_count_cum: int


@dataclass(frozen=True)
class GlobalModel:
    model: GpdModel
    mean_exceedance_count: float = 0.0


@dataclass(frozen=True)
class RoundEnergy:
    """Training energy spent in one round, split by who pays."""

    sensor_compute_j: tuple[float, ...]
    sensor_upload_j: tuple[float, ...]
    controller_compute_j: float = 0.0
    n_uploads: int = 0

    @property
    def total_j(self) -> float:
        return sum(self.sensor_compute_j) + sum(self.sensor_upload_j) + self.controller_compute_j


def window_index(sample_instant: float, m: int, sched: RoundSchedule) -> int:
    """1-based window of interval ``m`` covering ``(M(m-1)+O(w-1), M(m-1)+Ow]``."""
    offset = sample_instant - sched.interval_s * (m - 1)
    w = math.ceil(offset / sched.window_s - 1e-9)
    return min(max(w, 1), sched.windows_per_interval)


def extract_window_maxima(
    trace: Iterable[tuple[float, float]], m: int, sched: RoundSchedule
) -> list[float]:
    """Largest exceedance per observation window of interval ``m``.

    ``trace`` holds ``(sample_instant, exceedance)`` pairs; windows without
    an exceedance contribute nothing. Output is ordered by window.
    """
    best: dict[int, float] = {}
    for tau, q in trace:
        if q is None or not q > 0:
            continue
        w = window_index(tau, m, sched)
        if q > best.get(w, -math.inf):
            best[w] = q
    return [best[w] for w in sorted(best)]


def aggregate(reports: Sequence[LocalReport], previous: GpdModel | None = None) -> GlobalModel:
    """Sample-count-weighted average of the local ``(sigma, xi)``.

    Zero-count reports carry no weight; if every count is zero ``previous``
    is kept (falling back to the first report's model).
    """
    if not reports:
        raise ValueError("aggregation needs at least one report")
    mean_count = sum(r.exceedance_count_cum for r in reports) / len(reports)
    total = sum(r.sample_count for r in reports)
    if total == 0:
        model = previous if previous is not None else reports[0].model
        return GlobalModel(model, mean_count)
    sigma = sum(r.sample_count * r.model.sigma for r in reports) / total
    xi = sum(r.sample_count * r.model.xi for r in reports) / total
    return GlobalModel(GpdModel(sigma, xi), mean_count)


def replace_upsilon(q: VirtualQueues, g: GlobalModel, sp: StalenessParams) -> VirtualQueues:
    """Reset the exceedance queue to its model-predicted value."""
    try:
        mean = gpd_mean(g.model)
    except ValueError:
        logger.warning("global model %s has no mean; keeping upsilon=%g", g.model, q.upsilon)
        return q
    return replace(q, upsilon=max(mean - sp.e0, 0.0) * g.mean_exceedance_count)


def round_energy(
    scheme: Scheme,
    sample_counts: Sequence[int],
    cp: ChannelParams,
    tp: TrainingEnergyParams,
    draw_gain: Callable[[int], float],
) -> RoundEnergy:
    """Training energy of one round.

    ``draw_gain(k)`` returns a fresh channel gain (path loss times fading)
    for an upload by sensor ``k``; it is called once per upload, in sensor
    order, so the fading draws are reproducible.

    * FL: each sensor with samples uploads one model and trains locally.
    * CENT: every sample is uploaded; the controller trains on all of them.
    * LOCAL: local training only.
    * NonT, ESA: nothing.
    """
    k_n = len(sample_counts)
    compute = [0.0] * k_n
    upload = [0.0] * k_n
    controller = 0.0
    n_up = 0
    if scheme in (Scheme.FL, Scheme.LOCAL):
        for k, n in enumerate(sample_counts):
            compute[k] = training_compute_energy(n, tp, at_controller=False)
    if scheme is Scheme.FL:
        for k, n in enumerate(sample_counts):
            if n > 0:
                upload[k] = model_upload_energy(draw_gain(k), cp, tp)
                n_up += 1
    elif scheme is Scheme.CENT:
        for k, n in enumerate(sample_counts):
            for _ in range(n):
                upload[k] += model_upload_energy(draw_gain(k), cp, tp)
            n_up += n
        controller = training_compute_energy(sum(sample_counts), tp, at_controller=True)
    return RoundEnergy(tuple(compute), tuple(upload), controller, n_up)
