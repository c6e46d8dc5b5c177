"""Discrete-event simulation of sensors uploading status data under DPP power control.

Each sensor samples at Poisson instants; a sample waits in a FIFO until the
previous upload has finished, then the sensor picks a transmit power with the
CCP solver from its current virtual queues. Every ``schedule.interval_s`` the
sensors and the controller run one training round whose behaviour depends on
the scheme:

========  ==================================================================
FL        local TERM step from the global model, count-weighted aggregation,
          exceedance queue replaced from the global model
CENT      window maxima uploaded, pooled MLE at the controller, replacement
LOCAL     local TERM step from the sensor's own model, local replacement
NonT      no training, exceedance queue evolves on its own
ESA       exceedance and violation queues ignored altogether
========  ==================================================================

Events inside one interval only touch sensor-local state, so sensors are
advanced one after another and interval ends act as barriers. Each sensor owns
four random streams (arrivals, fading, CCP start points, training uploads)
spawned from the run seed, so the timeline is a function of ``(seed, config)``
and different schemes see identical arrivals and fading for the same seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .aoi import AoiState, exceedance, procrastinated_time, staleness, update_aoi
from .ccp import TxContext, ccp_solve
from .config import SimConfig
from .evt import GpdModel, local_update, mle_fit
from .federation import (
    GlobalModel,
    LocalReport,
    RoundEnergy,
    Scheme,
    aggregate,
    replace_upsilon,
    round_energy,
    window_index,
)
from .lyapunov import VirtualQueues, update_all
from .phy import draw_fading, transmission_time

__all__ = [
    "TransmissionRecord",
    "RoundRecord",
    "SensorState",
    "ControllerState",
    "SimResult",
    "run",
    "step_transmission",
    "interval_boundary",
    "init_sensors",
]

logger = logging.getLogger(__name__)

# pooled samples the centralised fitter waits for before its first MLE
_CENT_MIN_SAMPLES = 10


@dataclass(frozen=True)
class TransmissionRecord:
    """One completed upload.

    ``gamma``/``upsilon``/``lam`` are the queues the decision was made with,
    ``gain`` and ``p_init`` the remaining solver inputs, so a record can be
    replayed through :func:`aoifl.ccp.ccp_solve`.
    """

    sensor_id: int
    data_index: int
    sample_instant: float
    start_time: float
    procrastinated: float
    gain: float
    p_init: float
    power: float
    tx_time: float
    energy: float
    aoi: float
    staleness: float
    exceedance: float | None
    gamma: float
    upsilon: float
    lam: float
    ccp_iters: int
    ccp_converged: bool


@dataclass(frozen=True)
class RoundRecord:
    interval: int
    end_time: float
    local_models: tuple[GpdModel, ...]
    sample_counts: tuple[int, ...]
    global_model: GpdModel | None
    upsilon_after: tuple[float, ...]
    energy: RoundEnergy


@dataclass
class SensorState:
    sensor_id: int
    arrival_rng: np.random.Generator
    fading_rng: np.random.Generator
    ccp_rng: np.random.Generator
    training_rng: np.random.Generator
    gpd: GpdModel
    aoi: AoiState = field(default_factory=AoiState)
    queues: VirtualQueues = field(default_factory=VirtualQueues)
    next_arrival: float = 0.0
    busy_until: float = 0.0
    last_power: float | None = None
    window_max: dict[int, float] = field(default_factory=dict)
    exceedance_count_cum: int = 0

    def interval_samples(self) -> list[float]:
        return [self.window_max[w] for w in sorted(self.window_max)]


@dataclass
class ControllerState:
    global_model: GpdModel
    pooled: list[float] = field(default_factory=list)


@dataclass
class SimResult:
    config: SimConfig
    records: list[TransmissionRecord]
    rounds: list[RoundRecord]
    sensors: list[SensorState]
    controller: ControllerState

    @property
    def summary(self):
        from .metrics import summarize

        return summarize(self)


def init_sensors(config: SimConfig) -> list[SensorState]:
    seq = np.random.SeedSequence(config.seed)
    sensors = []
    for k, child in enumerate(seq.spawn(config.n_sensors)):
        arr, fad, ccp, trn = (np.random.default_rng(s) for s in child.spawn(4))
        s = SensorState(k, arr, fad, ccp, trn, gpd=config.term.init_model)
        s.next_arrival = arr.exponential(1.0 / config.sampling_rate_hz)
        sensors.append(s)
    return sensors


def step_transmission(sensor: SensorState, now: float, config: SimConfig, m: int) -> TransmissionRecord:
    """Upload the sample taken at ``now`` (the head of the FIFO).

    ``m`` is the training interval the sample instant falls into; it selects
    the observation window for any exceedance.
    """
    cp, sp = config.channel, config.staleness
    track = config.scheme is not Scheme.ESA
    eta = procrastinated_time(sensor.aoi, now)
    h = cp.pathloss_gain * float(draw_fading(sensor.fading_rng))
    q_before = sensor.queues
    if config.ccp.warm_start and sensor.last_power is not None:
        p_init = sensor.last_power
    elif config.ccp.init_policy == "random":
        p_init = cp.p_max_w * (1.0 - sensor.ccp_rng.random())
    else:
        p_init = config.ccp.init_power_w or cp.p_max_w
    ctx = TxContext(eta, h, q_before, cp, sp, config.V, config.rho, track)
    res = ccp_solve(ctx, config.ccp, p_init=p_init)

    p = res.p_star
    t = transmission_time(p, h, cp)
    sensor.aoi = update_aoi(sensor.aoi, now, t)
    a = sensor.aoi.last_aoi
    f = staleness(a, sp)
    q = exceedance(f, sp)
    sensor.queues = update_all(q_before, f, q, sp, track_extremes=track)
    if q is not None:
        sensor.exceedance_count_cum += 1
        w = window_index(now, m, config.schedule)
        if q > sensor.window_max.get(w, -math.inf):
            sensor.window_max[w] = q
    start = max(now, sensor.busy_until)
    sensor.busy_until = start + t
    sensor.last_power = p
    return TransmissionRecord(
        sensor_id=sensor.sensor_id,
        data_index=sensor.aoi.data_index,
        sample_instant=now,
        start_time=start,
        procrastinated=eta,
        gain=h,
        p_init=p_init,
        power=p,
        tx_time=t,
        energy=p * t,
        aoi=a,
        staleness=f,
        exceedance=q,
        gamma=q_before.gamma,
        upsilon=q_before.upsilon,
        lam=q_before.lam,
        ccp_iters=res.iters,
        ccp_converged=res.converged,
    )


def interval_boundary(
    sensors: list[SensorState], controller: ControllerState, m: int, config: SimConfig
) -> RoundRecord:
    """Training round at the end of interval ``m``; resets the window maxima."""
    scheme = config.scheme
    sp = config.staleness
    samples = [s.interval_samples() for s in sensors]
    counts = tuple(len(x) for x in samples)
    global_model: GpdModel | None = None

    if scheme is Scheme.FL:
        for s, x in zip(sensors, samples):
            s.gpd = local_update(controller.global_model, x, config.term)
        reports = [LocalReport(s.gpd, n, s.exceedance_count_cum) for s, n in zip(sensors, counts)]
        g = aggregate(reports, previous=controller.global_model)
        controller.global_model = g.model
        for s in sensors:
            s.queues = replace_upsilon(s.queues, g, sp)
        global_model = g.model
    elif scheme is Scheme.CENT:
        new = [q for x in samples for q in x]
        controller.pooled.extend(new)
        if new and len(controller.pooled) >= _CENT_MIN_SAMPLES:
            controller.global_model = mle_fit(controller.pooled, init=controller.global_model, n_starts=2)
        mean_count = sum(s.exceedance_count_cum for s in sensors) / len(sensors)
        g = GlobalModel(controller.global_model, mean_count)
        for s in sensors:
            s.gpd = controller.global_model
            s.queues = replace_upsilon(s.queues, g, sp)
        global_model = g.model
    elif scheme is Scheme.LOCAL:
        for s, x in zip(sensors, samples):
            s.gpd = local_update(s.gpd, x, config.term)
            s.queues = replace_upsilon(s.queues, GlobalModel(s.gpd, float(s.exceedance_count_cum)), sp)

    energy = round_energy(
        scheme,
        counts,
        config.channel,
        config.training_energy,
        lambda k: config.channel.pathloss_gain * float(draw_fading(sensors[k].training_rng)),
    )
    for s in sensors:
        s.window_max.clear()
    return RoundRecord(
        interval=m,
        end_time=m * config.schedule.interval_s,
        local_models=tuple(s.gpd for s in sensors),
        sample_counts=counts,
        global_model=global_model,
        upsilon_after=tuple(s.queues.upsilon for s in sensors),
        energy=energy,
    )


def run(config: SimConfig) -> SimResult:
    """Simulate ``config.horizon_s`` seconds; deterministic given the config."""
    sensors = init_sensors(config)
    controller = ControllerState(config.term.init_model)
    records: list[TransmissionRecord] = []
    rounds: list[RoundRecord] = []
    interval = config.schedule.interval_s
    n_intervals = math.ceil(config.horizon_s / interval - 1e-9)
    mean_gap = 1.0 / config.sampling_rate_hz

    for m in range(1, n_intervals + 1):
        end = min(m * interval, config.horizon_s)
        for s in sensors:
            while s.next_arrival <= end:
                records.append(step_transmission(s, s.next_arrival, config, m))
                s.next_arrival += s.arrival_rng.exponential(mean_gap)
        rounds.append(interval_boundary(sensors, controller, m, config))

    diverged = [s.sensor_id for s in sensors if s.queues.gamma > 1e3 * config.staleness.f0 * max(s.aoi.data_index, 1)]
    if diverged:
        logger.warning("staleness queue diverging for sensors %s", diverged)
    return SimResult(config, records, rounds, sensors, controller)
