"""Radio-layer math: Shannon-rate transmission time, energy, path loss, fading.

All quantities are linear SI units (W, W/Hz, s, J). Conversions from dB/dBm
happen once, in :mod:`aoifl.config`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "TrainingEnergyParams",
    "db_to_linear",
    "dbm_to_watts",
    "transmission_time",
    "transmission_time_derivative",
    "transmission_energy",
    "pathloss_db",
    "draw_fading",
    "training_compute_energy",
    "model_upload_energy",
]

_LN2 = math.log(2.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Radio constants shared by every rate and energy formula.

    ``pathloss_db`` is an attenuation (positive dB); the corresponding linear
    gain is exposed as :attr:`pathloss_gain`.
    """

    payload_bits: float
    bandwidth_hz: float
    noise_psd_w_per_hz: float
    pathloss_db: float
    p_max_w: float

    def __post_init__(self) -> None:
        for name in ("payload_bits", "bandwidth_hz", "noise_psd_w_per_hz", "pathloss_db", "p_max_w"):
            if not getattr(self, name) > 0:
                raise ValueError(f"ChannelParams.{name} must be strictly positive")

    @property
    def noise_power_w(self) -> float:
        return self.noise_psd_w_per_hz * self.bandwidth_hz

    @property
    def pathloss_gain(self) -> float:
        return 10.0 ** (-self.pathloss_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    gain_linear: float

    def __post_init__(self) -> None:
        if not self.gain_linear > 0:
            raise ValueError("channel gain must be positive")


@dataclass(frozen=True)
class TrainingEnergyParams:
    f_cpu_controller: float = 2e11
    f_cpu_sensor: float = 1e9
    n_tr_bits: float = 240.0
    l_req_cycles_per_bit: float = 87.8
    kappa: float = 1e-27

    def __post_init__(self) -> None:
        for name in ("f_cpu_controller", "f_cpu_sensor", "n_tr_bits", "l_req_cycles_per_bit", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"TrainingEnergyParams.{name} must be strictly positive")


def _check_positive(p: float, h: float) -> None:
    if not (p > 0 and h > 0):
        raise ValueError(f"power and gain must be positive (p={p!r}, h={h!r})")


def transmission_time(p: float, h: float, cp: ChannelParams) -> float:
    """Time to push ``cp.payload_bits`` at power ``p`` over gain ``h``."""
    _check_positive(p, h)
    snr = h * p / cp.noise_power_w
    # log1p keeps precision for the very low SNRs the controller likes to pick
    return cp.payload_bits * _LN2 / (cp.bandwidth_hz * math.log1p(snr))


def transmission_time_derivative(p: float, h: float, cp: ChannelParams) -> float:
    """d t / d p, always negative."""
    t = transmission_time(p, h, cp)
    n0b = cp.noise_power_w
    return -t * t * cp.bandwidth_hz * h / (cp.payload_bits * (n0b + h * p) * _LN2)


def transmission_energy(p: float, h: float, cp: ChannelParams) -> float:
    return p * transmission_time(p, h, cp)


def pathloss_db(distance_m: float, carrier_ghz: float) -> float:
    """Factory path loss in dB, distance in metres and carrier in GHz."""
    if not (distance_m > 0 and carrier_ghz > 0):
        raise ValueError("distance and carrier frequency must be positive")
    return 32.45 + 31.9 * math.log10(distance_m) + 20.0 * math.log10(carrier_ghz)


def draw_fading(rng: np.random.Generator, size: int | None = None):
    """Rayleigh power gain: unit-mean exponential, one draw per upload."""
    return rng.exponential(1.0, size)


def training_compute_energy(n_samples: int, params: TrainingEnergyParams, at_controller: bool) -> float:
    if n_samples < 0:
        raise ValueError("n_samples must be non-negative")
    f_cpu = params.f_cpu_controller if at_controller else params.f_cpu_sensor
    return n_samples * params.kappa * f_cpu**2 * params.n_tr_bits * params.l_req_cycles_per_bit


def model_upload_energy(h: float, cp: ChannelParams, tp: TrainingEnergyParams) -> float:
    """Energy of one ``n_tr_bits`` message sent at full power."""
    _check_positive(cp.p_max_w, h)
    snr = h * cp.p_max_w / cp.noise_power_w
    return cp.p_max_w * tp.n_tr_bits * _LN2 / (cp.bandwidth_hz * math.log1p(snr))
