"""Experiment configuration and its INI-style file format.

A config file is a set of ``[section]`` blocks with ``key = value`` lines.
Values may carry a unit suffix (``23 dBm``, ``180 kHz``, ``3000 bytes``,
``30 ms``); logarithmic units are converted to linear SI here and nowhere
else. Missing keys fall back to the defaults below, which reproduce the
numerical setup of the reference scenario at desk scale (10 sensors, 30 s).
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .aoi import StalenessParams
from .ccp import CcpSettings
from .evt import GpdModel, TermSettings
from .federation import RoundSchedule, Scheme
from .phy import ChannelParams, TrainingEnergyParams, dbm_to_watts, pathloss_db

__all__ = ["SimConfig", "ConfigError", "default_channel", "load_config", "parse_config", "parse_quantity"]


class ConfigError(ValueError):
    pass


def default_channel() -> ChannelParams:
    return ChannelParams(
        payload_bits=3000 * 8,
        bandwidth_hz=180e3,
        noise_psd_w_per_hz=dbm_to_watts(-174.0),
        pathloss_db=pathloss_db(20.0, 3.5),
        p_max_w=dbm_to_watts(23.0),
    )


@dataclass(frozen=True)
class SimConfig:
    n_sensors: int = 10
    horizon_s: float = 30.0
    sampling_rate_hz: float = 50.0
    scheme: Scheme = Scheme.FL
    V: float = 1e-5
    rho: float = 2.0
    seed: int = 0
    burn_in_fraction: float = 0.1
    channel: ChannelParams = field(default_factory=default_channel)
    staleness: StalenessParams = field(default_factory=StalenessParams)
    schedule: RoundSchedule = field(default_factory=RoundSchedule)
    ccp: CcpSettings = field(default_factory=CcpSettings)
    term: TermSettings = field(default_factory=TermSettings)
    training_energy: TrainingEnergyParams = field(default_factory=TrainingEnergyParams)

    def __post_init__(self) -> None:
        if self.n_sensors < 1:
            raise ConfigError("n_sensors must be >= 1")
        if not self.horizon_s > 0:
            raise ConfigError("horizon must be positive")
        if not self.sampling_rate_hz > 0:
            raise ConfigError("sampling rate must be positive")
        if self.V < 0:
            raise ConfigError("V must be >= 0")
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if not 0 <= self.burn_in_fraction < 1:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


_SCALE = {
    "time": {"": 1.0, "s": 1.0, "ms": 1e-3, "us": 1e-6},
    "freq": {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "bits": {"": 1.0, "bit": 1.0, "bits": 1.0, "byte": 8.0, "bytes": 8.0, "b": 8.0, "kb": 8e3},
    "length": {"": 1.0, "m": 1.0, "km": 1e3},
    "cycles": {"": 1.0, "cycle/s": 1.0, "hz": 1.0, "cycle/bit": 1.0, "cycles/bit": 1.0},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/]*)\s*$")


def parse_quantity(text: str, kind: str) -> float:
    """Parse ``"<number> [unit]"`` into linear SI units.

    ``kind`` is one of ``time``, ``freq``, ``bits``, ``length``, ``cycles``,
    ``power`` (W, mW, dBm, dBW), ``psd`` (W/Hz, dBm/Hz, dBW/Hz), ``db``
    (attenuation, dB) or ``plain``.
    """
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"cannot parse quantity {text!r}")
    value, unit = float(m.group(1)), m.group(2).lower()
    if kind == "plain":
        if unit:
            raise ConfigError(f"unexpected unit in {text!r}")
        return value
    if kind == "power":
        if unit in ("", "w"):
            return value
        if unit == "mw":
            return value * 1e-3
        if unit == "dbm":
            return dbm_to_watts(value)
        if unit == "dbw":
            return 10.0 ** (value / 10.0)
    elif kind == "psd":
        if unit in ("", "w/hz"):
            return value
        if unit in ("dbm/hz", "dbm"):
            return dbm_to_watts(value)
        if unit in ("dbw/hz", "dbw"):
            return 10.0 ** (value / 10.0)
    elif kind == "db":
        if unit in ("", "db"):
            return value
    elif kind in _SCALE and unit in _SCALE[kind]:
        return value * _SCALE[kind][unit]
    raise ConfigError(f"unit {unit!r} not valid for a {kind} quantity ({text!r})")


def _get(section, key: str, kind: str, default: float) -> float:
    if section is None or key not in section:
        return default
    return parse_quantity(section[key], kind)


def _bool(section, key: str, default: bool) -> bool:
    if section is None or key not in section:
        return default
    return section.getboolean(key)


def _known_keys(cp: configparser.ConfigParser, allowed: dict[str, set[str]]) -> None:
    for name in cp.sections():
        if name not in allowed:
            raise ConfigError(f"unknown section [{name}]")
        extra = set(cp[name]) - allowed[name]
        if extra:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")


_ALLOWED = {
    "sim": {"n_sensors", "horizon", "sampling_rate", "scheme", "v", "rho", "seed", "burn_in_fraction"},
    "channel": {"payload", "bandwidth", "noise_psd", "p_max", "pathloss", "distance", "carrier"},
    "staleness": {"beta", "f0", "e0", "epsilon"},
    "schedule": {"interval", "window"},
    "ccp": {"tol_power", "max_iters", "inner_tol", "init_policy", "init_power", "warm_start", "grid_points"},
    "term": {"tilt", "step_sigma", "step_xi", "init_sigma", "init_xi", "epochs"},
    "training_energy": {"f_cpu_controller", "f_cpu_sensor", "n_tr", "l_req", "kappa"},
}


def parse_config(text: str) -> SimConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    _known_keys(cp, _ALLOWED)
    sec = {name: (cp[name] if cp.has_section(name) else None) for name in _ALLOWED}
    base = SimConfig()

    ch, dch = sec["channel"], base.channel
    if ch is not None and "pathloss" in ch:
        pl = parse_quantity(ch["pathloss"], "db")
    elif ch is not None and ("distance" in ch or "carrier" in ch):
        pl = pathloss_db(_get(ch, "distance", "length", 20.0), _get(ch, "carrier", "freq", 3.5e9) / 1e9)
    else:
        pl = dch.pathloss_db
    try:
        channel = ChannelParams(
            payload_bits=_get(ch, "payload", "bits", dch.payload_bits),
            bandwidth_hz=_get(ch, "bandwidth", "freq", dch.bandwidth_hz),
            noise_psd_w_per_hz=_get(ch, "noise_psd", "psd", dch.noise_psd_w_per_hz),
            pathloss_db=pl,
            p_max_w=_get(ch, "p_max", "power", dch.p_max_w),
        )
        st, dst = sec["staleness"], base.staleness
        staleness = StalenessParams(
            beta=_get(st, "beta", "plain", dst.beta),
            f0=_get(st, "f0", "plain", dst.f0),
            e0=_get(st, "e0", "plain", dst.e0),
            epsilon=_get(st, "epsilon", "plain", dst.epsilon),
        )
        sc, dsc = sec["schedule"], base.schedule
        schedule = RoundSchedule(
            interval_s=_get(sc, "interval", "time", dsc.interval_s),
            window_s=_get(sc, "window", "time", dsc.window_s),
        )
        cc, dcc = sec["ccp"], base.ccp
        init_power = None if cc is None or "init_power" not in cc else parse_quantity(cc["init_power"], "power")
        ccp = CcpSettings(
            tol_power_w=_get(cc, "tol_power", "power", dcc.tol_power_w),
            max_iters=int(_get(cc, "max_iters", "plain", dcc.max_iters)),
            inner_tol=_get(cc, "inner_tol", "plain", dcc.inner_tol),
            init_policy=(cc.get("init_policy", dcc.init_policy) if cc is not None else dcc.init_policy).strip(),
            init_power_w=init_power,
            warm_start=_bool(cc, "warm_start", dcc.warm_start),
            grid_points=int(_get(cc, "grid_points", "plain", dcc.grid_points)),
        )
        tm, dtm = sec["term"], base.term
        term = TermSettings(
            tilt=_get(tm, "tilt", "plain", dtm.tilt),
            step_sigma=_get(tm, "step_sigma", "plain", dtm.step_sigma),
            step_xi=_get(tm, "step_xi", "plain", dtm.step_xi),
            init_model=GpdModel(
                _get(tm, "init_sigma", "plain", dtm.init_model.sigma),
                _get(tm, "init_xi", "plain", dtm.init_model.xi),
            ),
            epochs=int(_get(tm, "epochs", "plain", dtm.epochs)),
        )
        te, dte = sec["training_energy"], base.training_energy
        training = TrainingEnergyParams(
            f_cpu_controller=_get(te, "f_cpu_controller", "cycles", dte.f_cpu_controller),
            f_cpu_sensor=_get(te, "f_cpu_sensor", "cycles", dte.f_cpu_sensor),
            n_tr_bits=_get(te, "n_tr", "bits", dte.n_tr_bits),
            l_req_cycles_per_bit=_get(te, "l_req", "cycles", dte.l_req_cycles_per_bit),
            kappa=_get(te, "kappa", "plain", dte.kappa),
        )
        sm = sec["sim"]
        return SimConfig(
            n_sensors=int(_get(sm, "n_sensors", "plain", base.n_sensors)),
            horizon_s=_get(sm, "horizon", "time", base.horizon_s),
            sampling_rate_hz=_get(sm, "sampling_rate", "freq", base.sampling_rate_hz),
            scheme=Scheme.parse(sm["scheme"]) if sm is not None and "scheme" in sm else base.scheme,
            V=_get(sm, "v", "plain", base.V),
            rho=_get(sm, "rho", "plain", base.rho),
            seed=int(_get(sm, "seed", "plain", base.seed)),
            burn_in_fraction=_get(sm, "burn_in_fraction", "plain", base.burn_in_fraction),
            channel=channel,
            staleness=staleness,
            schedule=schedule,
            ccp=ccp,
            term=term,
            training_energy=training,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def config_items(cfg: SimConfig) -> list[tuple[str, object]]:
    """Flattened ``(dotted.name, value)`` pairs, for reports."""
    out: list[tuple[str, object]] = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if hasattr(v, "__dataclass_fields__"):
            for g in fields(v):
                out.append((f"{f.name}.{g.name}", getattr(v, g.name)))
        elif isinstance(v, Scheme):
            out.append((f.name, v.value))
        else:
            out.append((f.name, v))
    return out
