"""Command-line entry point: ``run``, ``sweep`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .config import ConfigError, config_items, load_config
from .federation import Scheme
from .metrics import write_records_csv, write_rounds_csv, write_summary_csv
from .phy import transmission_energy, transmission_time
from .sweep import SweepSpec, sweep

__all__ = ["main", "build_parser"]


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _schemes(text: str) -> tuple[Scheme, ...]:
    try:
        return tuple(Scheme.parse(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aoifl", description="AoI-aware federated power control simulator")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one configuration")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", type=Path, default=Path("."), help="output directory (default: cwd)")

    s = sub.add_parser("sweep", help="sweep V or rho over schemes and seeds")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--var", required=True, choices=("V", "rho"))
    s.add_argument("--values", required=True, type=_floats, help="comma-separated")
    s.add_argument("--schemes", type=_schemes, default=tuple(Scheme), help="comma-separated (default: all)")
    s.add_argument("--seeds", type=_ints, default=(0, 1, 2, 3, 4), help="comma-separated (default: 0-4)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", type=Path, default=Path("."))

    v = sub.add_parser("validate", help="check a config and print derived constants")
    v.add_argument("--config", required=True, type=Path)
    return ap


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    from .engine import run

    result = run(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    write_records_csv(result.records, args.out / "records.csv")
    write_rounds_csv(result.rounds, args.out / "rounds.csv")
    s = result.summary
    write_summary_csv([s], args.out / "summary.csv")
    print(f"{s.scheme} seed={s.seed}: objective={s.entropic_objective:.6g} J  E_sys={s.mean_E_sys:.6g} J  "
          f"exceedance_freq={s.exceedance_frequency:.4f}  records={s.n_records}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    spec = SweepSpec(args.var, args.values, args.schemes, args.seeds)
    report = sweep(spec, cfg, workers=args.workers)
    agg, long = report.write(args.out)
    failed = sum(c.summary is None for c in report.cells)
    print(f"wrote {agg} and {long}; {len(report.cells) - failed} runs ok, {failed} failed")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    cp, sp = cfg.channel, cfg.staleness
    h = cp.pathloss_gain
    snr = h * cp.p_max_w / cp.noise_power_w
    for name, value in config_items(cfg):
        print(f"{name} = {value}")
    print("-- derived --")
    print(f"pathloss_db = {cp.pathloss_db:.4f}")
    print(f"noise_power_w = {cp.noise_power_w:.6g}")
    print(f"snr_at_p_max = {snr:.6g}")
    print(f"max_spectral_efficiency_bps_per_hz = {math.log2(1 + snr):.6g}")
    print(f"max_rate_bps = {cp.bandwidth_hz * math.log2(1 + snr):.6g}")
    print(f"tx_time_at_p_max_s = {transmission_time(cp.p_max_w, h, cp):.6g}")
    print(f"tx_energy_at_p_max_j = {transmission_energy(cp.p_max_w, h, cp):.6g}")
    print(f"aoi_threshold_s = {sp.aoi_threshold:.6g}")
    if transmission_time(cp.p_max_w, h, cp) >= sp.aoi_threshold:
        print("warning: even full power at mean fading misses the AoI threshold", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
