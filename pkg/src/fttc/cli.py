"""Command-line experiment runner.

Writes one metrics CSV per (protocol, seed), a ranked head-plan table per
trajectory-clustering run, ``summary.csv`` and ``metadata.json``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .network import RNG_ALGORITHM, NetworkConfig, Position, validate_config
from .sim import (BASELINE, FTTC, PROTOCOLS, RoundMetrics, Simulation, lifetime_summary,
                  parse_fault_script)
from .trajcluster import HeadPlan

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class ConfigFileError(ValueError):
    """Config file problem; ``kind`` is parse_error, unknown_key or invalid_value."""

    def __init__(self, kind: str, message: str, line: int | None = None):
        self.kind = kind
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{kind}: {where}{message}")


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_period(text):
    if text.lower() in ("inf", "infinity", "never"):
        return math.inf
    return int(text)


def _optional_float(text):
    return None if text.lower() in ("", "auto", "none") else float(text)


_KEYS = {
    "n_nodes": int,
    "field_side": float,
    "base_station_x": float,
    "base_station_y": float,
    "comm_range": float,
    "bs_range": _optional_float,
    "initial_energy": float,
    "message_bits": int,
    "recluster_period": _parse_period,
    "ft_depth": int,
    "rotation": _parse_bool,
    "n_clusters": int,
    "fallback_clusters": int,
    "rng_seed": int,
    "max_rounds": int,
}


def parse_config(text: str) -> NetworkConfig:
    """Parse flat ``key = value`` lines; missing keys keep their defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError("parse_error", f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _KEYS:
            raise ConfigFileError("unknown_key", f"unknown key {key!r}", lineno)
        try:
            values[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigFileError("parse_error", f"{key}: {exc}", lineno) from None

    bx = values.pop("base_station_x", None)
    by = values.pop("base_station_y", None)
    config = NetworkConfig(**values)
    if bx is not None or by is not None:
        default = config.base_station
        config.base_station = Position(default.x if bx is None else bx, default.y if by is None else by)
    errors = validate_config(config)
    if errors:
        raise ConfigFileError("invalid_value", "; ".join(map(str, errors)))
    return config


def load_config(path: str | os.PathLike) -> NetworkConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


@dataclass
class RunSpec:
    config: NetworkConfig
    protocols: Sequence[str] = (FTTC,)
    seeds: Sequence[int] = (0,)
    fault_script_path: str | None = None
    output_dir: str = "out"
    workers: int = 1
    faults: dict[int, list[int]] = field(default_factory=dict)


def _g(x: float) -> str:
    return format(x, ".9g")


def metrics_csv(metrics: Sequence[RoundMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["round", "alive", "packets_cum", "residual_j", "heads"])
    for m in metrics:
        w.writerow([m.round, m.alive, m.packets_delivered_cum, _g(m.total_residual_j),
                    ";".join(map(str, sorted(m.heads)))])
    return buf.getvalue()


def priority_csv(plans: Sequence[HeadPlan]) -> str:
    """Ranked head plans: rank, head ids, members per head, expected lifetime."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "heads", "members_per_head", "expected_lifetime_rounds"])
    for p in plans:
        w.writerow([p.rank, ";".join(map(str, p.head_node_ids)),
                    ";".join(str(p.members_per_head[h]) for h in p.head_node_ids),
                    p.expected_lifetime_rounds])
    return buf.getvalue()


def _write_atomic(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _run_one(config: NetworkConfig, protocol: str, seed: int, faults, out: Path) -> dict:
    sim = Simulation(config.replace(rng_seed=seed), protocol, faults)
    first_plans = None
    while sim.round < sim.config.max_rounds and any(sim.alive):
        sim.step()
        if first_plans is None and sim.priority_plans:
            first_plans = list(sim.priority_plans)
    _write_atomic(out / f"metrics_{protocol}_seed{seed}.csv", metrics_csv(sim.metrics))
    if protocol == FTTC and first_plans:
        _write_atomic(out / f"priority_{protocol}_seed{seed}.csv", priority_csv(first_plans))
    if not sim.metrics:
        return {"protocol": protocol, "seed": seed, "summary": None}
    return {"protocol": protocol, "seed": seed, "summary": lifetime_summary(sim.metrics, sim.n)}


def summary_csv(rows: Sequence[dict], max_rounds: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ("first_death_round", "half_death_round", "last_death_round", "packets_total")
    w.writerow(["protocol", "seed", "first_death", "half_death", "last_death", "packets_total"])

    def show(v):
        return f">{max_rounds}" if v is None else str(v)

    for r in rows:
        s = r["summary"]
        w.writerow([r["protocol"], r["seed"]] + [show(getattr(s, c)) if s else "" for c in cols])
    for protocol in dict.fromkeys(r["protocol"] for r in rows):
        sums = [r["summary"] for r in rows if r["protocol"] == protocol and r["summary"]]
        means = []
        for c in cols:
            vals = [getattr(s, c) for s in sums]
            if not vals:
                means.append("")
            elif any(v is None for v in vals):
                means.append(f">{max_rounds}")
            else:
                means.append(_g(sum(vals) / len(vals)))
        w.writerow([protocol, "mean"] + means)
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, Position):
        return [v.x, v.y]
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def run_experiment(spec: RunSpec) -> int:
    """Run every (protocol, seed) pair and write the CSVs. Returns an exit code."""
    try:
        if not spec.seeds:
            raise ValueError("at least one seed is required")
        bad = [p for p in spec.protocols if p not in PROTOCOLS]
        if bad:
            raise ValueError(f"unknown protocol(s): {', '.join(bad)}")
        faults = dict(spec.faults)
        if spec.fault_script_path:
            faults = parse_fault_script(Path(spec.fault_script_path).read_text(encoding="utf-8"))
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        jobs = [(p, s) for p in spec.protocols for s in spec.seeds]
        if spec.workers > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(spec.workers) as pool:
                rows = list(pool.map(_run_one, *zip(*[(spec.config, p, s, faults, out) for p, s in jobs])))
        else:
            rows = [_run_one(spec.config, p, s, faults, out) for p, s in jobs]
        _write_atomic(out / "summary.csv", summary_csv(rows, spec.config.max_rounds))
        meta = {
            "rng_algorithm": RNG_ALGORITHM,
            "protocols": list(spec.protocols),
            "seeds": list(spec.seeds),
            "config": {k: _json_value(v) for k, v in vars(spec.config).items() if k != "rng_seed"},
            "uncharged_energy": ["hello packets", "cluster broadcasts", "idle listening"],
            "baseline": "uniform random heads per epoch; stand-in for an unpublished comparator",
        }
        _write_atomic(out / "metadata.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds or any(not 0 <= s < 2**64 for s in seeds):
        raise argparse.ArgumentTypeError("seeds must be non-empty 64-bit unsigned integers")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fttc-sim", description="Sensor-network lifetime experiments.")
    ap.add_argument("--config", help="key = value config file (defaults if omitted)")
    ap.add_argument("--protocol", choices=[FTTC, BASELINE, "both"], default="both")
    ap.add_argument("--seeds", type=_seed_list, default=None, help="comma-separated seeds")
    ap.add_argument("--faults", help="fault script with 'kill <round> <node_id>' lines")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--max-rounds", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1, help="parallel runs")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else NetworkConfig()
        if args.max_rounds is not None:
            config = config.replace(max_rounds=args.max_rounds)
            errors = validate_config(config)
            if errors:
                raise ConfigFileError("invalid_value", "; ".join(map(str, errors)))
    except (OSError, ConfigFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    protocols = PROTOCOLS if args.protocol == "both" else (args.protocol,)
    seeds = args.seeds if args.seeds is not None else [config.rng_seed]
    spec = RunSpec(config, protocols, seeds, args.faults, args.out, args.workers)
    return run_experiment(spec)


if __name__ == "__main__":
    sys.exit(main())
