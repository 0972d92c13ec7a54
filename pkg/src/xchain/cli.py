"""Command-line entry point: run scenarios, sweep parameters, replay attacks.

Outputs are CSV and JSON-lines files; exit codes: 0 success, 1 configuration
error, 2 runtime invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .adversary import AdversarySpec, AdvKind
from .chain import SystemConfig
from .sim import ConfigError, InvariantViolation, Metrics, SimConfig, attack_run, run

OUT_DIR_ENV = "XCHAIN_OUT_DIR"
SWEEP_CAP = 100

METRICS_HEADER = ["name", "n", "p_c", "g", "requests", "gossips", "tasks", "mean_gap", "p99_gap"]
GAPS_HEADER = ["gap", "frequency"]


def default_config_dict() -> dict:
    config = SimConfig()
    system = SystemConfig(system_id=0)
    return {
        "name": config.name,
        "n": config.num_systems,
        "p_c": config.task_rate,
        "g": config.gossip_rate,
        "num_blocks": config.num_blocks,
        "block_interval": config.block_interval,
        "seed": config.seed,
        "topology": config.topology,
        "system": {
            "node_count": system.node_count,
            "quorum": system.quorum,
            "finality_depth": system.finality_depth,
            "adversary_fraction": system.adversary_fraction,
            "view_depth": system.view_depth,
        },
        "adversary": AdversarySpec().to_dict(),
        "expiry_factor": config.expiry_factor,
        "expiry_jitter": config.expiry_jitter,
        "poll_interval": config.poll_interval,
        "push_timer_blocks": config.push_timer_blocks,
        "relay_min_blocks": config.relay_min_blocks,
        "latency_base": config.latency_base,
        "latency_jitter": config.latency_jitter,
        "task_cutoff_margin": config.task_cutoff_margin,
        "drain_cap": config.drain_cap,
        "record_gap_samples": config.record_gap_samples,
        "record_messages": config.record_messages,
        "attack": None,
        "sweep": None,
    }


def config_from_dict(data: dict) -> SimConfig:
    base = default_config_dict()
    unknown = set(data) - set(base) - {"sweep"}
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    merged = {**base, **data}
    system = {**base["system"], **(data.get("system") or {})}
    template = SystemConfig(
        system_id=0,
        node_count=int(system["node_count"]),
        quorum=int(system["quorum"]),
        finality_depth=int(system["finality_depth"]),
        adversary_fraction=float(system["adversary_fraction"]),
        view_depth=int(system["view_depth"]),
    )
    topology = merged["topology"]
    if isinstance(topology, dict):
        topology = {int(k): [int(x) for x in v] for k, v in topology.items()}
    config = SimConfig(
        name=str(merged["name"]),
        num_systems=int(merged["n"]),
        task_rate=float(merged["p_c"]),
        gossip_rate=float(merged["g"]),
        num_blocks=int(merged["num_blocks"]),
        block_interval=int(merged["block_interval"]),
        seed=int(merged["seed"]),
        topology=topology,
        system_template=template,
        adversary=AdversarySpec.from_dict(merged["adversary"] or {}),
        expiry_factor=float(merged["expiry_factor"]),
        expiry_jitter=int(merged["expiry_jitter"]),
        poll_interval=int(merged["poll_interval"]),
        push_timer_blocks=int(merged["push_timer_blocks"]),
        relay_min_blocks=int(merged["relay_min_blocks"]),
        latency_base=int(merged["latency_base"]),
        latency_jitter=int(merged["latency_jitter"]),
        task_cutoff_margin=int(merged["task_cutoff_margin"]),
        drain_cap=int(merged["drain_cap"]),
        record_gap_samples=bool(merged["record_gap_samples"]),
        record_messages=bool(merged["record_messages"]),
        attack_script=merged["attack"],
    )
    config.validate()
    return config


def load_scenario(path: str) -> tuple[dict, list[SimConfig]]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    sweep = data.get("sweep") or {}
    if not sweep:
        return data, [config_from_dict(data)]
    axes = {key: list(values) for key, values in sweep.items() if key in ("n", "p_c", "g")}
    if set(sweep) - set(axes):
        raise ConfigError("sweep supports only the n, p_c and g axes")
    keys = sorted(axes)
    points = list(itertools.product(*(axes[k] for k in keys)))
    if len(points) > SWEEP_CAP:
        raise ConfigError(f"sweep of {len(points)} runs exceeds the cap of {SWEEP_CAP}")
    configs = []
    for point in points:
        merged = {k: v for k, v in data.items() if k != "sweep"}
        merged.update(dict(zip(keys, point)))
        tag = "_".join(f"{k}{v}" for k, v in zip(keys, point))
        merged["name"] = f"{data.get('name', 'sweep')}-{tag}"
        configs.append(config_from_dict(merged))
    return data, configs


def write_metrics_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row["name"],
                    row["n"],
                    f"{row['p_c']:.6f}",
                    f"{row['g']:.6f}",
                    row["requests"],
                    row["gossips"],
                    row["tasks"],
                    f"{row['mean_gap']:.6f}",
                    row["p99_gap"],
                ]
            )


def write_gaps_csv(path: Path, metrics: Metrics) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GAPS_HEADER)
        for gap in sorted(metrics.gap_hist):
            writer.writerow([gap, metrics.gap_hist[gap]])


def write_transcript(path: Path, transcript: list[dict]) -> None:
    with open(path, "w") as fh:
        for event in transcript:
            fh.write(json.dumps(event, sort_keys=True))
            fh.write("\n")


def _run_one(config: SimConfig) -> tuple[dict, Metrics, list[dict]]:
    result = run(config)
    return result.metrics.to_row(config), result.metrics, result.transcript


def cmd_run(args: argparse.Namespace) -> int:
    data, configs = load_scenario(args.scenario)
    if args.seed is not None:
        for config in configs:
            config.seed = args.seed
    out_dir = Path(args.out or os.environ.get(OUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    if args.parallel > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            outputs = list(pool.map(_run_one, configs))
    else:
        outputs = [_run_one(config) for config in configs]
    for config, (row, metrics, transcript) in zip(configs, outputs):
        rows.append(row)
        write_gaps_csv(out_dir / f"{config.name}.gaps.csv", metrics)
        write_transcript(out_dir / f"{config.name}.transcript.jsonl", transcript)
        print(f"{config.name}: requests={row['requests']} gossips={row['gossips']} tasks={row['tasks']}")
    base = data.get("name", Path(args.scenario).stem)
    write_metrics_csv(out_dir / f"{base}.metrics.csv", rows)
    return 0


def cmd_attack(args: argparse.Namespace) -> int:
    _, configs = load_scenario(args.scenario)
    out_dir = Path(args.out or os.environ.get(OUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    status = 0
    for config in configs:
        if config.adversary.kind is AdvKind.NONE:
            raise ConfigError("attack scenario must define an adversary")
        report = attack_run(config)
        path = out_dir / f"{config.name}.report.json"
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"{config.name}: detected={report['detected']} evidence={report['evidence_count']}")
    return status


def cmd_print_config(_args: argparse.Namespace) -> int:
    print(json.dumps(default_config_dict(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xchain",
        description="Cross-chain contract network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario (optionally a sweep)")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help=f"output directory (default ${OUT_DIR_ENV} or .)")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--parallel", type=int, default=1)
    p_run.set_defaults(func=cmd_run)

    p_attack = sub.add_parser("attack", help="run an adversarial scenario")
    p_attack.add_argument("scenario")
    p_attack.add_argument("--out", default=None)
    p_attack.set_defaults(func=cmd_attack)

    p_print = sub.add_parser("print-config", help="dump every default parameter")
    p_print.set_defaults(func=cmd_print_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
