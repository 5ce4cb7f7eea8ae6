"""Experiment driver wiring deployment, optimization, simulation, and metrics.

Configuration comes from (in increasing precedence) dataclass defaults, a
named preset, a JSON config file, and command-line flags. Every output
file embeds the fully resolved configuration so runs can be reproduced
bit-for-bit.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .engine import (ConservationError, EventTrace, MixedGBR, Randomized,
                     StandardGBR, run_comparison)
from .metrics import max_energy, slice_energy_profile, write_energy_map_csv, \
    write_slice_profile_csv
from .optimizer import OptimizerError, slice_profile_from_topology, \
    solve_balanced_probabilities
from .protocols import CostModel, RoutingFault
from .topology import build_topology, deploy_uniform_disc, load_topology, \
    save_topology

STRATEGY_NAMES = ("standard", "mixed", "randomized")

PRESETS: dict[str, dict] = {
    # reference scenario: R=20 disc, ~3769 sensors, two base stations,
    # five million rounds
    "paper": {
        "radius": 20.0,
        "density": 3.0,
        "bs_positions": ((-10.0, 0.0), (10.0, 0.0)),
        "comm_radius": 1.0,
        "n_rounds": 5_000_000,
        "topology_seed": 1,
        "trace_seed": 2,
        "decision_seed": 3,
        "strategies": ("standard", "mixed", "randomized"),
    },
    # shrunken version of the same geometry for fast checks
    "desk": {
        "radius": 8.0,
        "density": 3.0,
        "bs_positions": ((-4.0, 0.0), (4.0, 0.0)),
        "comm_radius": 1.0,
        "n_rounds": 100_000,
        "topology_seed": 1,
        "trace_seed": 2,
        "decision_seed": 3,
        "strategies": ("standard", "mixed", "randomized"),
    },
}


@dataclass
class ExperimentConfig:
    radius: float = 20.0
    density: float = 3.0
    n_sensors: int | None = None  # defaults to floor(density * pi * radius^2)
    bs_positions: tuple = ((-10.0, 0.0), (10.0, 0.0))
    comm_radius: float = 1.0
    n_rounds: int = 5_000_000
    topology_seed: int | None = None
    trace_seed: int | None = None
    decision_seed: int | None = None
    strategies: tuple = ("standard", "mixed", "randomized")
    epsilon_scale: float = 1.0
    direct_cost_exponent: float = 2.0
    potential_variant: str = "cumulative-sum"
    output_dir: str = "results"
    topology_file: str | None = None  # reuse an emitted topology.json
    check_every: int = 1000
    optimizer_tolerance: float = 1e-12

    def resolved_n_sensors(self) -> int:
        if self.n_sensors is not None:
            return int(self.n_sensors)
        return int(math.floor(self.density * math.pi * self.radius ** 2))

    def cost_model(self) -> CostModel:
        return CostModel(epsilon_scale=self.epsilon_scale,
                         direct_cost_exponent=self.direct_cost_exponent,
                         potential_variant=self.potential_variant)

    def to_dict(self) -> dict:
        """Experiment parameters only: file locations stay out of the
        reproducibility headers so reruns compare byte-for-byte."""
        doc = asdict(self)
        del doc["output_dir"]
        del doc["topology_file"]
        doc["bs_positions"] = [list(p) for p in self.bs_positions]
        doc["strategies"] = list(self.strategies)
        doc["n_sensors"] = self.resolved_n_sensors()
        return doc


def validate_config(config: ExperimentConfig) -> list[str]:
    """Collect violations; entries prefixed "warning:" do not block a run."""
    bad: list[str] = []
    if config.radius <= 0:
        bad.append(f"radius must be positive, got {config.radius}")
    if config.density <= 0:
        bad.append(f"density must be positive, got {config.density}")
    if config.comm_radius <= 0:
        bad.append(f"comm_radius must be positive, got {config.comm_radius}")
    if config.n_rounds < 0:
        bad.append(f"n_rounds must be non-negative, got {config.n_rounds}")
    if config.n_sensors is not None and config.n_sensors < 0:
        bad.append(f"n_sensors must be non-negative, got {config.n_sensors}")
    if config.topology_seed is None and config.topology_file is None:
        bad.append("topology_seed is required (or supply topology_file)")
    for name in ("trace_seed", "decision_seed"):
        if getattr(config, name) is None:
            bad.append(f"{name} is required")
    for name in ("topology_seed", "trace_seed", "decision_seed"):
        seed = getattr(config, name)
        if seed is not None and seed < 0:
            bad.append(f"{name} must be non-negative, got {seed}")
    if len(config.strategies) == 0:
        bad.append("at least one strategy must be selected")
    for s in config.strategies:
        if s not in STRATEGY_NAMES:
            bad.append(f"unknown strategy {s!r}; pick from {STRATEGY_NAMES}")
    if len(config.bs_positions) == 0:
        bad.append("at least one base station is required")
    for x, y in config.bs_positions:
        if math.hypot(x, y) > config.radius:
            bad.append(f"warning: base station ({x}, {y}) lies outside the "
                       f"dispersal disc of radius {config.radius}")
    if config.potential_variant not in ("cumulative-sum", "cubic"):
        bad.append(f"unknown potential_variant {config.potential_variant!r}")
    if config.epsilon_scale < 0:
        bad.append(f"epsilon_scale must be non-negative, got {config.epsilon_scale}")
    if config.direct_cost_exponent <= 0:
        bad.append("direct_cost_exponent must be positive")
    if config.check_every < 0:
        bad.append("check_every must be non-negative")
    if config.optimizer_tolerance <= 0:
        bad.append("optimizer_tolerance must be positive")
    return bad


def _build_strategies(config: ExperimentConfig, topology):
    """Instantiate strategy objects; the randomized one needs the solver."""
    probs = None
    if "randomized" in config.strategies:
        profile = slice_profile_from_topology(topology)
        probs = solve_balanced_probabilities(profile, config.optimizer_tolerance)
    out = []
    for name in config.strategies:
        if name == "standard":
            out.append(StandardGBR())
        elif name == "mixed":
            out.append(MixedGBR())
        else:
            out.append(Randomized(probs))
    return out, probs


def _summary(config: ExperimentConfig, reports) -> dict:
    per_strategy = {}
    for rep in reports:
        per_strategy[rep.strategy] = {
            "max_energy": max_energy(rep),
            "delivered": rep.delivered,
            "generated": rep.generated,
            "queued": int(rep.queues.sum()),
        }
    ratios = {}
    labels = [rep.strategy for rep in reports]
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            denom = per_strategy[b]["max_energy"]
            key = f"{a}_over_{b}"
            ratios[key] = per_strategy[a]["max_energy"] / denom if denom else None
    return {"config": config.to_dict(), "strategies": per_strategy,
            "ratios": ratios}


def _print_summary(summary: dict) -> None:
    print(f"{'strategy':<12} {'max_energy':>14} {'delivered':>12} {'generated':>12}")
    for label, row in summary["strategies"].items():
        print(f"{label:<12} {row['max_energy']:>14.1f} "
              f"{row['delivered']:>12} {row['generated']:>12}")
    if summary["ratios"]:
        print("max-energy ratios:")
        for key, val in summary["ratios"].items():
            a, b = key.split("_over_")
            shown = f"{val:.3f}" if val is not None else "n/a"
            print(f"  {a}/{b} = {shown}")


def run_experiment(config: ExperimentConfig) -> int:
    """Run the configured experiment; 0 ok, 1 bad config, 2 runtime fault."""
    issues = validate_config(config)
    fatal = [v for v in issues if not v.startswith("warning:")]
    for warning in issues:
        if warning.startswith("warning:"):
            print(warning, file=sys.stderr)
    if fatal:
        for v in fatal:
            print(f"config error: {v}", file=sys.stderr)
        return 1

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config": config.to_dict()}

    try:
        if config.topology_file is not None:
            topology = load_topology(config.topology_file)
        else:
            deployment = deploy_uniform_disc(
                config.resolved_n_sensors(), config.radius,
                config.bs_positions, config.topology_seed)
            topology = build_topology(deployment, config.comm_radius)
        if len(topology.reachable_ids) == 0:
            print("runtime fault: no sensor can reach a base station",
                  file=sys.stderr)
            return 2

        strategies, probs = _build_strategies(config, topology)
        save_topology(topology, out / "topology.json", extra=meta)
        if probs is not None:
            with open(out / "probabilities.json", "w", encoding="utf-8") as fh:
                json.dump({"probabilities": list(probs.p), **meta}, fh,
                          sort_keys=True, indent=2)
                fh.write("\n")

        trace = EventTrace.for_topology(topology, config.trace_seed,
                                        config.n_rounds)
        reports = run_comparison(topology, strategies, trace,
                                 decision_seed=config.decision_seed,
                                 model=config.cost_model(),
                                 check_every=config.check_every)

        profiles = {rep.strategy: slice_energy_profile(rep, topology.heights)
                    for rep in reports}
        write_slice_profile_csv(out / "slice_profile.csv", profiles, topology,
                                meta)
        for rep in reports:
            write_energy_map_csv(out / f"energy_map_{rep.strategy}.csv", rep,
                                 topology.deployment, meta)
        summary = _summary(config, reports)
        with open(out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, sort_keys=True, indent=2)
            fh.write("\n")
        _print_summary(summary)
    except (RoutingFault, ConservationError, OptimizerError, ValueError) as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return 2
    return 0


def _parse_bs(values: list[str]) -> tuple:
    out = []
    for text in values:
        x, y = text.split(",")
        out.append((float(x), float(y)))
    return tuple(out)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    merged: dict = {}
    if args.preset:
        merged.update(PRESETS[args.preset])
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "bs_positions" in doc:
            doc["bs_positions"] = tuple(tuple(p) for p in doc["bs_positions"])
        if "strategies" in doc:
            doc["strategies"] = tuple(doc["strategies"])
        merged.update(doc)

    overrides = {
        "radius": args.radius,
        "density": args.density,
        "n_sensors": args.n_sensors,
        "comm_radius": args.comm_radius,
        "n_rounds": args.n_rounds,
        "topology_seed": args.seed_topology,
        "trace_seed": args.seed_trace,
        "decision_seed": args.seed_decision,
        "topology_file": args.topology_file,
        "output_dir": args.output_dir,
    }
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    if args.bs:
        merged["bs_positions"] = _parse_bs(args.bs)
    if args.strategy:
        merged["strategies"] = tuple(args.strategy)
    return ExperimentConfig(**merged)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gbrsim",
        description="Discrete-round data-propagation experiments on random "
                    "sensor deployments")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a full experiment")
    run_p.add_argument("--preset", choices=sorted(PRESETS))
    run_p.add_argument("--config", help="JSON file with config fields")
    run_p.add_argument("--radius", type=float)
    run_p.add_argument("--density", type=float)
    run_p.add_argument("--sensors", type=int, dest="n_sensors")
    run_p.add_argument("--bs", action="append", metavar="X,Y",
                       help="base station position, repeatable")
    run_p.add_argument("--comm-radius", type=float)
    run_p.add_argument("--rounds", type=int, dest="n_rounds")
    run_p.add_argument("--seed-topology", type=int)
    run_p.add_argument("--seed-trace", type=int)
    run_p.add_argument("--seed-decision", type=int)
    run_p.add_argument("--strategy", action="append", choices=STRATEGY_NAMES,
                       help="strategy to run, repeatable")
    run_p.add_argument("--topology", dest="topology_file",
                       help="reuse an emitted topology.json instead of deploying")
    run_p.add_argument("--out", dest="output_dir")

    args = parser.parse_args(argv)
    try:
        config = build_config(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run_experiment(config)


if __name__ == "__main__":
    sys.exit(main())
