"""Statistics over finished runs: worst-case energy, slice profiles, energy maps."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .topology import UNREACHABLE, Deployment, Topology


@dataclass(frozen=True)
class EnergyReport:
    """Final per-node energies and message counts of one simulation run."""

    energy: np.ndarray   # (n,) float64, energy spent per node
    queues: np.ndarray   # (n,) residual queued messages
    delivered: int
    generated: int
    strategy: str
    trace_seed: int


@dataclass(frozen=True)
class SliceEnergyProfile:
    """Mean energy per sensor, grouped by height (slice index h starts at 1)."""

    heights: np.ndarray      # (H,) 1..H
    counts: np.ndarray       # sensors per slice
    mean_energy: np.ndarray  # mean energy per sensor per slice


def max_energy(report: EnergyReport) -> float:
    """Worst-case energy spent by any single node (the lifespan proxy)."""
    if len(report.energy) == 0:
        raise ValueError("report contains no nodes")
    return float(report.energy.max())


def slice_energy_profile(report: EnergyReport, heights: np.ndarray) -> SliceEnergyProfile:
    """Group reachable nodes by height and average their energies."""
    heights = np.asarray(heights)
    if len(heights) != len(report.energy):
        raise ValueError("heights and report cover different node counts")
    mask = heights != UNREACHABLE
    if not mask.any():
        raise ValueError("no reachable nodes to profile")
    h = heights[mask]
    e = report.energy[mask]
    H = int(h.max())
    counts = np.bincount(h, minlength=H + 1)[1:H + 1]
    sums = np.bincount(h, weights=e, minlength=H + 1)[1:H + 1]
    mean = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    return SliceEnergyProfile(heights=np.arange(1, H + 1),
                              counts=counts.astype(np.int64), mean_energy=mean)


def energy_map(report: EnergyReport, deployment: Deployment) -> np.ndarray:
    """Rows of (x, y, energy), one per sensor, for area-proportional scatter plots."""
    if deployment.n_sensors != len(report.energy):
        raise ValueError("deployment and report cover different node counts")
    return np.column_stack([deployment.sensors, report.energy])


def lifespan_ratio(report_a: EnergyReport, report_b: EnergyReport) -> float:
    """max_energy(a) / max_energy(b); how much faster a burns its hottest node."""
    denom = max_energy(report_b)
    if denom == 0.0:
        raise ValueError("reference report spent no energy")
    return max_energy(report_a) / denom


def _bs_distance(deployment: Deployment) -> np.ndarray:
    """Euclidean distance from each sensor to its nearest base station."""
    d = np.full(deployment.n_sensors, np.inf)
    for pos in deployment.base_stations:
        d = np.minimum(d, np.hypot(deployment.sensors[:, 0] - pos[0],
                                   deployment.sensors[:, 1] - pos[1]))
    return d


def _write_meta(fh, meta: dict | None) -> None:
    if meta:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")


def write_slice_profile_csv(path, profiles: dict[str, SliceEnergyProfile],
                            topology: Topology, meta: dict | None = None) -> None:
    """Wide-format slice table: one mean-energy column per strategy.

    Also carries each slice's mean Euclidean distance to the nearest base
    station, as an alternative proximity axis to the hop-count index.
    """
    labels = list(profiles)
    H = max(len(p.heights) for p in profiles.values())
    base = next(iter(profiles.values()))
    bs_dist = _bs_distance(topology.deployment)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_meta(fh, meta)
        w = csv.writer(fh)
        w.writerow(["height", "count", "mean_bs_distance"]
                   + [f"mean_energy_{lab}" for lab in labels])
        for h in range(1, H + 1):
            at_h = topology.heights == h
            dist = float(bs_dist[at_h].mean()) if at_h.any() else 0.0
            count = int(base.counts[h - 1]) if h <= len(base.counts) else 0
            row = [h, count, f"{dist:.6f}"]
            for lab in labels:
                prof = profiles[lab]
                val = prof.mean_energy[h - 1] if h <= len(prof.heights) else 0.0
                row.append(repr(float(val)))
            w.writerow(row)


def write_energy_map_csv(path, report: EnergyReport, deployment: Deployment,
                         meta: dict | None = None) -> None:
    rows = energy_map(report, deployment)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_meta(fh, meta)
        w = csv.writer(fh)
        w.writerow(["x", "y", "energy"])
        for x, y, e in rows:
            w.writerow([repr(float(x)), repr(float(y)), repr(float(e))])
