"""Offline minimax balancing of per-slice direct-send probabilities.

The network is abstracted to slices (all sensors sharing a height): each
slice generates messages at a fixed rate, forwards a fraction of its
through-traffic one slice down at cost 1 per message, and sends the rest
direct at cost height**2. The solver picks the per-slice direct fractions
that minimize the worst per-sensor average energy per round, assuming flow
is arbitrarily splittable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .protocols import DirectProbabilities
from .topology import UNREACHABLE, Topology


class OptimizerError(RuntimeError):
    """Balancing search failed to converge."""


@dataclass(frozen=True)
class SliceProfile:
    """Per-height sensor counts and message generation rates (index h-1)."""

    populations: tuple[int, ...]
    generation_rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "populations", tuple(int(n) for n in self.populations))
        object.__setattr__(self, "generation_rates",
                           tuple(float(r) for r in self.generation_rates))
        if len(self.populations) != len(self.generation_rates):
            raise ValueError("populations and generation_rates must align")
        if len(self.populations) == 0:
            raise ValueError("profile needs at least one slice")
        if any(n < 0 for n in self.populations):
            raise ValueError("populations must be non-negative")
        if any(r < 0 for r in self.generation_rates):
            raise ValueError("generation rates must be non-negative")

    @property
    def max_height(self) -> int:
        return len(self.populations)

    @classmethod
    def uniform(cls, populations: Sequence[int]) -> "SliceProfile":
        """Every sensor equally likely to generate: rate_h = n_h / total."""
        total = sum(populations)
        if total == 0:
            raise ValueError("profile has no sensors")
        rates = tuple(n / total for n in populations)
        return cls(tuple(populations), rates)


@dataclass(frozen=True)
class SliceFlow:
    """Steady-state per-round traffic and energy implied by a probability vector."""

    through: tuple[float, ...]          # messages/round entering each slice
    direct_fraction: tuple[float, ...]  # the probabilities evaluated
    slice_energy: tuple[float, ...]     # energy/round per sensor (0 for empty slices)


def slice_profile_from_topology(topology: Topology) -> SliceProfile:
    """Count sensors per height; unreachable nodes neither count nor generate."""
    heights = topology.heights
    reachable = heights[heights != UNREACHABLE]
    if len(reachable) == 0:
        raise ValueError("topology has no reachable nodes")
    H = int(reachable.max())
    counts = np.bincount(reachable, minlength=H + 1)[1:H + 1]
    return SliceProfile.uniform(tuple(int(c) for c in counts))


def evaluate_slice_energies(profile: SliceProfile,
                            probs: DirectProbabilities) -> SliceFlow:
    """Propagate flow from the top slice down and price each slice's traffic."""
    H = profile.max_height
    if probs.max_height < H:
        raise ValueError(
            f"probabilities cover heights 1..{probs.max_height}, profile needs 1..{H}")
    through = [0.0] * H
    energy = [0.0] * H
    forwarded = 0.0
    for h in range(H, 0, -1):
        flow = profile.generation_rates[h - 1] + forwarded
        through[h - 1] = flow
        p = probs.p[h - 1]
        forwarded = (1.0 - p) * flow
        n = profile.populations[h - 1]
        if n > 0:
            energy[h - 1] = flow * (p * h * h + (1.0 - p)) / n
    return SliceFlow(through=tuple(through),
                     direct_fraction=tuple(probs.p[:H]),
                     slice_energy=tuple(energy))


def _greedy_feasible(profile: SliceProfile, target: float) -> list[float] | None:
    """Direct fractions keeping every slice at or below `target`, or None.

    Works from the top slice down, pushing each slice's direct fraction as
    high as its own budget allows (capped at 1). That minimizes the flow
    reaching every lower slice, so if this pass busts some slice's budget no
    assignment can stay within it. Empty slices pass their flow through.
    """
    H = profile.max_height
    slack = 1.0 + 1e-12
    p = [0.0] * H
    forwarded = 0.0
    for h in range(H, 0, -1):
        flow = profile.generation_rates[h - 1] + forwarded
        n = profile.populations[h - 1]
        if n == 0 or flow == 0.0:
            forwarded = flow
            continue
        if flow / n > target * slack:
            return None  # even pure forwarding exceeds the budget here
        if h > 1:
            cap = (target * n / flow - 1.0) / (h * h - 1.0)
            p[h - 1] = min(1.0, max(0.0, cap))
        forwarded = (1.0 - p[h - 1]) * flow
    return p


def solve_balanced_probabilities(profile: SliceProfile, tolerance: float,
                                 max_iterations: int = 200) -> DirectProbabilities:
    """Minimize the maximum per-sensor slice energy over all direct fractions.

    Binary search on the target energy level; feasibility of a level is
    decided by the greedy top-down pass, and is monotone in the target, so
    the bracket always keeps an infeasible floor and a feasible ceiling.
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    H = profile.max_height
    zeros = DirectProbabilities((0.0,) * H)
    hi = max(evaluate_slice_energies(profile, zeros).slice_energy)
    if hi == 0.0:
        return zeros  # nothing flows, nothing to balance
    if _greedy_feasible(profile, hi) is None:
        raise OptimizerError("pure forwarding level unexpectedly infeasible")
    lo = 0.0
    for _ in range(max_iterations):
        if hi - lo <= tolerance:
            break
        mid = 0.5 * (lo + hi)
        if _greedy_feasible(profile, mid) is not None:
            hi = mid
        else:
            lo = mid
    else:
        raise OptimizerError(
            f"bracket [{lo}, {hi}] did not shrink below {tolerance} "
            f"within {max_iterations} iterations")
    best = _greedy_feasible(profile, hi)
    if best is None:
        raise OptimizerError("feasible ceiling lost during search")
    return DirectProbabilities(tuple(best))
