"""Per-node routing decision rules and the transmission cost model.

All decisions are pure functions over value snapshots: the caller supplies
the deciding node's state and its neighbors' states as they were at the
start of the round, and gets back a verdict (forward one hop, or transmit
long-range straight to a base station).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

SINK = -1  # pseudo target: a height-1 node handing its message to the base station


class RoutingFault(RuntimeError):
    """A decision rule hit a state the topology invariants are supposed to forbid."""


@dataclass(frozen=True)
class NodeSnapshot:
    node_id: int
    height: int
    energy_spent: float
    queue_len: int = 0


@dataclass(frozen=True)
class Forward:
    """One-hop transmission to a neighbor (or to the sink when target == SINK)."""

    target: int


@dataclass(frozen=True)
class Direct:
    """Long-range transmission straight to a base station."""


DIRECT = Direct()
TO_SINK = Forward(SINK)

RoutingDecision = Forward | Direct


@dataclass(frozen=True)
class CostModel:
    """Tunable knobs of the potential/cost scheme.

    Defaults reproduce the reference setup: cumulative sum of squared
    heights as the static potential, energy counted at face value, and
    direct transmissions costing height**2.
    """

    epsilon_scale: float = 1.0
    direct_cost_exponent: float = 2.0
    potential_variant: str = "cumulative-sum"


DEFAULT_MODEL = CostModel()


def static_potential(height: int, variant: str = "cumulative-sum",
                     exponent: float = 2.0):
    """Height-derived term of the node potential.

    The default is the cumulative sum 1^2 + 2^2 + ... + height^2, evaluated
    in closed form. The "cubic" variant instead repeats height^2 height
    times (i.e. height**3 at the default exponent).
    """
    if height < 0:
        raise ValueError(f"height must be non-negative, got {height}")
    if variant == "cumulative-sum":
        if exponent == 2.0:
            return height * (height + 1) * (2 * height + 1) // 6
        return float(sum(i ** exponent for i in range(1, height + 1)))
    if variant == "cubic":
        if exponent == 2.0:
            return height ** 3
        return float(height * height ** exponent)
    raise ValueError(f"unknown potential variant: {variant!r}")


def node_potential(snapshot: NodeSnapshot, model: CostModel = DEFAULT_MODEL) -> float:
    """Static potential plus (scaled) energy spent so far."""
    return static_potential(snapshot.height, model.potential_variant,
                            model.direct_cost_exponent) \
        + model.epsilon_scale * snapshot.energy_spent


def transmission_cost(decision: RoutingDecision, height: int,
                      model: CostModel = DEFAULT_MODEL) -> float:
    """Energy spent by the sender: 1 per hop, height**exponent for direct."""
    if isinstance(decision, Forward):
        return 1.0
    if height < 1:
        raise ValueError("direct transmission requires height >= 1")
    return float(height ** model.direct_cost_exponent)


def mixed_gbr_decide(self: NodeSnapshot, neighbors: Sequence[NodeSnapshot],
                     model: CostModel = DEFAULT_MODEL) -> RoutingDecision:
    """Forward to the lowest-potential neighbor, or go direct when every
    neighbor sits strictly above the sender's own potential.

    Ties between neighbors break toward the lowest node id; equality with
    the sender's own potential still forwards (only a strictly higher
    minimum triggers the direct transmission). No neighbors at all means
    direct is the only way out.
    """
    if not neighbors:
        return DIRECT
    best = min(neighbors, key=lambda nb: (node_potential(nb, model), nb.node_id))
    if node_potential(best, model) > node_potential(self, model):
        return DIRECT
    return Forward(best.node_id)


def standard_gbr_decide(self: NodeSnapshot,
                        neighbors: Sequence[NodeSnapshot]) -> RoutingDecision:
    """Forward to the lower-height neighbor that has spent the least energy.

    Ties break toward the lowest node id. A height-1 node has no lower
    sensor neighbor and hands the message to its base station instead;
    anything else without a lower neighbor violates the height gradient and
    raises RoutingFault. Never transmits direct.
    """
    lower = [nb for nb in neighbors if nb.height < self.height]
    if lower:
        best = min(lower, key=lambda nb: (nb.energy_spent, nb.node_id))
        return Forward(best.node_id)
    if self.height == 1:
        return TO_SINK
    raise RoutingFault(
        f"node {self.node_id} at height {self.height} has no lower neighbor")


def randomized_decide(self: NodeSnapshot, neighbors: Sequence[NodeSnapshot],
                      probs: "DirectProbabilities", rng) -> RoutingDecision:
    """Direct with the per-height probability, otherwise standard forwarding.

    `rng` is anything with a random() method returning uniforms in [0, 1).
    """
    p = probs.for_height(self.height)
    if rng.random() < p:
        return DIRECT
    return standard_gbr_decide(self, neighbors)


@dataclass(frozen=True)
class DirectProbabilities:
    """Per-height chances of sending direct: p[h-1] applies at height h."""

    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        for h, x in enumerate(self.p, start=1):
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"probability for height {h} out of [0,1]: {x}")

    @property
    def max_height(self) -> int:
        return len(self.p)

    def for_height(self, height: int) -> float:
        if not 1 <= height <= len(self.p):
            raise ValueError(f"no probability defined for height {height}")
        return self.p[height - 1]

    def to_json(self) -> str:
        return json.dumps(list(self.p))

    @classmethod
    def from_json(cls, text: str) -> "DirectProbabilities":
        return cls(tuple(json.loads(text)))
