"""Discrete-round simulation: event generation, simultaneous sends, accounting.

Each round, every sensor holding at least one message transmits exactly one,
deciding from a consistent snapshot of the network taken at the round start.
Transmissions are simultaneous and collision-free; forwarded messages and
the round's freshly generated event become sendable the following round.

Two interchangeable execution paths exist: a reference implementation that
drives the decision functions from `protocols` one call at a time, and a
compiled kernel for long runs. They produce bit-identical results.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import ClassVar, Sequence, Union

import numpy as np

from . import _kernel
from .metrics import EnergyReport
from .protocols import (DEFAULT_MODEL, SINK, CostModel, Direct,
                        DirectProbabilities, Forward, NodeSnapshot,
                        RoutingFault, mixed_gbr_decide, randomized_decide,
                        standard_gbr_decide, static_potential,
                        transmission_cost)
from .topology import Topology


class ConservationError(RuntimeError):
    """generated != delivered + queued: messages were lost or invented."""


@dataclass(frozen=True)
class StandardGBR:
    """Always forward downhill to the least-drained lower neighbor."""

    label: ClassVar[str] = "standard"


@dataclass(frozen=True)
class MixedGBR:
    """Potential-driven forwarding with selective direct transmission."""

    label: ClassVar[str] = "mixed"


@dataclass(frozen=True)
class Randomized:
    """Direct with a fixed per-height probability, otherwise standard."""

    probs: DirectProbabilities
    label: ClassVar[str] = "randomized"


StrategyKind = Union[StandardGBR, MixedGBR, Randomized]


@dataclass
class EventTrace:
    """Reproducible event sequence: round r injects one message at events[r].

    The sequence is a pure function of the seed and the sampling support
    (the reachable node ids), so replays and cross-strategy comparisons see
    the exact same environment.
    """

    seed: int
    n_rounds: int
    node_ids: np.ndarray
    _events: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def for_topology(cls, topology: Topology, seed: int, n_rounds: int) -> "EventTrace":
        ids = topology.reachable_ids
        if len(ids) == 0:
            raise ValueError("topology has no reachable nodes")
        return cls(seed=int(seed), n_rounds=int(n_rounds), node_ids=ids)

    @property
    def events(self) -> np.ndarray:
        if self._events is None:
            rng = np.random.default_rng(self.seed)
            idx = rng.integers(0, len(self.node_ids), size=self.n_rounds)
            self._events = self.node_ids[idx].astype(np.int32)
        return self._events


def generate_event(trace: EventTrace, round_idx: int) -> int:
    """Node receiving the round's event; uniform over the trace support."""
    if not 0 <= round_idx < trace.n_rounds:
        raise IndexError(f"round {round_idx} outside trace of {trace.n_rounds}")
    return int(trace.events[round_idx])


@dataclass
class SimulationState:
    """Mutable per-run state; all invariant checks recompute from scratch."""

    energy: np.ndarray
    queue: np.ndarray
    round: int = 0
    delivered: int = 0
    generated: int = 0

    @classmethod
    def fresh(cls, n_nodes: int) -> "SimulationState":
        return cls(energy=np.zeros(n_nodes), queue=np.zeros(n_nodes, np.int64))

    def total_queued(self) -> int:
        return int(self.queue.sum())

    def check_conservation(self) -> None:
        queued = self.total_queued()
        if self.generated != self.delivered + queued:
            raise ConservationError(
                f"round {self.round}: generated={self.generated} != "
                f"delivered={self.delivered} + queued={queued}")


# --- counter-based decision randomness -------------------------------------
# One uniform per (seed, round, node), so outcomes cannot depend on the
# order nodes are visited in, and the compiled kernel can reproduce the
# exact same draws.

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def decision_u01(seed: int, round_idx: int, node: int) -> float:
    """Uniform in [0, 1) keyed by (seed, round, node)."""
    h = _mix64((seed + _GOLDEN * (round_idx + 1)) & _MASK64)
    h = _mix64((h + _GOLDEN * (node + 1)) & _MASK64)
    return (h >> 11) * 2.0 ** -53


class _OneShotRng:
    """Hands a single precomputed uniform to randomized_decide."""

    __slots__ = ("u",)

    def __init__(self, u: float):
        self.u = u

    def random(self) -> float:
        return self.u


def _snapshot(state: SimulationState, heights: np.ndarray, node: int) -> NodeSnapshot:
    return NodeSnapshot(node, int(heights[node]), float(state.energy[node]),
                        int(state.queue[node]))


def step_round(state: SimulationState, topology: Topology, strategy: StrategyKind,
               event_node: int | None = None, *, decision_seed: int = 0,
               model: CostModel = DEFAULT_MODEL, log=None,
               _sender_order: str = "ascending") -> SimulationState:
    """Advance one round in place and return the state.

    All decisions are computed from the round-start snapshot before any
    send is applied, so iteration order cannot leak into the outcome. The
    event message (when given) queues last and is first sendable next
    round. Pass event_node=None to step without injecting an event.
    """
    heights = topology.heights
    senders = np.flatnonzero(state.queue > 0)
    if _sender_order == "descending":
        senders = senders[::-1]

    decisions = []
    for s in senders:
        s = int(s)
        me = _snapshot(state, heights, s)
        if isinstance(strategy, MixedGBR):
            nbrs = [_snapshot(state, heights, int(t)) for t in topology.neighbors(s)]
            d = mixed_gbr_decide(me, nbrs, model)
        elif isinstance(strategy, StandardGBR):
            nbrs = [_snapshot(state, heights, int(t)) for t in topology.lower_neighbors(s)]
            d = standard_gbr_decide(me, nbrs)
        else:
            nbrs = [_snapshot(state, heights, int(t)) for t in topology.lower_neighbors(s)]
            rng = _OneShotRng(decision_u01(decision_seed, state.round, s))
            d = randomized_decide(me, nbrs, strategy.probs, rng)
        decisions.append((s, d))

    for s, d in decisions:
        cost = transmission_cost(d, int(heights[s]), model)
        state.energy[s] += cost
        state.queue[s] -= 1
        if isinstance(d, Forward) and d.target != SINK:
            state.queue[d.target] += 1
        else:
            state.delivered += 1
        if log is not None:
            kind = "direct" if isinstance(d, Direct) else \
                ("sink" if d.target == SINK else "forward")
            log.writerow([state.round, s, kind, repr(cost)])

    if event_node is not None:
        state.queue[event_node] += 1
        state.generated += 1
    state.round += 1
    return state


def _validate_run(topology: Topology, strategy: StrategyKind,
                  trace: EventTrace) -> None:
    if len(topology.reachable_ids) == 0:
        raise ValueError("topology has no reachable nodes")
    if len(trace.node_ids) and int(trace.node_ids.max()) >= topology.n_sensors:
        raise ValueError("event trace references nodes outside the topology")
    if isinstance(strategy, Randomized):
        if strategy.probs.max_height < topology.max_height:
            raise ValueError(
                f"probabilities cover heights 1..{strategy.probs.max_height}, "
                f"topology reaches {topology.max_height}")


def _static_pot_by_height(max_h: int, model: CostModel) -> np.ndarray:
    return np.array([float(static_potential(h, model.potential_variant,
                                            model.direct_cost_exponent))
                     for h in range(max_h + 1)])


def _direct_cost_by_height(max_h: int, model: CostModel) -> np.ndarray:
    hs = np.arange(max_h + 1, dtype=np.float64)
    if model.direct_cost_exponent == 2.0:
        return hs * hs
    return hs ** model.direct_cost_exponent


def _run_python(topology: Topology, strategy: StrategyKind, trace: EventTrace,
                decision_seed: int, model: CostModel, check_every: int,
                log) -> SimulationState:
    state = SimulationState.fresh(topology.n_sensors)
    writer = csv.writer(log) if log is not None else None
    if writer is not None:
        writer.writerow(["round", "sender", "decision", "cost"])
    events = trace.events
    for r in range(trace.n_rounds):
        step_round(state, topology, strategy, int(events[r]),
                   decision_seed=decision_seed, model=model, log=writer)
        if check_every > 0 and (r + 1) % check_every == 0:
            state.check_conservation()
    return state


def _run_kernel(topology: Topology, strategy: StrategyKind, trace: EventTrace,
                decision_seed: int, model: CostModel,
                check_every: int) -> SimulationState:
    n = topology.n_sensors
    heights = topology.heights
    max_h = topology.max_height
    spot_by_h = _static_pot_by_height(max_h, model)
    spot = np.where(heights >= 0, spot_by_h[np.maximum(heights, 0)], 0.0)
    dcost = _direct_cost_by_height(max_h, model)

    p_by_height = np.zeros(max_h + 1)
    if isinstance(strategy, Randomized):
        strat = _kernel.RANDOMIZED
        p_by_height[1:] = strategy.probs.p[:max_h]
    elif isinstance(strategy, MixedGBR):
        strat = _kernel.MIXED
    else:
        strat = _kernel.STANDARD

    state = SimulationState.fresh(n)
    delivered, generated, status, fail_round, detail = _kernel.run_rounds(
        trace.n_rounds, heights, spot, float(model.epsilon_scale),
        topology.nbr_indptr, topology.nbr_ids,
        topology.lower_indptr, topology.lower_ids,
        trace.events, strat, p_by_height, dcost,
        decision_seed & _MASK64, int(check_every), state.energy, state.queue)

    if status == _kernel.FAULT_NO_LOWER:
        raise RoutingFault(
            f"round {fail_round}: node {detail} at height "
            f"{heights[detail]} has no lower neighbor")
    if status == _kernel.FAULT_CONSERVATION:
        raise ConservationError(
            f"round {fail_round}: generated={generated} != "
            f"delivered={delivered} + queued={detail}")
    state.round = trace.n_rounds
    state.delivered = int(delivered)
    state.generated = int(generated)
    return state


def run_simulation(topology: Topology, strategy: StrategyKind, trace: EventTrace,
                   *, decision_seed: int = 0, model: CostModel = DEFAULT_MODEL,
                   check_every: int = 1000, engine: str = "auto",
                   log=None) -> EnergyReport:
    """Run the whole trace against one strategy and report final energies.

    engine: "auto" uses the compiled kernel when available (unless a
    transmission log is requested), "python" forces the reference path,
    "kernel" demands the compiled one. Message conservation is audited
    every check_every rounds (0 disables).
    """
    _validate_run(topology, strategy, trace)
    if engine not in ("auto", "python", "kernel"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "kernel" and not _kernel.HAS_NUMBA:
        raise RuntimeError("numba is not available; compiled kernel disabled")
    use_kernel = _kernel.HAS_NUMBA and log is None and engine != "python"

    if use_kernel:
        state = _run_kernel(topology, strategy, trace, decision_seed, model,
                            check_every)
    else:
        state = _run_python(topology, strategy, trace, decision_seed, model,
                            check_every, log)
    state.check_conservation()
    return EnergyReport(energy=state.energy, queues=state.queue,
                        delivered=state.delivered, generated=state.generated,
                        strategy=strategy.label, trace_seed=trace.seed)


def run_comparison(topology: Topology, strategies: Sequence[StrategyKind],
                   trace: EventTrace, *, decision_seed: int = 0,
                   model: CostModel = DEFAULT_MODEL, check_every: int = 1000,
                   engine: str = "auto") -> list[EnergyReport]:
    """Run each strategy against the identical trace from a fresh state."""
    if len(strategies) == 0:
        raise ValueError("at least one strategy is required")
    return [run_simulation(topology, strategy, trace,
                           decision_seed=decision_seed, model=model,
                           check_every=check_every, engine=engine)
            for strategy in strategies]
