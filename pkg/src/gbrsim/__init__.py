"""Energy-balanced gradient routing on random sensor deployments.

Library surface: build a topology, pick strategies, run traces, and derive
energy statistics. The `gbrsim` command drives full experiments.
"""

from .engine import (ConservationError, EventTrace, MixedGBR, Randomized,
                     SimulationState, StandardGBR, generate_event,
                     run_comparison, run_simulation, step_round)
from .metrics import (EnergyReport, SliceEnergyProfile, energy_map,
                      lifespan_ratio, max_energy, slice_energy_profile)
from .optimizer import (OptimizerError, SliceFlow, SliceProfile,
                        evaluate_slice_energies, slice_profile_from_topology,
                        solve_balanced_probabilities)
from .protocols import (DIRECT, SINK, TO_SINK, CostModel, Direct,
                        DirectProbabilities, Forward, NodeSnapshot,
                        RoutingFault, mixed_gbr_decide, node_potential,
                        randomized_decide, standard_gbr_decide,
                        static_potential, transmission_cost)
from .topology import (UNREACHABLE, Deployment, Point, Topology,
                       build_topology, compute_heights, deploy_uniform_disc,
                       load_topology, save_topology)

__version__ = "0.1.0"
