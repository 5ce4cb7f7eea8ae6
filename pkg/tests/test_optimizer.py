import random

import numpy as np
import pytest

from gbrsim.optimizer import (OptimizerError, SliceProfile, _greedy_feasible,
                              evaluate_slice_energies,
                              slice_profile_from_topology,
                              solve_balanced_probabilities)
from gbrsim.protocols import DirectProbabilities
from gbrsim.topology import Deployment, build_topology, deploy_uniform_disc

from test_topology import chain_topology


def objective(profile, probs):
    return max(evaluate_slice_energies(profile, probs).slice_energy)


# --- profile construction ---------------------------------------------------

def test_profile_from_chain():
    profile = slice_profile_from_topology(chain_topology())
    assert profile.populations == (1, 1, 1)
    assert profile.generation_rates == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_profile_excludes_unreachable():
    dep = Deployment(sensors=np.array([[0.9, 0.0], [1.8, 0.0], [7.0, 7.0]]),
                     base_stations=np.array([[0.0, 0.0]]), radius=12.0, seed=0)
    profile = slice_profile_from_topology(build_topology(dep, 1.0))
    assert profile.populations == (1, 1)
    assert profile.generation_rates == pytest.approx((0.5, 0.5))


def test_profile_counts_match_reachable_total():
    dep = deploy_uniform_disc(700, 10.0, [(-5, 0), (5, 0)], seed=3)
    topo = build_topology(dep, 1.0)
    profile = slice_profile_from_topology(topo)
    assert sum(profile.populations) == len(topo.reachable_ids)
    assert sum(profile.generation_rates) == pytest.approx(1.0)


def test_profile_rejects_fully_disconnected():
    dep = Deployment(sensors=np.array([[5.0, 5.0]]),
                     base_stations=np.array([[0.0, 0.0]]), radius=10.0, seed=0)
    with pytest.raises(ValueError):
        slice_profile_from_topology(build_topology(dep, 1.0))


def test_profile_validation():
    with pytest.raises(ValueError):
        SliceProfile((1, 2), (0.5,))
    with pytest.raises(ValueError):
        SliceProfile((-1,), (1.0,))
    with pytest.raises(ValueError):
        SliceProfile.uniform([0, 0])


# --- flow evaluation --------------------------------------------------------

def test_single_slice_flow():
    profile = SliceProfile.uniform([4])
    flow = evaluate_slice_energies(profile, DirectProbabilities((0.0,)))
    assert flow.through == (1.0,)
    assert flow.slice_energy == (0.25,)


def test_two_slices_pure_forwarding():
    profile = SliceProfile.uniform([3, 5])  # rates 3/8, 5/8
    flow = evaluate_slice_energies(profile, DirectProbabilities((0.0, 0.0)))
    assert flow.through[1] == pytest.approx(5 / 8)
    assert flow.through[0] == pytest.approx(1.0)
    assert flow.slice_energy[0] == pytest.approx(1.0 / 3)


def test_two_slices_full_direct_decouples():
    profile = SliceProfile.uniform([3, 5])
    flow = evaluate_slice_energies(profile, DirectProbabilities((0.0, 1.0)))
    assert flow.slice_energy[1] == pytest.approx(4 * (5 / 8) / 5)
    assert flow.slice_energy[0] == pytest.approx((3 / 8) / 3)


def test_flow_conservation_on_random_profiles():
    rng = random.Random(5)
    for _ in range(100):
        H = rng.randint(1, 9)
        pops = [rng.choice([0, 1, 2, 5, 10]) for _ in range(H)]
        if sum(pops) == 0:
            pops[rng.randrange(H)] = 3
        profile = SliceProfile.uniform(pops)
        probs = DirectProbabilities(tuple(rng.random() for _ in range(H)))
        flow = evaluate_slice_energies(profile, probs)
        delivered = flow.through[0]
        delivered += sum(p * t for p, t in
                         zip(flow.direct_fraction[1:], flow.through[1:]))
        total = sum(profile.generation_rates)
        assert abs(delivered - total) <= 1e-12 * total


def test_evaluate_requires_covering_probs():
    with pytest.raises(ValueError):
        evaluate_slice_energies(SliceProfile.uniform([1, 1, 1]),
                                DirectProbabilities((0.0, 0.0)))


# --- solver -----------------------------------------------------------------

def test_solver_single_slice_returns_zero():
    probs = solve_balanced_probabilities(SliceProfile.uniform([4]), 1e-9)
    assert probs.p == (0.0,)


def test_solver_matches_grid_search_two_slices():
    # one congested sensor below ten generators; balancing the two slice
    # energies analytically gives p2 = 10/13 and objective 43/143
    profile = SliceProfile((1, 10), (1 / 11, 10 / 11))
    solved = solve_balanced_probabilities(profile, 1e-9)
    got = objective(profile, solved)
    assert got == pytest.approx(43 / 143, abs=1e-8)

    grid = np.linspace(0.0, 1.0, 1001)
    lam1, lam2 = profile.generation_rates
    through1 = lam1 + (1 - grid) * lam2
    e2 = lam2 * (1 + 3 * grid) / 10
    e1 = through1 / 1
    best = np.maximum(e1, e2).min()
    assert abs(got - best) <= 1e-3 * best


def test_solver_dominates_pure_strategies():
    rng = random.Random(9)
    for _ in range(25):
        H = 4
        pops = [rng.choice([1, 2, 5, 10]) for _ in range(H)]
        profile = SliceProfile.uniform(pops)
        solved = solve_balanced_probabilities(profile, 1e-10)
        got = objective(profile, solved)
        all_forward = objective(profile, DirectProbabilities((0.0,) * H))
        all_direct = objective(profile, DirectProbabilities((1.0,) * H))
        assert got <= all_forward + 1e-12
        assert got <= all_direct + 1e-12


def test_solver_output_is_valid_and_reevaluates():
    profile = SliceProfile.uniform([2, 7, 4, 9, 1])
    solved = solve_balanced_probabilities(profile, 1e-10)
    assert all(0.0 <= p <= 1.0 for p in solved.p)
    # recomputing from scratch gives the same objective the search settled on
    assert objective(profile, solved) == pytest.approx(
        objective(profile, DirectProbabilities(solved.p)))


def test_feasibility_is_monotone_in_target():
    profile = SliceProfile.uniform([2, 7, 4, 9, 1])
    solved = solve_balanced_probabilities(profile, 1e-12)
    e_star = objective(profile, solved)
    assert _greedy_feasible(profile, 1.5 * e_star) is not None
    assert _greedy_feasible(profile, 0.5 * e_star) is None


def test_solver_handles_empty_interior_slice():
    profile = SliceProfile((4, 0, 3), (0.4, 0.0, 0.6))
    solved = solve_balanced_probabilities(profile, 1e-10)
    flow = evaluate_slice_energies(profile, solved)
    assert flow.slice_energy[1] == 0.0  # no sensors, no energy booked
    assert objective(profile, solved) <= \
        objective(profile, DirectProbabilities((0.0, 0.0, 0.0))) + 1e-12


def test_solver_error_paths():
    profile = SliceProfile.uniform([1, 10])
    with pytest.raises(ValueError):
        solve_balanced_probabilities(profile, 0.0)
    with pytest.raises(OptimizerError):
        solve_balanced_probabilities(profile, 1e-15, max_iterations=0)
