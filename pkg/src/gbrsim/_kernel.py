"""Numba-compiled inner loop for long simulation runs.

The kernel mirrors the reference engine decision for decision; the test
suite asserts both produce bit-identical runs. Importing works without
numba installed, in which case HAS_NUMBA is False and the engine sticks to
the pure-python path.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


STANDARD, MIXED, RANDOMIZED = 0, 1, 2
OK, FAULT_NO_LOWER, FAULT_CONSERVATION = 0, 1, 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def _u01(seed, round_idx, node):
    h = _mix(seed + _GOLDEN * (round_idx + _ONE))
    h = _mix(h + _GOLDEN * (node + _ONE))
    return np.float64(h >> _S11) * _INV53


@njit(cache=True)
def run_rounds(n_rounds, heights, spot, eps_scale,
               nbr_indptr, nbr_ids, low_indptr, low_ids,
               events, strat, p_by_height, dcost,
               decision_seed, check_every, energy, queue):
    """Advance the full run in place; returns (delivered, generated, status,
    fail_round, fail_detail).

    Per round: every queued node decides from the round-start snapshot,
    then all sends apply at once; the event message queues last and is
    first sendable next round. Only nodes with pending messages are
    visited, so rounds cost O(active nodes), not O(network size).
    """
    n = len(heights)
    active = np.empty(n, np.int64)
    in_active = np.zeros(n, np.uint8)
    target = np.empty(n, np.int64)
    n_active = 0
    delivered = np.int64(0)
    generated = np.int64(0)
    seed_u = np.uint64(decision_seed)

    for r in range(n_rounds):
        n_senders = n_active

        # pass 1: decisions read round-start energies only
        for i in range(n_senders):
            s = active[i]
            if strat == MIXED:
                best = np.int64(-3)
                best_pot = np.inf
                for k in range(nbr_indptr[s], nbr_indptr[s + 1]):
                    t = nbr_ids[k]
                    pot = spot[t] + eps_scale * energy[t]
                    if pot < best_pot:  # strict: ascending ids, lowest id wins ties
                        best_pot = pot
                        best = t
                if best == np.int64(-3) or best_pot > spot[s] + eps_scale * energy[s]:
                    target[i] = -2
                else:
                    target[i] = best
            else:
                go_direct = False
                if strat == RANDOMIZED:
                    u = _u01(seed_u, np.uint64(r), np.uint64(s))
                    go_direct = u < p_by_height[heights[s]]
                if go_direct:
                    target[i] = -2
                else:
                    lo = low_indptr[s]
                    hi = low_indptr[s + 1]
                    if lo == hi:
                        if heights[s] == 1:
                            target[i] = -1
                        else:
                            return delivered, generated, FAULT_NO_LOWER, \
                                np.int64(r), np.int64(s)
                    else:
                        best = np.int64(low_ids[lo])
                        best_e = energy[best]
                        for k in range(lo + 1, hi):
                            t = low_ids[k]
                            if energy[t] < best_e:
                                best_e = energy[t]
                                best = np.int64(t)
                        target[i] = best

        # pass 2: apply all sends (-2 direct, -1 sink handoff, else forward)
        for i in range(n_senders):
            s = active[i]
            t = target[i]
            queue[s] -= 1
            if t == -2:
                energy[s] += dcost[heights[s]]
                delivered += 1
            elif t == -1:
                energy[s] += 1.0
                delivered += 1
            else:
                energy[s] += 1.0
                queue[t] += 1
                if in_active[t] == 0:
                    active[n_active] = t
                    n_active += 1
                    in_active[t] = 1

        e = events[r]
        queue[e] += 1
        generated += 1
        if in_active[e] == 0:
            active[n_active] = e
            n_active += 1
            in_active[e] = 1

        # drop emptied queues from the active list
        w = 0
        for i in range(n_active):
            nd = active[i]
            if queue[nd] > 0:
                active[w] = nd
                w += 1
            else:
                in_active[nd] = 0
        n_active = w

        # audit message conservation from scratch
        if check_every > 0 and (r + 1) % check_every == 0:
            total = np.int64(0)
            for j in range(n):
                total += queue[j]
            if generated != delivered + total:
                return delivered, generated, FAULT_CONSERVATION, np.int64(r), total

    return delivered, generated, OK, np.int64(-1), np.int64(0)
