"""Reference association policies: strongest-signal greedy, exhaustive optimum, random.

Each policy returns a PolicyVerdict holding the full association state it
settled on plus the resulting rates, so callers can compare policies on
identical drops without re-deriving anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .association import AssociationState, UserAction, apply_action_inplace, validate
from .channel import Topology
from .env import NetworkConfig
from .rates import network_utility, user_rates

__all__ = [
    "PolicyVerdict",
    "max_rsrp_policy",
    "random_policy",
    "brute_force_optimum",
    "SearchSpaceError",
]

BRUTE_FORCE_LIMIT = 10_000_000


class SearchSpaceError(RuntimeError):
    """Exhaustive search would exceed the enumeration budget."""


@dataclass(frozen=True)
class PolicyVerdict:
    """A policy's chosen allocation and what it earns."""

    state: AssociationState = field(repr=False)
    ap_sets: list[tuple[int, ...]]          # per user, sorted AP indices held
    subcarriers: np.ndarray                 # per user, subcarrier index or -1
    user_rates: np.ndarray = field(repr=False)
    utility: float = 0.0


def _verdict(state: AssociationState, topology: Topology, cfg: NetworkConfig) -> PolicyVerdict:
    rates = user_rates(
        topology,
        state,
        cfg.ap_power_watts,
        cfg.noise_watts,
        cfg.bandwidth_hz,
        co_subcarrier_only=cfg.co_subcarrier_interference,
    )
    return PolicyVerdict(
        state=state,
        ap_sets=[tuple(np.nonzero(state.x[i])[0].tolist()) for i in range(state.x.shape[0])],
        subcarriers=state.user_subcarrier.copy(),
        user_rates=rates,
        utility=network_utility(rates),
    )


def max_rsrp_policy(
    topology: Topology,
    cfg: NetworkConfig,
    rng: np.random.Generator | None = None,
) -> PolicyVerdict:
    """Greedy strongest-received-power association.

    Every user ranks its in-range APs by received power under the loads
    accumulated so far (an AP already serving n users would split its budget
    n+1 ways for a newcomer; an idle AP offers its full budget) and claims the
    top ones until it holds its per-user limit or runs out of non-full APs.
    Users are processed in index order; each picks one subcarrier uniformly at
    random and uses it on all of its APs.
    """
    if rng is None:
        rng = np.random.default_rng()
    n_users, n_aps = topology.num_users, topology.num_aps
    state = AssociationState(n_users, n_aps, cfg.num_subcarriers, cfg.k_max, cfg.f_max)

    load = np.zeros(n_aps, dtype=np.int64)
    for user in range(n_users):
        cands = topology.candidate_aps[user]
        if not cands:
            continue
        cand_arr = np.asarray(cands)
        rsrp = (cfg.ap_power_watts / (load[cand_arr] + 1)) * topology.gains[user, cand_arr]
        # Stable sort keeps the lower AP index on exact power ties.
        order = np.argsort(-rsrp, kind="stable")
        subcarrier = int(rng.integers(cfg.num_subcarriers))
        taken = 0
        for pos in order:
            ap = int(cand_arr[pos])
            if load[ap] >= cfg.f_max:
                continue
            outcome = apply_action_inplace(
                state, user, UserAction(ap, subcarrier), topology
            )
            if outcome.name == "APPLIED":
                load[ap] += 1
                taken += 1
            if taken >= cfg.k_max:
                break
    return _verdict(state, topology, cfg)


def random_policy(
    topology: Topology,
    cfg: NetworkConfig,
    rng: np.random.Generator | None = None,
) -> PolicyVerdict:
    """One uniformly random in-range (AP, subcarrier) pick per user, in index order."""
    if rng is None:
        rng = np.random.default_rng()
    n_users, n_aps = topology.num_users, topology.num_aps
    state = AssociationState(n_users, n_aps, cfg.num_subcarriers, cfg.k_max, cfg.f_max)
    for user in range(n_users):
        cands = topology.candidate_aps[user]
        if not cands:
            continue
        ap = int(cands[rng.integers(len(cands))])
        subcarrier = int(rng.integers(cfg.num_subcarriers))
        apply_action_inplace(state, user, UserAction(ap, subcarrier), topology)
    return _verdict(state, topology, cfg)


def _user_options(topology: Topology, cfg: NetworkConfig, user: int):
    """All (ap_subset, subcarrier) choices open to one user, plus staying idle."""
    options = [((), -1)]
    cands = topology.candidate_aps[user]
    for size in range(1, min(cfg.k_max, len(cands)) + 1):
        for subset in combinations(cands, size):
            for sc in range(cfg.num_subcarriers):
                options.append((subset, sc))
    return options


def brute_force_optimum(topology: Topology, cfg: NetworkConfig) -> PolicyVerdict:
    """Exhaustive search over every constraint-satisfying allocation.

    Enumerates per-user (AP subset, subcarrier) choices depth-first, pruning
    on per-AP load and on (AP, subcarrier) reuse, and keeps the utility
    maximizer. Intended for tiny instances; raises SearchSpaceError when the
    nominal option product exceeds BRUTE_FORCE_LIMIT.
    """
    n_users, n_aps = topology.num_users, topology.num_aps
    all_options = [_user_options(topology, cfg, u) for u in range(n_users)]

    nominal = 1
    for opts in all_options:
        nominal *= len(opts)
        if nominal > BRUTE_FORCE_LIMIT:
            raise SearchSpaceError(
                f"search space exceeds {BRUTE_FORCE_LIMIT:,} states; "
                "shrink the instance or lower the association limits"
            )

    best_utility = -1.0
    best_choice = None
    load = np.zeros(n_aps, dtype=np.int64)
    pair_used = np.zeros((n_aps, cfg.num_subcarriers), dtype=bool)
    choice: list[tuple[tuple, int]] = [((), -1)] * n_users

    def assemble() -> AssociationState:
        state = AssociationState(n_users, n_aps, cfg.num_subcarriers, cfg.k_max, cfg.f_max)
        for u, (subset, sc) in enumerate(choice):
            for ap in subset:
                state.x[u, ap] = 1
                state.y[u, ap, sc] = 1
                state.assoc_order[u].append(ap)
            if subset:
                state.user_subcarrier[u] = sc
        return state

    def recurse(user: int):
        nonlocal best_utility, best_choice
        if user == n_users:
            state = assemble()
            util = network_utility(
                user_rates(
                    topology,
                    state,
                    cfg.ap_power_watts,
                    cfg.noise_watts,
                    cfg.bandwidth_hz,
                    co_subcarrier_only=cfg.co_subcarrier_interference,
                )
            )
            if util > best_utility:
                best_utility = util
                best_choice = list(choice)
            return
        for subset, sc in all_options[user]:
            ok = all(load[ap] < cfg.f_max and not pair_used[ap, sc] for ap in subset)
            if not ok:
                continue
            for ap in subset:
                load[ap] += 1
                pair_used[ap, sc] = True
            choice[user] = (subset, sc)
            recurse(user + 1)
            for ap in subset:
                load[ap] -= 1
                pair_used[ap, sc] = False
            choice[user] = ((), -1)

    recurse(0)
    choice = best_choice if best_choice is not None else [((), -1)] * n_users
    state = assemble()
    problems = validate(state, topology)
    if problems:
        raise AssertionError(f"exhaustive search produced an invalid state: {problems}")
    return _verdict(state, topology, cfg)
