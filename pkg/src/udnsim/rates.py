"""SINR, Shannon link capacity, per-user rate, and network utility.

Interference is co-subcarrier by default: a link on subcarrier l sees every
other AP that is transmitting to someone on l. APs serving the *same* user on
l carry desired signal (their rates are summed per link) and are excluded.
The literal all-interferers mode, where every other active AP interferes
regardless of subcarrier, is kept behind ``co_subcarrier_only=False``.

Each AP splits its power budget equally over its associated users, so the
per-link transmit power is p_ap / n_j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .association import AssociationState
from .channel import Topology

__all__ = [
    "LinkMetrics",
    "sinr",
    "link_capacity",
    "link_metrics",
    "user_rates",
    "network_utility",
]


@dataclass(frozen=True)
class LinkMetrics:
    """Per-link SINR/rate tensors (zero where inactive) plus the aggregates."""

    sinr: np.ndarray        # (N, M, L) linear ratios
    link_rate: np.ndarray   # (N, M, L) bits/s
    user_rate: np.ndarray   # (N,) bits/s
    network_utility: float  # bits/s


def _per_ap_power(state: AssociationState, p_ap_watts: float) -> np.ndarray:
    counts = state.x.sum(axis=0)
    return np.where(counts > 0, p_ap_watts / np.maximum(counts, 1), 0.0)


def _interference(topology, state, power, user, ap, subcarrier, co_subcarrier_only):
    # Masked dot over the interferer set; no subtraction, so no cancellation.
    if co_subcarrier_only:
        interferers = state.y[:, :, subcarrier].any(axis=0)      # AP occupies l
        interferers &= state.y[user, :, subcarrier] == 0         # not serving this user on l
    else:
        interferers = state.x.sum(axis=0) > 0                    # any active AP
    interferers[ap] = False
    return float((topology.gains[user] * power) @ interferers)


def sinr(
    topology: Topology,
    state: AssociationState,
    user: int,
    ap: int,
    subcarrier: int,
    p_ap_watts: float,
    noise_watts: float,
    co_subcarrier_only: bool = True,
) -> float:
    """SINR of one active link; querying an inactive link is a caller bug."""
    if state.x[user, ap] != 1 or state.y[user, ap, subcarrier] != 1:
        raise ValueError(f"link (user={user}, ap={ap}, subcarrier={subcarrier}) is not active")
    power = _per_ap_power(state, p_ap_watts)
    desired = power[ap] * topology.gains[user, ap]
    interference = _interference(topology, state, power, user, ap, subcarrier, co_subcarrier_only)
    return desired / (interference + noise_watts)


def link_capacity(sinr_linear: float, bandwidth_hz: float) -> float:
    """Shannon capacity W*log2(1 + SINR) in bits/s."""
    if sinr_linear < 0:
        raise ValueError("SINR must be nonnegative")
    return bandwidth_hz * np.log2(1.0 + sinr_linear)


def link_metrics(
    topology: Topology,
    state: AssociationState,
    p_ap_watts: float,
    noise_watts: float,
    bandwidth_hz: float,
    co_subcarrier_only: bool = True,
) -> LinkMetrics:
    """Evaluate every active link and aggregate to user rates and utility."""
    n, m, sc = state.y.shape
    sinr_grid = np.zeros((n, m, sc))
    rate_grid = np.zeros((n, m, sc))
    power = _per_ap_power(state, p_ap_watts)

    for user, ap, l in zip(*np.nonzero(state.y)):
        desired = power[ap] * topology.gains[user, ap]
        interference = _interference(
            topology, state, power, int(user), int(ap), int(l), co_subcarrier_only
        )
        gamma = desired / (interference + noise_watts)
        sinr_grid[user, ap, l] = gamma
        rate_grid[user, ap, l] = bandwidth_hz * np.log2(1.0 + gamma)

    per_user = (state.x[:, :, None] * rate_grid).sum(axis=(1, 2))
    return LinkMetrics(
        sinr=sinr_grid,
        link_rate=rate_grid,
        user_rate=per_user,
        network_utility=network_utility(per_user),
    )


def user_rates(
    topology: Topology,
    state: AssociationState,
    p_ap_watts: float,
    noise_watts: float,
    bandwidth_hz: float,
    co_subcarrier_only: bool = True,
) -> np.ndarray:
    """Per-user total rate in bits/s; zero for unassociated users."""
    return link_metrics(
        topology, state, p_ap_watts, noise_watts, bandwidth_hz, co_subcarrier_only
    ).user_rate


def network_utility(rates) -> float:
    """Aggregate utility: the sum of user rates (linear per-user utility)."""
    return float(np.sum(rates))
