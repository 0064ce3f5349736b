"""Random drops (AP/user placement) and mmWave link gains.

Links follow the log-distance pathloss model PL = intercept + 10*exponent*log10(d)
plus a zero-mean Gaussian shadow term, with separate LOS/NLOS parameter sets mixed
by a per-link Bernoulli draw. Channels are flat across subcarriers, so one linear
gain per (user, AP) pair is enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PathlossParams",
    "Topology",
    "InfeasibleGeometryError",
    "LOS",
    "NLOS",
    "pathloss_db",
    "channel_gain",
    "noise_power",
    "dbm_to_watts",
    "generate_topology",
]


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class PathlossParams:
    """One log-distance pathloss parameter set plus the link-mixing knobs."""

    intercept_db: float     # pathloss at 1 m
    exponent: float         # distance exponent (PL grows 10*exponent dB/decade)
    shadow_std_db: float    # shadow fading standard deviation
    los_probability: float = 0.5
    antenna_gain_dbi: float = 5.0

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("pathloss exponent must be positive")
        if self.shadow_std_db < 0:
            raise ValueError("shadow std must be nonnegative")
        if not 0.0 <= self.los_probability <= 1.0:
            raise ValueError("los_probability must lie in [0, 1]")


# 28 GHz measurement-fit parameter sets.
LOS = PathlossParams(intercept_db=61.4, exponent=2.0, shadow_std_db=5.8)
NLOS = PathlossParams(intercept_db=72.0, exponent=2.92, shadow_std_db=8.7)


class InfeasibleGeometryError(RuntimeError):
    """Raised when a user cannot be placed within range of any AP."""


@dataclass(frozen=True)
class Topology:
    """One drop: node positions, per-link gains, and the radius-rule candidate sets.

    ``gains`` holds linear power gains for every (user, AP) pair, association or
    not, because out-of-range APs still contribute interference. Candidate sets
    are mutual by construction: j in candidate_aps[i] iff i in candidate_users[j].
    """

    ap_positions: np.ndarray            # (M, 2) meters
    user_positions: np.ndarray          # (N, 2) meters
    area_side_m: float
    coverage_radius_m: float
    gains: np.ndarray                   # (N, M) linear power gains
    candidate_aps: tuple[tuple[int, ...], ...]      # per user
    candidate_users: tuple[tuple[int, ...], ...]    # per AP

    @property
    def num_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def num_users(self) -> int:
        return self.user_positions.shape[0]


def pathloss_db(distance_m: float, params: PathlossParams, shadow_db: float = 0.0) -> float:
    """Log-distance pathloss in dB at the given distance.

    ``shadow_db`` is the caller's shadow-fading draw; pass 0 for the median loss.
    Distances at or below zero are rejected (clamp upstream, the generator uses
    a 0.1 m floor).
    """
    if distance_m <= 0.0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return params.intercept_db + 10.0 * params.exponent * np.log10(distance_m) + shadow_db


def channel_gain(pathloss: float, antenna_gain_dbi: float):
    """Linear power gain 10^((antenna_gain - pathloss)/10), flat over subcarriers."""
    return 10.0 ** ((antenna_gain_dbi - pathloss) / 10.0)


def noise_power(density_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in watts over one subcarrier of the given bandwidth."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return dbm_to_watts(density_dbm_per_hz + 10.0 * np.log10(bandwidth_hz))


def generate_topology(
    num_aps: int,
    num_users: int,
    area_side_m: float,
    coverage_radius_m: float,
    seed: int,
    *,
    los: PathlossParams = LOS,
    nlos: PathlossParams = NLOS,
    los_probability: float = 0.5,
    antenna_gain_dbi: float = 5.0,
    min_distance_m: float = 0.1,
    max_redraws: int = 1000,
) -> Topology:
    """Drop APs and users i.i.d. uniform over the square and fill link gains.

    A user whose candidate set is empty (no AP within the coverage radius) is
    re-drawn, up to ``max_redraws`` attempts each, so every user can reach at
    least one AP. LOS/NLOS is a per-link Bernoulli(``los_probability``) draw and
    shadow fading is drawn once per link; both stay fixed for the drop.
    """
    if num_aps < 1 or num_users < 1:
        raise ValueError("need at least one AP and one user")
    if area_side_m <= 0:
        raise ValueError("area side must be positive")

    rng = np.random.default_rng(seed)
    ap_positions = rng.uniform(0.0, area_side_m, size=(num_aps, 2))

    user_positions = np.empty((num_users, 2))
    distances = np.empty((num_users, num_aps))
    for i in range(num_users):
        for attempt in range(max_redraws + 1):
            pos = rng.uniform(0.0, area_side_m, size=2)
            d = np.hypot(*(ap_positions - pos).T)
            if np.any(d <= coverage_radius_m):
                user_positions[i] = pos
                distances[i] = d
                break
        else:
            raise InfeasibleGeometryError(
                f"user {i} found no AP within {coverage_radius_m} m "
                f"after {max_redraws} re-draws"
            )

    # Per-link fading, frozen for the whole drop.
    is_los = rng.random(size=(num_users, num_aps)) < los_probability
    shadow = rng.standard_normal(size=(num_users, num_aps))
    shadow_db = shadow * np.where(is_los, los.shadow_std_db, nlos.shadow_std_db)

    d_eff = np.maximum(distances, min_distance_m)
    pl = np.where(
        is_los,
        los.intercept_db + 10.0 * los.exponent * np.log10(d_eff),
        nlos.intercept_db + 10.0 * nlos.exponent * np.log10(d_eff),
    ) + shadow_db
    gains = channel_gain(pl, antenna_gain_dbi)

    in_range = distances <= coverage_radius_m
    candidate_aps = tuple(
        tuple(int(j) for j in np.nonzero(in_range[i])[0]) for i in range(num_users)
    )
    candidate_users = tuple(
        tuple(int(i) for i in np.nonzero(in_range[:, j])[0]) for j in range(num_aps)
    )

    return Topology(
        ap_positions=ap_positions,
        user_positions=user_positions,
        area_side_m=float(area_side_m),
        coverage_radius_m=float(coverage_radius_m),
        gains=gains,
        candidate_aps=candidate_aps,
        candidate_users=candidate_users,
    )
