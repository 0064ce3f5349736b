"""Binary association/allocation state and the projection that keeps it feasible.

The state couples an N x M association matrix ``x`` with an N x M x L subcarrier
allocation tensor ``y``. Feasibility means:

  user-ap-limit            each user holds at most k_max APs
  ap-user-limit            each AP serves at most f_max users
  association-domain       x is binary and only set for candidate APs
  single-subcarrier-per-link   at most one subcarrier per (user, AP) link
  subcarrier-orthogonality     no two users share a subcarrier on one AP
  common-subcarrier        a user occupies one subcarrier across all its APs
  allocation-domain        y is binary and only set for candidate APs
  allocation-implies-association   y set only where x is set

Actions never construct an infeasible state: ``apply_action`` projects each
(AP, subcarrier) request onto the feasible set, rejecting out-of-range or
full-AP requests and displacing conflicting links otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import Topology

__all__ = [
    "AssociationState",
    "UserAction",
    "ActionOutcome",
    "validate",
    "apply_action",
    "transmit_power",
]


@dataclass(frozen=True)
class UserAction:
    """One (AP, subcarrier) request; flattens to ap_index * L + subcarrier_index."""

    ap_index: int
    subcarrier_index: int

    def flat(self, num_subcarriers: int) -> int:
        return self.ap_index * num_subcarriers + self.subcarrier_index

    @classmethod
    def from_flat(cls, index: int, num_subcarriers: int) -> "UserAction":
        return cls(index // num_subcarriers, index % num_subcarriers)


class ActionOutcome(enum.Enum):
    APPLIED = "applied"
    OUT_OF_RANGE = "out-of-range"   # requested AP not in the user's candidate set
    AP_FULL = "ap-full"             # requested AP already serves f_max other users


class AssociationState:
    """Mutable association bookkeeping with FIFO-ordered per-user AP lists."""

    def __init__(self, num_users, num_aps, num_subcarriers, k_max, f_max):
        if k_max < 1 or f_max < 1:
            raise ValueError("k_max and f_max must be at least 1")
        self.x = np.zeros((num_users, num_aps), dtype=np.int8)
        self.y = np.zeros((num_users, num_aps, num_subcarriers), dtype=np.int8)
        self.user_subcarrier = np.full(num_users, -1, dtype=np.int64)
        self.assoc_order: list[list[int]] = [[] for _ in range(num_users)]
        self.k_max = int(k_max)
        self.f_max = int(f_max)

    @property
    def num_users(self) -> int:
        return self.x.shape[0]

    @property
    def num_aps(self) -> int:
        return self.x.shape[1]

    @property
    def num_subcarriers(self) -> int:
        return self.y.shape[2]

    def copy(self) -> "AssociationState":
        dup = AssociationState.__new__(AssociationState)
        dup.x = self.x.copy()
        dup.y = self.y.copy()
        dup.user_subcarrier = self.user_subcarrier.copy()
        dup.assoc_order = [list(order) for order in self.assoc_order]
        dup.k_max = self.k_max
        dup.f_max = self.f_max
        return dup

    def users_on_ap(self, ap: int) -> int:
        return int(self.x[:, ap].sum())


def validate(state: AssociationState, topology: Topology) -> list[str]:
    """Return a violation message per broken constraint; empty means feasible.

    Never raises on constraint breaches: every message names the constraint
    family and the offending indices so callers can triage.
    """
    x, y = state.x, state.y
    n, m, sc = state.num_users, state.num_aps, state.num_subcarriers
    violations: list[str] = []

    for i in range(n):
        held = int(x[i].sum())
        if held > state.k_max:
            violations.append(
                f"user-ap-limit: user {i} holds {held} APs (limit {state.k_max})"
            )
    for j in range(m):
        served = int(x[:, j].sum())
        if served > state.f_max:
            violations.append(
                f"ap-user-limit: AP {j} serves {served} users (limit {state.f_max})"
            )

    for i in range(n):
        candidates = set(topology.candidate_aps[i])
        for j in range(m):
            if x[i, j] not in (0, 1):
                violations.append(
                    f"association-domain: x[{i},{j}]={int(x[i, j])} is not binary"
                )
            elif x[i, j] == 1 and j not in candidates:
                violations.append(
                    f"association-domain: user {i} associated with out-of-range AP {j}"
                )

    for i in range(n):
        for j in range(m):
            used = int(np.count_nonzero(y[i, j]))
            if used > 1:
                violations.append(
                    f"single-subcarrier-per-link: user {i} uses {used} subcarriers on AP {j}"
                )

    for j in range(m):
        for l in range(sc):
            holders = np.nonzero(y[:, j, l])[0]
            if holders.size > 1:
                violations.append(
                    "subcarrier-orthogonality: "
                    f"users {list(map(int, holders))} share subcarrier {l} on AP {j}"
                )

    for i in range(n):
        owned = [j for j in range(m) if x[i, j] == 1]
        for j in owned[1:]:
            if not np.array_equal(y[i, owned[0]], y[i, j]):
                violations.append(
                    "common-subcarrier: "
                    f"user {i} allocation differs between APs {owned[0]} and {j}"
                )

    for i in range(n):
        candidates = set(topology.candidate_aps[i])
        for j in range(m):
            for l in range(sc):
                if y[i, j, l] not in (0, 1):
                    violations.append(
                        f"allocation-domain: y[{i},{j},{l}]={int(y[i, j, l])} is not binary"
                    )
                elif y[i, j, l] == 1 and j not in candidates:
                    violations.append(
                        f"allocation-domain: user {i} allocated on out-of-range AP {j}"
                    )

    for i in range(n):
        for j in range(m):
            if np.any(y[i, j] == 1) and x[i, j] != 1:
                violations.append(
                    "allocation-implies-association: "
                    f"user {i} holds subcarrier on AP {j} without association"
                )

    return violations


def apply_action_inplace(
    state: AssociationState, user: int, action: UserAction, topology: Topology
) -> ActionOutcome:
    """Projection core shared by ``apply_action`` and the environment step.

    Semantics: out-of-range APs and full APs are silent no-ops. Otherwise the
    user gains AP ``m`` (FIFO-evicting its oldest AP past k_max) and moves to
    subcarrier ``l`` on every AP it holds; any other user occupying ``l`` on one
    of those APs loses that single link (later claimant wins).
    """
    m, l = action.ap_index, action.subcarrier_index
    if not (0 <= user < state.num_users):
        raise IndexError(f"user index {user} out of range")
    if not (0 <= m < state.num_aps and 0 <= l < state.num_subcarriers):
        raise IndexError(f"action ({m}, {l}) out of range")

    if m not in topology.candidate_aps[user]:
        return ActionOutcome.OUT_OF_RANGE
    if state.x[user, m] == 0 and state.users_on_ap(m) >= state.f_max:
        return ActionOutcome.AP_FULL

    order = state.assoc_order[user]
    if state.x[user, m] == 0:
        state.x[user, m] = 1
        order.append(m)
        if len(order) > state.k_max:
            oldest = order.pop(0)
            state.x[user, oldest] = 0

    # One subcarrier across all held APs; conflicting holders lose that link.
    state.y[user, :, :] = 0
    for j in order:
        for other in np.nonzero(state.y[:, j, l])[0]:
            state.y[other, j, l] = 0
            state.x[other, j] = 0
            state.assoc_order[other].remove(j)
            if not state.assoc_order[other]:
                state.user_subcarrier[other] = -1
        state.y[user, j, l] = 1
    state.user_subcarrier[user] = l
    return ActionOutcome.APPLIED


def apply_action(
    state: AssociationState, user: int, action: UserAction, topology: Topology
) -> tuple[AssociationState, ActionOutcome]:
    """Pure form of the projection: returns the next state and the outcome."""
    nxt = state.copy()
    outcome = apply_action_inplace(nxt, user, action, topology)
    return nxt, outcome


def transmit_power(state: AssociationState, ap: int, p_ap_watts: float) -> float:
    """Per-user transmit power of an AP splitting its budget equally; idle APs are silent."""
    if p_ap_watts <= 0:
        raise ValueError("AP power must be positive")
    served = state.users_on_ap(ap)
    return 0.0 if served == 0 else p_ap_watts / served
