"""Cost-sharing rules for distributing the cleared reserve cost.

The cost structure is an airport game: serving any group of units costs
as much as serving the largest requirement in the group, so the total to
distribute equals the largest standalone cost in the cascade. Shipped
rules:

``airport-shapley`` (default)
    Shapley value of the airport game via its sequential-segments
    closed form: with standalone costs sorted ascending, each cost
    increment is split equally among the units that need it,
    share_i = sum_{j<=i} (c_j - c_{j-1}) / (n - j + 1).

``brute-shapley``
    Same value by enumerating all player orderings (oracle for the
    closed form, capped at 10 units).

``proportional``
    Total scaled by each unit's fraction of summed standalone costs.

``incremental``
    Units arrive largest first and pay the increment of the coalition
    cost they cause; the largest unit covers the whole requirement it
    creates and every later, smaller arrival adds nothing. Not
    symmetric, but capacity-monotone like the default rule.

All rules are efficient (shares sum to the total). Pure functions,
deterministic regardless of evaluation order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

from .errors import ValidationError
from .market import Unit

AIRPORT_SHAPLEY = "airport-shapley"
BRUTE_SHAPLEY = "brute-shapley"
PROPORTIONAL = "proportional"
INCREMENTAL = "incremental"
ALLOCATION_RULES = (AIRPORT_SHAPLEY, BRUTE_SHAPLEY, PROPORTIONAL, INCREMENTAL)

_BRUTE_MAX_PLAYERS = 10

#: Shares below this rate (currency/h) count as "pays nothing" when
#: locating the cut-off size.
ZERO_SHARE_RATE = 1e-9


@dataclass(frozen=True)
class AllocationResult:
    """Per-unit cost shares for one snapshot and service side.

    ``residual`` holds cost shifted off exempt (pre-reform) units onto
    the socialised bucket; efficiency then reads
    sum(shares) + residual == total_cost_rate. ``cutoff_gw`` is filled
    once capacities are known, see :func:`cutoff_size`.
    """

    rule: str
    shares: tuple[tuple[str, float], ...]
    total_cost_rate: float
    residual: float = 0.0
    cutoff_gw: float | None = None


def _airport_shapley_shares(costs: list[float]) -> list[float]:
    n = len(costs)
    order = sorted(range(n), key=lambda i: costs[i])
    shares = [0.0] * n
    running = 0.0
    prev = 0.0
    for rank, idx in enumerate(order):
        running += (costs[idx] - prev) / (n - rank)
        shares[idx] = running
        prev = costs[idx]
    return shares


def _brute_shapley_shares(costs: list[float]) -> list[float]:
    n = len(costs)
    totals = [0.0] * n
    for perm in itertools.permutations(range(n)):
        running_max = 0.0
        for i in perm:
            if costs[i] > running_max:
                totals[i] += costs[i] - running_max
                running_max = costs[i]
    n_perms = math.factorial(n)
    return [t / n_perms for t in totals]


def _proportional_shares(costs: list[float]) -> list[float]:
    total = max(costs)
    cost_sum = math.fsum(costs)
    if cost_sum == 0.0:
        return [0.0] * len(costs)
    return [c / cost_sum * total for c in costs]


def _incremental_shares(costs: list[float]) -> list[float]:
    shares = [0.0] * len(costs)
    # Earliest input position wins ties for the first (largest) arrival.
    first = max(range(len(costs)), key=lambda i: (costs[i], -i))
    shares[first] = max(costs)
    return shares


_RULE_FUNCTIONS = {
    AIRPORT_SHAPLEY: _airport_shapley_shares,
    BRUTE_SHAPLEY: _brute_shapley_shares,
    PROPORTIONAL: _proportional_shares,
    INCREMENTAL: _incremental_shares,
}


def allocate(
    cascade: list[tuple[str, float]],
    rule: str = AIRPORT_SHAPLEY,
) -> AllocationResult:
    """Distribute the largest standalone cost in ``cascade`` across units.

    ``cascade`` pairs unit ids with the reserve cost each unit would
    create on its own; the maximum entry is the real market cost being
    shared. Share order follows the input order.
    """
    if rule not in ALLOCATION_RULES:
        raise ValidationError(f"rule: must be one of {ALLOCATION_RULES}")
    if not cascade:
        raise ValidationError("cascade: must be non-empty")
    ids = [uid for uid, _ in cascade]
    if len(set(ids)) != len(ids):
        raise ValidationError("cascade: unit ids must be unique")
    costs = []
    for i, (_, cost) in enumerate(cascade):
        if cost < 0:
            raise ValidationError(f"cascade[{i}].standalone_cost_rate: must be >= 0")
        costs.append(cost)
    if rule == BRUTE_SHAPLEY and len(costs) > _BRUTE_MAX_PLAYERS:
        raise ValidationError(
            f"brute-shapley enumerates permutations and supports at most "
            f"{_BRUTE_MAX_PLAYERS} units; use {AIRPORT_SHAPLEY}, its closed form"
        )
    shares = _RULE_FUNCTIONS[rule](costs)
    return AllocationResult(rule, tuple(zip(ids, shares)), max(costs))


def cutoff_size(allocation: AllocationResult, units: list[Unit]) -> float:
    """Largest capacity allocated (essentially) nothing, 0 if all pay."""
    caps = {u.id: u.capacity_gw for u in units}
    zero_caps = []
    for uid, share in allocation.shares:
        if uid not in caps:
            raise ValidationError(f"units: missing unit '{uid}' present in the allocation")
        if share < ZERO_SHARE_RATE:
            zero_caps.append(caps[uid])
    return max(zero_caps, default=0.0)


def filter_existing(units: list[Unit], allocation: AllocationResult) -> AllocationResult:
    """Socialise the shares of pre-reform units.

    Units flagged ``existing`` keep a zero share; the cost they would
    have borne moves to the ``residual`` bucket (the transition-period
    consumer subsidy). New entrants are untouched.
    """
    flags = {u.id: u.existing for u in units}
    moved = 0.0
    shares: list[tuple[str, float]] = []
    for uid, share in allocation.shares:
        if uid not in flags:
            raise ValidationError(f"units: missing unit '{uid}' present in the allocation")
        if flags[uid]:
            moved += share
            shares.append((uid, 0.0))
        else:
            shares.append((uid, share))
    return replace(allocation, shares=tuple(shares), residual=allocation.residual + moved)
