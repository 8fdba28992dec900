"""Reserve procurement: merit-order clearing and the what-if cost cascade.

Under- and over-frequency reserves clear as two independent markets.
Generators drive the under-frequency requirement (their outage removes
supply), large loads drive the over-frequency one. Prices are quoted per
MW and hour while volumes are in GW, so a cleared GW contributes
1000 * price to the cost rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import groupby

from .dynamics import (
    DEMAND,
    GENERATION,
    CONTINGENCY_SIDES,
    Contingency,
    SystemSnapshot,
    required_reserve,
)
from .errors import ScarcityError, ValidationError

UNDER_FREQUENCY = "under-frequency"
OVER_FREQUENCY = "over-frequency"
SERVICE_SIDES = (UNDER_FREQUENCY, OVER_FREQUENCY)

#: Service procured against the outage of a unit on each side.
SERVICE_FOR_UNIT_SIDE = {GENERATION: UNDER_FREQUENCY, DEMAND: OVER_FREQUENCY}

PAY_AS_CLEAR = "pay-as-clear"
PAY_AS_BID = "pay-as-bid"
PRICING_RULES = (PAY_AS_CLEAR, PAY_AS_BID)

_GW_TO_MW = 1000.0


@dataclass(frozen=True)
class Unit:
    """A generator or load whose capacity sets its potential contingency."""

    id: str
    capacity_gw: float
    side: str = GENERATION
    technology: str = ""
    existing: bool = False

    def __post_init__(self):
        if not self.id:
            raise ValidationError("id: must be a non-empty string")
        if self.capacity_gw < 0:
            raise ValidationError("capacity_gw: must be >= 0")
        if self.side not in CONTINGENCY_SIDES:
            raise ValidationError(f"side: must be one of {CONTINGENCY_SIDES}")


@dataclass(frozen=True)
class ReserveBid:
    """An offer of reserve volume at a price. A zero-price bid models the
    headroom that is available for free on part-loaded plant."""

    provider_id: str
    price_per_mw_h: float
    quantity_gw: float
    side: str = UNDER_FREQUENCY

    def __post_init__(self):
        if not self.provider_id:
            raise ValidationError("provider_id: must be a non-empty string")
        if self.price_per_mw_h < 0:
            raise ValidationError("price_per_mw_h: must be >= 0")
        if not self.quantity_gw > 0:
            raise ValidationError("quantity_gw: must be > 0")
        if self.side not in SERVICE_SIDES:
            raise ValidationError(f"side: must be one of {SERVICE_SIDES}")


@dataclass(frozen=True)
class ClearingResult:
    """Outcome of clearing one requirement against one bid stack.

    ``cleared`` pairs each accepted bid with its accepted volume, in
    ascending price order; accepted bids always form a price-sorted
    prefix of the stack, with pro-rata curtailment only at the marginal
    price.
    """

    requirement_gw: float
    cleared: tuple[tuple[ReserveBid, float], ...]
    marginal_price: float
    total_cost_rate: float
    pricing_rule: str

    def payment_rate(self, bid: ReserveBid, accepted_gw: float) -> float:
        """Hourly payment to one accepted bid under the pricing rule."""
        price = self.marginal_price if self.pricing_rule == PAY_AS_CLEAR else bid.price_per_mw_h
        return accepted_gw * _GW_TO_MW * price


def clear_market(
    requirement_gw: float,
    bids: list[ReserveBid],
    pricing_rule: str = PAY_AS_CLEAR,
) -> ClearingResult:
    """Clear ``requirement_gw`` from the stack in ascending price order.

    Ties at the marginal price are curtailed pro-rata by offered
    quantity, so the outcome does not depend on input order. Raises
    :class:`ScarcityError` (naming the shortfall in GW) when the stack
    cannot cover the requirement.
    """
    if pricing_rule not in PRICING_RULES:
        raise ValidationError(f"pricing_rule: must be one of {PRICING_RULES}")
    if requirement_gw < 0:
        raise ValidationError("requirement_gw: must be >= 0")
    if len({b.side for b in bids}) > 1:
        raise ValidationError("bids: mixed service sides in one clearing")

    if requirement_gw == 0.0:
        return ClearingResult(0.0, (), 0.0, 0.0, pricing_rule)

    offered = math.fsum(b.quantity_gw for b in bids)
    if offered < requirement_gw:
        raise ScarcityError(requirement_gw, offered)

    stack = sorted(bids, key=lambda b: (b.price_per_mw_h, b.provider_id))
    cleared: list[tuple[ReserveBid, float]] = []
    remaining = requirement_gw
    marginal = 0.0
    for price, group_iter in groupby(stack, key=lambda b: b.price_per_mw_h):
        group = list(group_iter)
        group_qty = math.fsum(b.quantity_gw for b in group)
        marginal = price
        if group_qty <= remaining:
            cleared.extend((b, b.quantity_gw) for b in group)
            remaining -= group_qty
        else:
            fraction = remaining / group_qty
            cleared.extend((b, b.quantity_gw * fraction) for b in group)
            remaining = 0.0
        if remaining <= 0.0:
            break

    if pricing_rule == PAY_AS_CLEAR:
        total = requirement_gw * _GW_TO_MW * marginal
    else:
        total = math.fsum(q * _GW_TO_MW * b.price_per_mw_h for b, q in cleared)
    return ClearingResult(requirement_gw, tuple(cleared), marginal, total, pricing_rule)


def fictitious_cost_cascade(
    snapshot: SystemSnapshot,
    units: list[Unit],
    bids: list[ReserveBid],
    pricing_rule: str = PAY_AS_CLEAR,
) -> list[tuple[str, float]]:
    """Reserve cost each unit would create if it set the requirement.

    For every unit, sized largest first, the requirement is re-derived
    from that unit's own contingency and cleared against the same bid
    stack (filtered to the service side matching the unit's side). The
    entry for the actual largest unit therefore equals the real market
    cost. Results are returned in (capacity descending, id) order
    regardless of input order; scarcity errors are tagged with the unit
    that triggered them.
    """
    if not units:
        raise ValidationError("units: must be non-empty")
    ids = [u.id for u in units]
    if len(set(ids)) != len(ids):
        raise ValidationError("units: ids must be unique")

    by_service = {
        side: [b for b in bids if b.side == side] for side in SERVICE_SIDES
    }
    out: list[tuple[str, float]] = []
    for unit in sorted(units, key=lambda u: (-u.capacity_gw, u.id)):
        req = required_reserve(snapshot, Contingency(unit.capacity_gw, unit.side))
        stack = by_service[SERVICE_FOR_UNIT_SIDE[unit.side]]
        try:
            result = clear_market(req, stack, pricing_rule)
        except ScarcityError as exc:
            raise ScarcityError(exc.requirement_gw, exc.offered_gw, unit_id=unit.id) from exc
        out.append((unit.id, result.total_cost_rate))
    return out


def write_clearing_csv(result: ClearingResult, path) -> None:
    """Clearing outcome as CSV: bid_id, accepted_gw, price, payment_rate."""
    with open(path, "w", newline="") as fh:
        fh.write("bid_id,accepted_gw,price,payment_rate\n")
        for bid, accepted in result.cleared:
            payment = result.payment_rate(bid, accepted)
            fh.write(
                f"{bid.provider_id},{accepted:.9g},{bid.price_per_mw_h:.9g},{payment:.9g}\n"
            )
