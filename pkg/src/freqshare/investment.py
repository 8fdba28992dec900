"""Project viability under the cost allocation, and plant-design what-ifs.

Revenues and non-ancillary costs are plain ledger inputs, not simulated;
only the ancillary-services column comes out of the allocation pipeline,
weighted by the hours each snapshot represents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ValidationError
from .market import Unit
from .scenario import HOURS_PER_YEAR, Scenario, run_pipeline


@dataclass(frozen=True)
class ViabilityLedger:
    """Lifetime cash flows of one project; one list entry per year."""

    lifetime_years: int
    revenues_electricity: tuple[float, ...]
    revenues_ancillary: tuple[float, ...]
    cost_fuel: tuple[float, ...]
    cost_ancillary: tuple[float, ...]
    cost_others: tuple[float, ...]
    cost_investment: float
    profit_sought: float

    def __post_init__(self):
        if self.lifetime_years < 1:
            raise ValidationError("lifetime_years: must be >= 1")
        for name in ("revenues_electricity", "revenues_ancillary",
                     "cost_fuel", "cost_ancillary", "cost_others"):
            entries = getattr(self, name)
            if len(entries) != self.lifetime_years:
                raise ValidationError(
                    f"{name}: expected {self.lifetime_years} yearly entries, "
                    f"got {len(entries)}"
                )
            if name.startswith("cost") and any(v < 0 for v in entries):
                raise ValidationError(f"{name}: yearly costs must be >= 0")
        if self.cost_investment < 0:
            raise ValidationError("cost_investment: must be >= 0")


_LEDGER_KEYS = {
    "lifetime_years", "revenues_electricity", "revenues_ancillary",
    "cost_fuel", "cost_ancillary", "cost_others", "cost_investment",
    "profit_sought",
}


def ledger_from_dict(doc: dict) -> ViabilityLedger:
    if not isinstance(doc, dict):
        raise ValidationError("ledger: expected a mapping")
    unknown = sorted(set(doc) - _LEDGER_KEYS)
    if unknown:
        raise ValidationError(f"ledger: unknown field(s) {unknown}")

    def yearly(name: str) -> tuple[float, ...]:
        entries = doc.get(name)
        if not isinstance(entries, (list, tuple)):
            raise ValidationError(f"{name}: expected a list of yearly entries")
        return tuple(float(v) for v in entries)

    try:
        return ViabilityLedger(
            lifetime_years=int(doc["lifetime_years"]),
            revenues_electricity=yearly("revenues_electricity"),
            revenues_ancillary=yearly("revenues_ancillary"),
            cost_fuel=yearly("cost_fuel"),
            cost_ancillary=yearly("cost_ancillary"),
            cost_others=yearly("cost_others"),
            cost_investment=float(doc["cost_investment"]),
            profit_sought=float(doc["profit_sought"]),
        )
    except KeyError as exc:
        raise ValidationError(f"ledger: missing field {exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"ledger: {exc}") from exc


def load_ledger(path) -> ViabilityLedger:
    import yaml

    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ValidationError(f"ledger file {path}: invalid YAML ({exc})") from exc
    return ledger_from_dict(doc or {})


def evaluate_viability(ledger: ViabilityLedger) -> tuple[bool, float]:
    """Lifetime net margin against investment plus the profit target.

    net_margin = sum over years of (revenues - running costs), minus the
    investment and the profit sought; the project is viable when the
    margin is nonnegative. Linear in the ledger: scaling every entry and
    threshold by a positive factor scales the margin by the same factor.
    """
    yearly = math.fsum(
        math.fsum(entries)
        for entries in (ledger.revenues_electricity, ledger.revenues_ancillary)
    ) - math.fsum(
        math.fsum(entries)
        for entries in (ledger.cost_fuel, ledger.cost_ancillary, ledger.cost_others)
    )
    net_margin = yearly - ledger.cost_investment - ledger.profit_sought
    return net_margin >= 0.0, net_margin


def annual_ancillary_cost(
    unit_id: str,
    scenario: Scenario,
    rule: str | None = None,
    pricing: str | None = None,
) -> float:
    """Yearly allocated cost of one unit, weighted over snapshots.

    Each snapshot contributes weight_hours times the unit's allocated
    cost rate in that snapshot (after existing-unit filtering).
    """
    total_hours = math.fsum(s.weight_hours for s in scenario.snapshots)
    if total_hours > HOURS_PER_YEAR + 1e-9:
        raise ValidationError(
            f"snapshots: weight_hours sum to {total_hours:.9g}, more than "
            f"{HOURS_PER_YEAR:.9g} hours in a year"
        )
    report = run_pipeline(scenario, rule, pricing)
    for uid, cost in report.annual_costs:
        if uid == unit_id:
            return cost
    raise ValidationError(f"fleet: unit '{unit_id}' not present in the scenario")


@dataclass(frozen=True)
class SplitAdjustments:
    """Extra costs of the split design relative to the single unit.

    Splitting forfeits economies of scale; how much is plant-specific,
    so both penalties are required inputs (pass zeros explicitly to
    study the ancillary-cost effect alone).
    """

    extra_fuel_per_year: float
    extra_investment: float

    def __post_init__(self):
        if self.extra_fuel_per_year < 0 or self.extra_investment < 0:
            raise ValidationError("split adjustments: penalties must be >= 0")


@dataclass(frozen=True)
class SplitConfiguration:
    name: str
    annual_ancillary_cost: float
    net_margin: float
    viable: bool


@dataclass(frozen=True)
class SplitComparison:
    original: SplitConfiguration
    split: SplitConfiguration
    parts: int
    per_part_annual_costs: tuple[float, ...]
    adjustments: SplitAdjustments
    winner: str  # "original" | "split" | "tie"


def split_unit(unit: Unit, parts: int) -> list[Unit]:
    """Replace one unit by ``parts`` equal shares of its capacity."""
    if parts < 1:
        raise ValidationError("parts: must be >= 1")
    if not unit.capacity_gw / parts > 0:
        raise ValidationError("capacity_gw: per-part capacity must be > 0")
    return [
        replace(unit, id=f"{unit.id}-p{k}", capacity_gw=unit.capacity_gw / parts)
        for k in range(1, parts + 1)
    ]


def compare_split(
    scenario: Scenario,
    unit_id: str,
    parts: int,
    adjustments: SplitAdjustments,
    ledger: ViabilityLedger,
    rule: str | None = None,
    pricing: str | None = None,
) -> SplitComparison:
    """Original unit versus the same capacity split into equal parts.

    The ledger supplies everything except the ancillary column, which is
    recomputed per configuration (the split configuration additionally
    carries the fuel and investment penalties). ``parts=1`` degenerates
    to the unsplit baseline.
    """
    unit = next((u for u in scenario.fleet if u.id == unit_id), None)
    if unit is None:
        raise ValidationError(f"fleet: unit '{unit_id}' not present in the scenario")
    part_units = split_unit(unit, parts)

    annual_orig = annual_ancillary_cost(unit_id, scenario, rule, pricing)

    split_fleet = tuple(
        u for u in scenario.fleet if u.id != unit_id
    ) + tuple(part_units)
    split_scenario = replace(scenario, fleet=split_fleet)
    split_report = run_pipeline(split_scenario, rule, pricing)
    annual_by_id = dict(split_report.annual_costs)
    per_part = tuple(annual_by_id[p.id] for p in part_units)
    annual_split = math.fsum(per_part)

    years = ledger.lifetime_years
    ledger_orig = replace(ledger, cost_ancillary=(annual_orig,) * years)
    ledger_split = replace(
        ledger,
        cost_ancillary=(annual_split,) * years,
        cost_fuel=tuple(f + adjustments.extra_fuel_per_year for f in ledger.cost_fuel),
        cost_investment=ledger.cost_investment + adjustments.extra_investment,
    )
    viable_orig, margin_orig = evaluate_viability(ledger_orig)
    viable_split, margin_split = evaluate_viability(ledger_split)

    if margin_split > margin_orig:
        winner = "split"
    elif margin_split < margin_orig:
        winner = "original"
    else:
        winner = "tie"

    return SplitComparison(
        original=SplitConfiguration("original", annual_orig, margin_orig, viable_orig),
        split=SplitConfiguration(f"split-{parts}", annual_split, margin_split, viable_split),
        parts=parts,
        per_part_annual_costs=per_part,
        adjustments=adjustments,
        winner=winner,
    )


def write_split_comparison(comparison: SplitComparison, path) -> None:
    """Comparison as CSV: configuration, annual_ancillary_cost, net_margin, viable."""
    with open(path, "w", newline="") as fh:
        fh.write("configuration,annual_ancillary_cost,net_margin,viable\n")
        for cfg in (comparison.original, comparison.split):
            fh.write(
                f"{cfg.name},{cfg.annual_ancillary_cost:.9g},"
                f"{cfg.net_margin:.9g},{str(cfg.viable).lower()}\n"
            )
