import math
from dataclasses import replace

import pytest

from freqshare import (
    ReserveBid,
    Scenario,
    SplitAdjustments,
    SystemSnapshot,
    Unit,
    ValidationError,
    ViabilityLedger,
    annual_ancillary_cost,
    compare_split,
    evaluate_viability,
    ledger_from_dict,
    run_pipeline,
    split_unit,
    write_split_comparison,
)


def ledger(years=2, rev_e=100.0, rev_a=10.0, fuel=30.0, anc=20.0, other=10.0,
           invest=80.0, profit=15.0):
    return ViabilityLedger(
        lifetime_years=years,
        revenues_electricity=(rev_e,) * years,
        revenues_ancillary=(rev_a,) * years,
        cost_fuel=(fuel,) * years,
        cost_ancillary=(anc,) * years,
        cost_others=(other,) * years,
        cost_investment=invest,
        profit_sought=profit,
    )


def two_snapshot_scenario(fleet=None):
    snapshots = (
        SystemSnapshot(inertia_gws=100.0, label="low", delivery_time_s=10.0,
                       weight_hours=2000.0),
        SystemSnapshot(inertia_gws=200.0, label="high", delivery_time_s=10.0,
                       weight_hours=6760.0),
    )
    stack = (
        ReserveBid("free", 0.0, 0.5),
        ReserveBid("mid", 4.0, 1.0),
        ReserveBid("mid2", 7.0, 1.5),
        ReserveBid("deep", 11.0, 3.0),
        ReserveBid("peak", 18.0, 4.0),
    )
    return Scenario(
        snapshots=snapshots,
        fleet=fleet or (Unit("nuclear", 1.8), Unit("wind", 1.2), Unit("gas", 0.4)),
        bid_stacks={"low": stack, "high": stack},
        name="two-snapshots",
    )


# --- evaluate_viability -----------------------------------------------------


def test_all_zero_ledger_is_marginally_viable():
    zero = ledger(rev_e=0, rev_a=0, fuel=0, anc=0, other=0, invest=0, profit=0)
    viable, margin = evaluate_viability(zero)
    assert viable and margin == 0.0


def test_two_year_example_above_threshold():
    viable, margin = evaluate_viability(ledger())
    # yearly (100 + 10 - 30 - 20 - 10) = 50 over two years, against 80 + 15
    assert margin == pytest.approx(5.0, abs=1e-12)
    assert viable


def test_two_year_example_below_threshold():
    viable, margin = evaluate_viability(ledger(profit=25.0))
    assert margin == pytest.approx(-5.0, abs=1e-12)
    assert not viable


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_margin_scales_linearly(lam):
    base = ledger()
    scaled = ViabilityLedger(
        lifetime_years=base.lifetime_years,
        revenues_electricity=tuple(v * lam for v in base.revenues_electricity),
        revenues_ancillary=tuple(v * lam for v in base.revenues_ancillary),
        cost_fuel=tuple(v * lam for v in base.cost_fuel),
        cost_ancillary=tuple(v * lam for v in base.cost_ancillary),
        cost_others=tuple(v * lam for v in base.cost_others),
        cost_investment=base.cost_investment * lam,
        profit_sought=base.profit_sought * lam,
    )
    _, margin = evaluate_viability(base)
    viable_scaled, margin_scaled = evaluate_viability(scaled)
    assert margin_scaled == pytest.approx(margin * lam, rel=1e-12)
    assert viable_scaled == (margin >= 0)


def test_ledger_validation():
    with pytest.raises(ValidationError):
        ledger(years=0)
    with pytest.raises(ValidationError):
        replace(ledger(), cost_fuel=(30.0,))  # wrong length
    with pytest.raises(ValidationError):
        replace(ledger(), cost_others=(-1.0, -1.0))
    with pytest.raises(ValidationError):
        replace(ledger(), cost_investment=-5.0)


def test_ledger_from_dict_round_and_errors():
    doc = {
        "lifetime_years": 2,
        "revenues_electricity": [100, 100],
        "revenues_ancillary": [10, 10],
        "cost_fuel": [30, 30],
        "cost_ancillary": [20, 20],
        "cost_others": [10, 10],
        "cost_investment": 80,
        "profit_sought": 15,
    }
    viable, margin = evaluate_viability(ledger_from_dict(doc))
    assert viable and margin == pytest.approx(5.0)
    with pytest.raises(ValidationError):
        ledger_from_dict({**doc, "cost_fuel": 30})
    with pytest.raises(ValidationError):
        ledger_from_dict({**doc, "horizon": 3})


# --- annual_ancillary_cost ---------------------------------------------------


def test_annual_cost_is_weighted_sum_of_snapshot_rates():
    scenario = two_snapshot_scenario()
    # hand-composed: low-inertia shares [47812.5, 7875, 0],
    # high-inertia shares [15318.75, 2400, 0]
    assert annual_ancillary_cost("nuclear", scenario) == pytest.approx(
        2000.0 * 47812.5 + 6760.0 * 15318.75, rel=1e-12
    )
    assert annual_ancillary_cost("wind", scenario) == pytest.approx(
        2000.0 * 7875.0 + 6760.0 * 2400.0, rel=1e-12
    )


def test_unit_below_cutoff_everywhere_pays_nothing():
    assert annual_ancillary_cost("gas", two_snapshot_scenario()) == 0.0


def test_single_snapshot_single_term():
    scenario = two_snapshot_scenario()
    one = replace(scenario,
                  snapshots=(replace(scenario.snapshots[0], weight_hours=1000.0),))
    # low-inertia wind rate is 7875/h
    assert annual_ancillary_cost("wind", one) == pytest.approx(7875e3)


def test_unknown_unit_rejected():
    with pytest.raises(ValidationError):
        annual_ancillary_cost("ghost", two_snapshot_scenario())


def test_weight_hours_budget_enforced():
    scenario = two_snapshot_scenario()
    heavy = replace(scenario,
                    snapshots=tuple(replace(s, weight_hours=5000.0)
                                    for s in scenario.snapshots))
    with pytest.raises(ValidationError):
        annual_ancillary_cost("wind", heavy)


# --- compare_split ----------------------------------------------------------


def test_split_unit_shares_capacity_equally():
    parts = split_unit(Unit("plant", 2.0), 4)
    assert [p.capacity_gw for p in parts] == [0.5] * 4
    assert [p.id for p in parts] == ["plant-p1", "plant-p2", "plant-p3", "plant-p4"]
    with pytest.raises(ValidationError):
        split_unit(Unit("plant", 2.0), 0)
    with pytest.raises(ValidationError):
        split_unit(Unit("plant", 0.0), 2)


def test_split_of_two_gw_unit_reduces_cost():
    fleet = (Unit("nuclear", 1.8), Unit("wind", 1.2), Unit("gas", 0.4),
             Unit("new-plant", 2.0))
    scenario = two_snapshot_scenario(fleet=fleet)
    comparison = compare_split(
        scenario, "new-plant", 2, SplitAdjustments(0.0, 0.0),
        ledger(years=2, rev_e=500e6, invest=100e6, profit=0.0),
    )
    assert comparison.split.annual_ancillary_cost < comparison.original.annual_ancillary_cost
    assert all(c < comparison.original.annual_ancillary_cost
               for c in comparison.per_part_annual_costs)
    assert comparison.split.net_margin >= comparison.original.net_margin
    assert comparison.winner == "split"


def test_split_below_cutoff_changes_nothing_but_penalties_decide():
    fleet = (Unit("nuclear", 1.8), Unit("tiny", 0.2))
    scenario = two_snapshot_scenario(fleet=fleet)
    comparison = compare_split(
        scenario, "tiny", 2, SplitAdjustments(extra_fuel_per_year=5.0, extra_investment=10.0),
        ledger(),
    )
    assert comparison.original.annual_ancillary_cost == 0.0
    assert comparison.split.annual_ancillary_cost == 0.0
    # with positive penalties the split can never win
    assert comparison.winner == "original"


def test_no_split_is_the_identity():
    fleet = (Unit("nuclear", 1.8), Unit("wind", 1.2))
    scenario = two_snapshot_scenario(fleet=fleet)
    comparison = compare_split(scenario, "wind", 1, SplitAdjustments(0.0, 0.0), ledger())
    assert comparison.split.annual_ancillary_cost == pytest.approx(
        comparison.original.annual_ancillary_cost, rel=1e-12
    )
    assert comparison.split.net_margin == pytest.approx(
        comparison.original.net_margin, rel=1e-12
    )
    assert comparison.winner == "tie"


def test_splitting_never_raises_a_parts_cost():
    fleet = (Unit("nuclear", 1.8), Unit("wind", 1.2), Unit("plant", 2.0))
    scenario = two_snapshot_scenario(fleet=fleet)
    base = annual_ancillary_cost("plant", scenario)
    for parts in (2, 3, 4):
        comparison = compare_split(scenario, "plant", parts,
                                   SplitAdjustments(0.0, 0.0), ledger())
        assert all(c <= base + 1e-9 for c in comparison.per_part_annual_costs)


def test_removing_the_largest_unit_never_raises_total_cost():
    scenario = two_snapshot_scenario()
    full = run_pipeline(scenario)
    reduced = replace(scenario, fleet=scenario.fleet[1:])
    partial = run_pipeline(reduced)
    for before, after in zip(full.sides, partial.sides):
        assert after.clearing.total_cost_rate <= before.clearing.total_cost_rate + 1e-9


def test_split_comparison_csv(tmp_path):
    fleet = (Unit("nuclear", 1.8), Unit("plant", 2.0))
    scenario = two_snapshot_scenario(fleet=fleet)
    comparison = compare_split(scenario, "plant", 2, SplitAdjustments(0.0, 0.0), ledger())
    path = tmp_path / "split.csv"
    write_split_comparison(comparison, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "configuration,annual_ancillary_cost,net_margin,viable"
    assert lines[1].startswith("original,")
    assert lines[2].startswith("split-2,")
