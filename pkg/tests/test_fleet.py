"""Fleet scheduling: cost optimum, tie-breaks, identities, dual report."""

import dataclasses

import numpy as np
import pytest

from evcsmarket import fleet as fl
from evcsmarket import lpcore
from evcsmarket import model as md
from conftest import two_period_fleet


def toy_input(tau, tou=20.0, driving=(0.0, 10.0), e_init=0.0):
    fleet, station = two_period_fleet(tou=tou, driving=driving, e_init=e_init)
    return fl.FleetInput((fleet,), (station,), 2, {"c1": tuple(tau)})


def random_fleet_input(rng):
    T = int(rng.integers(2, 5))
    eta_ch = float(rng.uniform(0.85, 1.0))
    eta_dc = float(rng.uniform(0.85, 1.0))
    driving = tuple(float(rng.uniform(0, 4)) for _ in range(T))
    need = sum(driving) / eta_dc
    e_max = need + float(rng.uniform(5, 20))
    fleet = md.EVFleet(
        id="f1",
        bus="b1",
        max_charge=float(rng.uniform(6, 12)),
        home_cap=float(rng.uniform(4, 8)),
        home_connectivity=tuple(float(rng.integers(0, 2)) for _ in range(T)),
        station_caps={"c1": float(rng.uniform(4, 9))},
        station_connectivity={"c1": tuple(float(rng.integers(0, 2)) for _ in range(T))},
        energy_min=0.0,
        energy_max=e_max,
        initial_energy=float(rng.uniform(need, e_max)),
        charge_efficiency=eta_ch,
        discharge_efficiency=eta_dc,
        driving=driving,
        tou=tuple(float(rng.uniform(15, 45)) for _ in range(T)),
    )
    station = md.ChargingStation(
        "c1",
        "f1",
        (0.0,) * T,
        (60.0,) * T,
        (md.WtpSegment(5.0, (0.0,) * T, (50.0,) * T), md.WtpSegment(5.0, (0.0,) * T, (45.0,) * T)),
    )
    offers = {"c1": tuple(float(rng.uniform(5, 55)) for _ in range(T))}
    return fl.FleetInput((fleet,), (station,), T, offers)


class TestSolve:
    def test_cheapest_station_hour_wins(self):
        # strategies: station hour 0 costs 300, home costs 200, station hour 1 costs 100
        sched = fl.solve_fleet(toy_input((30.0, 10.0)))
        assert sched.cost == pytest.approx(100.0, abs=1e-6)
        assert sched.station["f1"]["c1"] == pytest.approx((0.0, 10.0), abs=1e-9)
        assert sched.home["f1"] == pytest.approx((0.0, 0.0), abs=1e-9)

    def test_price_rise_flips_to_home(self):
        sched = fl.solve_fleet(toy_input((30.0, 50.0)))
        assert sched.cost == pytest.approx(200.0, abs=1e-6)
        assert sched.station_energy() == pytest.approx(0.0, abs=1e-9)
        assert sum(sched.home["f1"]) == pytest.approx(10.0, abs=1e-9)

    def test_no_station_access_forces_home(self):
        fleet, station = two_period_fleet()
        fleet = dataclasses.replace(fleet, station_connectivity={"c1": (0.0, 0.0)})
        inp = fl.FleetInput((fleet,), (station,), 2, {"c1": (5.0, 5.0)})
        sched = fl.solve_fleet(inp)
        assert sched.station_energy() == pytest.approx(0.0, abs=1e-12)
        assert sched.cost == pytest.approx(sum(sched.home["f1"]) * 20.0, abs=1e-9)

    def test_tie_prefers_station(self):
        sched = fl.solve_fleet(toy_input((20.0, 20.0)))  # offer == retail rate
        assert sched.cost == pytest.approx(200.0, abs=1e-6)
        assert sched.station_energy() == pytest.approx(10.0, abs=1e-6)
        assert sum(sched.home["f1"]) == pytest.approx(0.0, abs=1e-6)
        assert sched.tie_break_applied

    def test_tie_break_disabled_keeps_cost(self):
        sched = fl.solve_fleet(toy_input((20.0, 20.0)), tie_break=False)
        assert sched.cost == pytest.approx(200.0, abs=1e-6)

    def test_nothing_needed_zero_schedule(self):
        fleet, station = two_period_fleet(driving=(0.0, 0.0))
        fleet = dataclasses.replace(fleet, energy_max=0.0, initial_energy=0.0)
        inp = fl.FleetInput((fleet,), (station,), 2, {"c1": (30.0, 10.0)})
        sched = fl.solve_fleet(inp)
        assert sched.cost == pytest.approx(0.0, abs=1e-12)
        assert sched.total["f1"] == pytest.approx((0.0, 0.0), abs=1e-12)

    def test_infeasible_names_first_period(self):
        inp = toy_input((30.0, 10.0), driving=(0.0, 50.0))
        with pytest.raises(fl.FleetInfeasibleError) as err:
            fl.solve_fleet(inp)
        assert err.value.period == 1
        assert err.value.fleet_id == "f1"

    def test_final_energy_requirement_forces_charging(self):
        fleet, station = two_period_fleet(driving=(0.0, 0.0), e_init=5.0)
        fleet = dataclasses.replace(fleet, final_energy_min=12.0)
        inp = fl.FleetInput((fleet,), (station,), 2, {"c1": (10.0, 12.0)})
        sched = fl.solve_fleet(inp)
        assert sched.energy["f1"][-1] >= 12.0 - 1e-9
        assert sched.cost == pytest.approx(70.0, abs=1e-6)  # 7 MWh at the cheap hour


class TestStructure:
    def test_offers_must_stay_in_band(self):
        fleet, station = two_period_fleet(tau_bounds=(10.0, 40.0))
        inp = fl.FleetInput((fleet,), (station,), 2, {"c1": (45.0, 20.0)})
        with pytest.raises(fl.FleetStructureError, match="outside"):
            fl.build_fleet(inp)

    def test_missing_offer_rejected(self):
        fleet, station = two_period_fleet()
        with pytest.raises(fl.FleetStructureError, match="no offer price"):
            fl.build_fleet(fl.FleetInput((fleet,), (station,), 2, {}))

    def test_segment_billing_needs_prices(self):
        inp = toy_input((30.0, 10.0))
        with pytest.raises(fl.FleetStructureError, match="segment_prices"):
            fl.build_fleet(inp, billing=fl.BILLING_WTP_SEGMENTS)

    def test_identities_hold_exactly(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            inp = random_fleet_input(rng)
            try:
                sched = fl.solve_fleet(inp)
            except fl.FleetInfeasibleError:
                continue
            f = inp.fleets[0]
            for t in range(inp.horizon):
                st_sum = sum(sched.station["f1"][c][t] for c in sched.station["f1"])
                assert sched.total["f1"][t] == st_sum + sched.home["f1"][t]
                seg_sum = sum(row[t] for row in sched.segments["f1"]["c1"])
                assert sched.station["f1"]["c1"][t] == pytest.approx(seg_sum, abs=0.0)
                assert (
                    f.energy_min - 1e-6 <= sched.energy["f1"][t] <= f.energy_max + 1e-6
                )
            # recursion replayed from scratch
            e = f.initial_energy
            for t in range(inp.horizon):
                e = e - f.driving[t] / f.discharge_efficiency
                e = e + sched.total["f1"][t] * f.charge_efficiency
                assert e == sched.energy["f1"][t]

    def test_price_response_monotone(self):
        # raising one offer price never increases total station charging
        base = (22.0, 18.0)
        station_totals = []
        for tau1 in (10.0, 15.0, 20.0, 25.0, 30.0):
            sched = fl.solve_fleet(toy_input((base[0], tau1)))
            station_totals.append(sched.station_energy())
        assert all(b <= a + 1e-9 for a, b in zip(station_totals, station_totals[1:]))

    def test_cost_non_increasing_when_price_drops(self):
        hi = fl.solve_fleet(toy_input((30.0, 25.0)))
        lo = fl.solve_fleet(toy_input((30.0, 12.0)))
        assert lo.cost <= hi.cost + 1e-9


class TestDualForms:
    def test_auto_dual_matches_primal_randomized(self):
        rng = np.random.default_rng(9)
        count = 0
        for _ in range(25):
            inp = random_fleet_input(rng)
            try:
                primal = lpcore.require_optimal(fl.build_fleet(inp))
            except lpcore.LpSolveError:
                continue
            dual = lpcore.require_optimal(lpcore.dualize(fl.build_fleet(inp)))
            assert dual.objective == pytest.approx(primal.objective, rel=1e-6, abs=1e-6)
            count += 1
        assert count >= 15

    def test_literal_transcription_unbounded_with_positive_widths(self):
        inp = toy_input((30.0, 10.0))
        sol = lpcore.solve(fl.build_fleet_paper_dual(inp, {"c1": ((50.0, 50.0),)}))
        assert sol.status == lpcore.UNBOUNDED

    def test_sign_corrected_matches_segment_billing_when_e0_zero(self):
        inp = toy_input((30.0, 10.0), e_init=0.0)
        report = fl.dual_form_report(inp, {"c1": ((30.0, 10.0),)})
        assert report.literal_dual is None
        assert report.corrected_matches_segment
        assert not report.literal_matches_offer

    def test_report_quantifies_initial_energy_gap(self):
        inp = toy_input((30.0, 10.0), e_init=5.0)
        report = fl.dual_form_report(inp, {"c1": ((30.0, 10.0),)})
        # transcription omits the initial-energy value: 5 MWh at the cheap
        # 10 $/MWh marginal hour
        assert report.segment_primal == pytest.approx(50.0, abs=1e-6)
        assert report.corrected_sign_dual == pytest.approx(100.0, abs=1e-6)
        assert not report.corrected_matches_segment

    def test_zero_demand_no_station_literal_dual_zero(self):
        fleet = md.EVFleet(
            id="f1", bus="b1", max_charge=5.0, home_cap=5.0,
            home_connectivity=(1.0, 1.0), station_caps={}, station_connectivity={},
            energy_min=0.0, energy_max=10.0, initial_energy=5.0,
            charge_efficiency=1.0, discharge_efficiency=1.0,
            driving=(0.0, 0.0), tou=(20.0, 20.0),
        )
        inp = fl.FleetInput((fleet,), (), 2, {})
        sol = lpcore.solve(fl.build_fleet_paper_dual(inp, {}))
        assert sol.is_optimal
        assert sol.objective == pytest.approx(0.0, abs=1e-9)
        assert lpcore.require_optimal(fl.build_fleet(inp)).objective == pytest.approx(0.0)

    def test_report_summary_mentions_all_programs(self):
        report = fl.dual_form_report(toy_input((30.0, 10.0)), {"c1": ((40.0, 40.0),)})
        text = report.summary()
        assert "offer-billed" in text
        assert "literal transcribed dual" in text
        assert "sign-corrected" in text


def test_schedule_csv_layout():
    sched = fl.solve_fleet(toy_input((30.0, 10.0)))
    text = fl.schedule_csv(sched)
    lines = text.splitlines()
    assert lines[0] == "fleet,source,period,mw"
    assert "f1,home,0,0.000000" in lines
    assert "f1,c1,1,10.000000" in lines
