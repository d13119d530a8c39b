import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from evcsmarket import model as md
from evcsmarket import scenarios as sc


def two_period_fleet(tau_bounds=(0.0, 60.0), tou=20.0, driving=(0.0, 10.0), e_init=0.0):
    """T=2 single-fleet single-station toy; at the default arguments the
    cheapest plan charges 10 MWh and the three pure strategies price at
    station-hour-0, home, station-hour-1."""
    fleet = md.EVFleet(
        id="f1",
        bus="b1",
        max_charge=10.0,
        home_cap=10.0,
        home_connectivity=(1.0, 1.0),
        station_caps={"c1": 10.0},
        station_connectivity={"c1": (1.0, 1.0)},
        energy_min=0.0,
        energy_max=20.0,
        initial_energy=e_init,
        charge_efficiency=1.0,
        discharge_efficiency=1.0,
        driving=driving,
        tou=(tou, tou),
    )
    station = md.ChargingStation(
        "c1",
        "f1",
        (tau_bounds[0],) * 2,
        (tau_bounds[1],) * 2,
        (md.WtpSegment(10.0, (0.0, 0.0), (50.0, 50.0)),),
    )
    return fleet, station


def one_bus_scenario(
    tou=30.0,
    offer_lo=10.0,
    offer_hi=40.0,
    gen_cost=10.0,
    demand=50.0,
    budget=120,
    seed=0,
):
    """One bus, one generator, the two-period toy fleet: the market side
    prices every hour at gen_cost, so profit is transparent."""
    net = md.Network(
        buses=(md.Bus("b1", -1.0, 1.0, True),),
        lines=(),
        generators=(
            md.Generator("g1", "b1", 0.0, 200.0, (md.CostSegment(0.0, 200.0, gen_cost),)),
        ),
        solar_units=(),
        demands=(md.Demand("d1", "b1", (demand, demand)),),
        horizon=2,
    )
    fleet, station = two_period_fleet(tau_bounds=(offer_lo, offer_hi), tou=tou)
    settings = md.SolverSettings(budget=budget, multistarts=4, seed=seed)
    return md.Scenario("one_bus_toy", net, (fleet,), (station,), settings)


@pytest.fixture(scope="session")
def desk():
    return sc.desk_scenario()


@pytest.fixture(scope="session")
def desk_baseline(desk):
    return sc.run_baseline(desk)


@pytest.fixture(scope="session")
def desk_penetration_sweep(desk):
    return sc.sweep_penetration(desk, desk.sweeps.penetration_levels)


@pytest.fixture(scope="session")
def desk_pv_sweep(desk):
    return sc.sweep_pv(desk, desk.sweeps.pv_multipliers)
