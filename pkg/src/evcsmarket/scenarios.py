"""Study harnesses: per-run economic metrics, the with/without-stations
baseline comparison, and penetration / solar-capacity sweeps with trend
verdicts.

Dollar figures from the published 30-bus reference study depend on a dataset
that is not part of this package; sweeps here assert *directions* at desk
scale and can print the reference rows alongside for context only (clearly
non-binding, see REFERENCE_CASE_TABLE).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

from . import bilevel
from .bilevel import Certificate, EquilibriumOutcome
from . import fleet as fleet_mod
from .model import (
    Bus,
    ChargingStation,
    CostSegment,
    Demand,
    EVFleet,
    Generator,
    Line,
    Network,
    Scenario,
    SolverSettings,
    SweepDefaults,
    SolarUnit,
    WtpSegment,
    scale_penetration,
    scale_solar,
)

_IDENTITY_RTOL = 1e-9


@dataclass(frozen=True)
class MetricsRow:
    """One row of study metrics; every derived field is recomputed and
    verified against its definition at construction time."""

    revenue: float
    cost: float
    profit: float
    profit_pct: float | None
    retail_price_c_kwh: float | None
    purchased_price: float | None
    lmp_max: float
    lmp_min: float
    solar_used: float
    solar_available: float
    curtailment_pct: float
    owner_payment: float
    charged_energy: float
    station_energy: float

    def __post_init__(self):
        def close(a, b):
            return abs(a - b) <= _IDENTITY_RTOL * max(1.0, abs(a), abs(b))

        if not close(self.profit, self.revenue - self.cost):
            raise ValueError("profit must equal revenue - cost")
        if self.charged_energy > 0 and self.retail_price_c_kwh is not None:
            if not close(self.retail_price_c_kwh * 10.0 * self.charged_energy, self.owner_payment):
                raise ValueError("retail price must equal payments over charged energy")
        if self.solar_available > 0:
            if not close(
                self.curtailment_pct, 100.0 * (1.0 - self.solar_used / self.solar_available)
            ):
                raise ValueError("curtailment must match utilized/available")
        elif self.curtailment_pct != 0.0:
            raise ValueError("curtailment is 0 by convention when nothing is available")


def metrics_row(outcome: EquilibriumOutcome) -> MetricsRow:
    scenario = outcome.scenario
    T = scenario.network.horizon
    sched = outcome.schedule

    charged = sum(sum(series) for series in sched.total.values())
    station_energy = sched.station_energy()
    owner_payment = sched.cost

    solar_used = sum(sum(series) for series in outcome.dam.solar.values())
    solar_available = sum(sum(s.available) for s in scenario.network.solar_units)
    curtail = 0.0
    if solar_available > 0:
        curtail = 100.0 * (1.0 - solar_used / solar_available)

    lmps = [v for series in outcome.dam.lmp.values() for v in series]
    return MetricsRow(
        revenue=outcome.revenue,
        cost=outcome.cost,
        profit=outcome.profit,
        profit_pct=None if abs(outcome.cost) < 1e-12 else 100.0 * outcome.profit / outcome.cost,
        retail_price_c_kwh=None if charged <= 0 else owner_payment / charged / 10.0,
        purchased_price=None if station_energy <= 0 else outcome.cost / station_energy,
        lmp_max=max(lmps),
        lmp_min=min(lmps),
        solar_used=solar_used,
        solar_available=solar_available,
        curtailment_pct=curtail,
        owner_payment=owner_payment,
        charged_energy=charged,
        station_energy=station_energy,
    )


@dataclass(frozen=True)
class BaselineResult:
    """Optimized run plus the no-station counterfactual payment."""

    row: MetricsRow
    outcome: EquilibriumOutcome
    certificate: Certificate
    owner_payment: float
    owner_payment_no_stations: float

    @property
    def owner_savings(self) -> float:
        return self.owner_payment_no_stations - self.owner_payment


def no_station_payment(scenario: Scenario, offers) -> float:
    """Total owner payment when station access is removed (all station
    connectivity forced to zero): home charging at the retail rate only."""
    fleets = tuple(
        replace(
            f,
            station_connectivity={cid: (0.0,) * scenario.network.horizon for cid, _ in f.station_caps},
        )
        for f in scenario.fleets
    )
    counterfactual = replace(scenario, fleets=fleets)
    schedule = fleet_mod.solve_fleet(
        fleet_mod.fleet_input(counterfactual, offers),
        feas_tol=scenario.settings.feas_tol,
    )
    return schedule.cost


def run_baseline(
    scenario: Scenario, budget: int | None = None, seed: int | None = None
) -> BaselineResult:
    """Optimize offers, certify the outcome, compute metrics, and price the
    no-station counterfactual with the same offer vector."""
    outcome = bilevel.optimize(scenario, budget=budget, seed=seed)
    certificate = bilevel.certify(outcome)
    row = metrics_row(outcome)
    without = no_station_payment(scenario, outcome.offers)
    return BaselineResult(
        row=row,
        outcome=outcome,
        certificate=certificate,
        owner_payment=row.owner_payment,
        owner_payment_no_stations=without,
    )


@dataclass(frozen=True)
class SweepEntry:
    axis: str
    value: float
    result: BaselineResult | None
    error: str | None

    @property
    def row(self) -> MetricsRow | None:
        return None if self.result is None else self.result.row


def _run_sweep(scenario, axis, values, scale_fn, budget, seed, workers) -> list[SweepEntry]:
    """Each level is an independent pipeline over immutable inputs, so levels
    may run on worker threads; results are merged by input position, making
    the output independent of completion order.  A failing level is
    recorded, not fatal."""

    def run_one(value) -> SweepEntry:
        try:
            result = run_baseline(scale_fn(scenario, value), budget=budget, seed=seed)
            return SweepEntry(axis, float(value), result, None)
        except Exception as exc:  # noqa: BLE001 - per-level isolation is the contract
            return SweepEntry(axis, float(value), None, str(exc))

    values = list(values)
    workers = scenario.settings.workers if workers is None else workers
    if workers <= 1 or len(values) <= 1:
        return [run_one(v) for v in values]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_one, values))


def sweep_penetration(
    scenario: Scenario,
    levels,
    budget: int | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> list[SweepEntry]:
    """Re-run the baseline study at each EV penetration level (fraction of
    total demand, EV included)."""
    return _run_sweep(
        scenario, "penetration_level", levels, scale_penetration, budget, seed, workers
    )


def sweep_pv(
    scenario: Scenario,
    multipliers,
    budget: int | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> list[SweepEntry]:
    """Re-run the baseline study with solar availability scaled by each
    multiplier (0 removes solar entirely)."""
    return _run_sweep(scenario, "pv_multiplier", multipliers, scale_solar, budget, seed, workers)


# ---------------------------------------------------------------------------
# trends and export
# ---------------------------------------------------------------------------


def _direction(values) -> str:
    values = [v for v in values if v is not None]
    if len(values) < 2:
        return "n/a"
    non_inc = all(b <= a + 1e-9 for a, b in zip(values, values[1:]))
    non_dec = all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
    if non_inc and non_dec:
        return "constant"
    if non_inc:
        return "non-increasing"
    if non_dec:
        return "non-decreasing"
    return "mixed"


TREND_FIELDS = (
    "revenue",
    "cost",
    "profit",
    "profit_pct",
    "purchased_price",
    "retail_price_c_kwh",
)


def trend_verdicts(entries) -> dict[str, str]:
    verdicts = {}
    rows = [e.row for e in entries if e.row is not None]
    for field_name in TREND_FIELDS:
        verdicts[field_name] = _direction([getattr(r, field_name) for r in rows])
    return verdicts


# Published 30-bus reference rows, context only; this package's sweeps assert
# directions at desk scale, never these dollar figures.
REFERENCE_CASE_TABLE = {
    "penetration": {
        "levels_pct": (10, 15, 20, 25),
        "revenue_kusd": (60.6, 93.1, 132.6, 171.4),
        "profit_pct": (1135, 1022, 821, 81),
        "purchased_price_usd_mwh": (16.7, 18.4, 22.5, 122.2),
    },
    "pv": {
        "installed_mw": (0, 160, 320),
        "profit_kusd": (53.7, 55.6, 56.7),
        "purchased_price_usd_mwh": (19.8, 16.7, 11.5),
        "curtailment_pct": (0, 0.4, 32.1),
    },
}

METRICS_FIELDS = (
    ("revenue_usd", lambda r: _money(r.revenue)),
    ("cost_usd", lambda r: _money(r.cost)),
    ("profit_usd", lambda r: _money(r.profit)),
    ("profit_pct", lambda r: "" if r.profit_pct is None else f"{r.profit_pct:.1f}"),
    (
        "retail_price_c_kwh",
        lambda r: "" if r.retail_price_c_kwh is None else f"{r.retail_price_c_kwh:.1f}",
    ),
    (
        "purchased_price_usd_mwh",
        lambda r: "" if r.purchased_price is None else f"{r.purchased_price:.2f}",
    ),
    ("lmp_max_usd_mwh", lambda r: f"{r.lmp_max:.2f}"),
    ("lmp_min_usd_mwh", lambda r: f"{r.lmp_min:.2f}"),
    ("solar_used_mwh", lambda r: f"{r.solar_used:.2f}"),
    ("curtailment_pct", lambda r: f"{r.curtailment_pct:.2f}"),
    ("owner_payment_usd", lambda r: _money(r.owner_payment)),
)


def _money(value: float) -> str:
    return f"{value:.2f}"


def metrics_csv(entries) -> str:
    """Fixed-layout sweep export: axis column, metric columns, counterfactual
    payment columns, and an error column for levels that failed."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    axis = entries[0].axis if entries else "axis"
    writer.writerow(
        [axis]
        + [name for name, _ in METRICS_FIELDS]
        + ["owner_payment_no_stations_usd", "owner_savings_usd", "error"]
    )
    for e in entries:
        if e.result is None:
            writer.writerow([f"{e.value:g}"] + [""] * (len(METRICS_FIELDS) + 2) + [e.error])
        else:
            writer.writerow(
                [f"{e.value:g}"]
                + [fmt(e.row) for _, fmt in METRICS_FIELDS]
                + [
                    _money(e.result.owner_payment_no_stations),
                    _money(e.result.owner_savings),
                    "",
                ]
            )
    return buf.getvalue()


def baseline_csv(result: BaselineResult) -> str:
    entry = SweepEntry("run", 0.0, result, None)
    return metrics_csv([entry])


# ---------------------------------------------------------------------------
# desk-scale scenario
# ---------------------------------------------------------------------------


def desk_scenario(name: str = "desk_5bus") -> Scenario:
    """Five-bus day-long scenario small enough for exhaustive testing.

    Geography: bus n1 holds the cheap system generator, n2/n3 carry most of
    the fixed load, n4 is the EV hub (big fleet, solar, an expensive local
    peaker behind limited corridors), n5 a smaller EV pocket.  Station access
    is a daytime window matching the solar plateau; home charging is a
    night window at the flat retail rate.  Offer caps sit below the retail
    rate, so station charging wins wherever connected, and rising EV load
    pushes the hub's marginal price up through the peaker's cost steps.
    """
    T = 24

    def window(lo, hi, value=1.0):
        return tuple(value if lo <= t <= hi else 0.0 for t in range(T))

    def profile(base, peak, peak_hours):
        return tuple(base + (peak - base) * (1.0 if t in peak_hours else 0.0) for t in range(T))

    evening = range(17, 22)
    buses = (
        Bus("n1", -1.5, 1.5, reference=True),
        Bus("n2", -1.5, 1.5),
        Bus("n3", -1.5, 1.5),
        Bus("n4", -1.5, 1.5),
        Bus("n5", -1.5, 1.5),
    )
    lines = (
        Line("l12", "n1", "n2", 0.06, -250.0, 250.0),
        Line("l13", "n1", "n3", 0.08, -250.0, 250.0),
        Line("l23", "n2", "n3", 0.10, -150.0, 150.0),
        Line("l24", "n2", "n4", 0.08, -45.0, 45.0),
        Line("l34", "n3", "n4", 0.12, -45.0, 45.0),
        Line("l45", "n4", "n5", 0.08, -80.0, 80.0),
    )
    generators = (
        Generator(
            "g1", "n1", 0.0, 260.0,
            (CostSegment(0.0, 110.0, 18.0), CostSegment(0.0, 150.0, 27.0)),
        ),
        Generator(
            "g2", "n2", 0.0, 120.0,
            (CostSegment(0.0, 60.0, 30.0), CostSegment(0.0, 60.0, 38.0)),
        ),
        Generator(
            "g3", "n4", 0.0, 150.0,
            (
                CostSegment(0.0, 40.0, 45.0),
                CostSegment(0.0, 50.0, 90.0),
                CostSegment(0.0, 60.0, 200.0),
            ),
        ),
    )
    solar_units = (
        SolarUnit("s4", "n4", window(9, 16, 30.0)),
        SolarUnit("s5", "n5", window(9, 16, 12.0)),
    )
    demands = (
        Demand("d2", "n2", profile(35.0, 50.0, evening)),
        Demand("d3", "n3", profile(25.0, 35.0, evening)),
        Demand("d5", "n5", profile(15.0, 25.0, evening)),
    )
    network = Network(buses, lines, generators, solar_units, demands, T)

    def commuter(fid, bus, station, scale):
        drive = tuple(
            20.0 * scale if t in (7, 8, 9) else (20.0 * scale if t in (17, 18, 19) else 0.0)
            for t in range(T)
        )
        # station cap close to (energy need / window length) so charging is
        # forced to spread across the window at every penetration level
        return EVFleet(
            id=fid,
            bus=bus,
            max_charge=40.0 * scale,
            home_cap=20.0 * scale,
            home_connectivity=tuple(1.0 if t <= 6 or t >= 20 else 0.0 for t in range(T)),
            station_caps={station: 18.0 * scale},
            station_connectivity={station: window(9, 16)},
            energy_min=40.0 * scale,
            energy_max=400.0 * scale,
            initial_energy=150.0 * scale,
            final_energy_min=150.0 * scale,
            charge_efficiency=0.95,
            discharge_efficiency=0.95,
            driving=drive,
            tou=(200.0,) * T,
        )

    fleets = (commuter("f4", "n4", "c4", 1.0), commuter("f5", "n5", "c5", 0.5))

    def station(cid, fid, cap):
        return ChargingStation(
            id=cid,
            fleet_id=fid,
            offer_min=(60.0,) * T,
            offer_max=(190.0,) * T,
            segments=(
                WtpSegment(cap / 2, (150.0,) * T, (250.0,) * T),
                WtpSegment(cap / 2, (120.0,) * T, (220.0,) * T),
            ),
        )

    stations = (station("c4", "f4", 18.0), station("c5", "f5", 9.0))

    settings = SolverSettings(
        budget=60,
        multistarts=3,
        step_min=0.5,
        parameterization="station_blocks",
        block_width=24,
        seed=0,
    )
    sweeps = SweepDefaults(
        penetration_levels=(0.10, 0.15, 0.20, 0.25),
        pv_multipliers=(0.0, 1.0, 2.0),
    )
    return Scenario(name, network, fleets, stations, settings, sweeps)
