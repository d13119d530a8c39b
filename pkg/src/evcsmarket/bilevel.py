"""Upper-level station strategy: search over offer prices to maximize total
station profit, with the market side and the fleet side answered by exact LP
solves, plus an a-posteriori certificate of lower-level optimality.

Solution structure: for fixed offer prices the fleet program depends only on
those prices and the retail rate, and the market program depends only on the
resulting fleet withdrawals and segment quantities, so one evaluation is
fleet-then-market, each solved exactly.  The upper level is a multi-start
coordinate pattern search over a configurable offer parameterization; a
brute-force grid evaluator serves as the search oracle on small instances.

When followers are indifferent (offer price equal to the retail rate) the
deterministic fleet tie-break resolves toward station charging, i.e. in the
stations' favor; the search is therefore optimistic with respect to
lower-level ties.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import dam as dam_mod
from . import fleet as fleet_mod
from . import lpcore
from .model import (
    PARAM_FULL,
    PARAM_PER_STATION_PERIOD,
    PARAM_STATION_BLOCKS,
    Scenario,
)

BRUTE_FORCE_CAP = 1_000_000


@dataclass(frozen=True)
class OfferParameter:
    """One searchable degree of freedom: a station's offer over a span of
    periods.  The search range is the envelope of the per-period offer
    bands; expansion clips back into each period's own band."""

    station_id: str
    t_start: int
    t_end: int
    lower: float
    upper: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def offer_parameters(scenario: Scenario, mode=None, block_width=None) -> tuple[OfferParameter, ...]:
    """Parameter grid for a scenario's strategy space.

    `full` and `per_station_period` coincide here because every station
    serves exactly one fleet; `station_blocks` shares one parameter across
    `block_width` consecutive periods.
    """
    mode = mode or scenario.settings.parameterization
    width = block_width or scenario.settings.block_width
    T = scenario.network.horizon
    if mode in (PARAM_FULL, PARAM_PER_STATION_PERIOD):
        spans = [(t, t + 1) for t in range(T)]
    elif mode == PARAM_STATION_BLOCKS:
        spans = [(t, min(t + width, T)) for t in range(0, T, width)]
    else:
        raise ValueError(f"unknown parameterization {mode!r}")
    params = []
    for st in scenario.stations:
        for t0, t1 in spans:
            params.append(
                OfferParameter(
                    station_id=st.id,
                    t_start=t0,
                    t_end=t1,
                    lower=min(st.offer_min[t] for t in range(t0, t1)),
                    upper=max(st.offer_max[t] for t in range(t0, t1)),
                )
            )
    return tuple(params)


@dataclass(frozen=True)
class Strategy:
    """A point in the offer-parameter space; expands to per-period offers."""

    parameters: tuple[OfferParameter, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.parameters) != len(self.values):
            raise ValueError("strategy needs one value per parameter")

    def offers(self, scenario: Scenario) -> dict[str, tuple[float, ...]]:
        """Expand to a per-station offer series, clipped into each period's
        admissible band so the result always satisfies the offer bounds."""
        T = scenario.network.horizon
        series = {st.id: [None] * T for st in scenario.stations}
        for p, v in zip(self.parameters, self.values):
            st = scenario.station(p.station_id)
            for t in range(p.t_start, p.t_end):
                series[st.id][t] = min(max(v, st.offer_min[t]), st.offer_max[t])
        for st in scenario.stations:
            for t in range(T):
                if series[st.id][t] is None:
                    series[st.id][t] = st.offer_min[t]
        return {k: tuple(v) for k, v in series.items()}


def midpoint_strategy(scenario: Scenario, params=None) -> Strategy:
    params = params or offer_parameters(scenario)
    return Strategy(params, tuple(p.midpoint for p in params))


@dataclass(frozen=True)
class SearchInfo:
    evaluations: int
    starts: int
    seed: int
    budget: int


@dataclass(frozen=True)
class EquilibriumOutcome:
    """One full lower-level response to a strategy, with profit breakdown.

    `revenue` is station energy times offer price; `cost` is station energy
    times the locational price at the buying fleet's bus; `profit` is their
    difference, stored exactly as computed from the contained schedule and
    prices.
    """

    scenario: Scenario
    strategy: Strategy
    offers: dict[str, tuple[float, ...]]
    schedule: fleet_mod.FleetSchedule
    dam: dam_mod.DamOutcome
    revenue: float
    cost: float
    profit: float
    search: SearchInfo | None = None


def dam_input_for(scenario: Scenario, schedule: fleet_mod.FleetSchedule) -> dam_mod.DamInput:
    """Assemble the market input from a cleared fleet schedule."""
    withdrawals = tuple(
        dam_mod.FleetWithdrawal(f.id, f.bus, schedule.total[f.id]) for f in scenario.fleets
    )
    bids = []
    for st in scenario.stations:
        quantities = schedule.segments[st.fleet_id][st.id]
        bids.append(dam_mod.station_bid_from_quantities(st, quantities))
    return dam_mod.DamInput(scenario.network, withdrawals, tuple(bids))


def evaluate(strategy: Strategy, scenario: Scenario) -> EquilibriumOutcome:
    """Fleet response to the offers, market clearing of the response, and the
    resulting station profit."""
    offers = strategy.offers(scenario)
    schedule = fleet_mod.solve_fleet(
        fleet_mod.fleet_input(scenario, offers), feas_tol=scenario.settings.feas_tol
    )
    dam_out = dam_mod.solve_dam(
        dam_input_for(scenario, schedule), feas_tol=scenario.settings.feas_tol
    )

    revenue = 0.0
    cost = 0.0
    for st in scenario.stations:
        fleet = scenario.fleet(st.fleet_id)
        series = schedule.station[st.fleet_id][st.id]
        tau = offers[st.id]
        lmp = dam_out.lmp[fleet.bus]
        for t in range(scenario.network.horizon):
            revenue += series[t] * tau[t]
            cost += series[t] * lmp[t]
    return EquilibriumOutcome(
        scenario=scenario,
        strategy=strategy,
        offers=offers,
        schedule=schedule,
        dam=dam_out,
        revenue=float(revenue),
        cost=float(cost),
        profit=float(revenue - cost),
    )


class _Evaluator:
    """Memoizing wrapper; the budget counts distinct strategy evaluations."""

    def __init__(self, scenario, params, budget):
        self.scenario = scenario
        self.params = params
        self.budget = budget
        self.used = 0
        self.cache: dict[tuple, EquilibriumOutcome] = {}

    def key(self, values):
        return tuple(round(v, 9) for v in values)

    def __call__(self, values):
        key = self.key(values)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if self.used >= self.budget:
            return None
        self.used += 1
        outcome = evaluate(Strategy(self.params, values), self.scenario)
        self.cache[key] = outcome
        return outcome


def _better(candidate: EquilibriumOutcome, incumbent: EquilibriumOutcome | None) -> bool:
    """Deterministic preference: higher profit, then lexicographically
    smaller expanded offer values."""
    if incumbent is None:
        return True
    if candidate.profit > incumbent.profit + 1e-12:
        return True
    if candidate.profit < incumbent.profit - 1e-12:
        return False
    return candidate.strategy.values < incumbent.strategy.values


def optimize(
    scenario: Scenario,
    budget: int | None = None,
    seed: int | None = None,
) -> EquilibriumOutcome:
    """Multi-start coordinate pattern search over the offer parameters.

    Starts at the band midpoint, both band edges, and seeded random points;
    sweeps each coordinate up and down by the current step (initially a
    quarter of the band, halving down to the configured minimum step).
    Deterministic given the seed; never produces offers outside the
    per-period bands (expansion clips).  The budget caps the number of
    distinct strategies evaluated.
    """
    settings = scenario.settings
    budget = settings.budget if budget is None else budget
    seed = settings.seed if seed is None else seed
    if budget < 1:
        raise ValueError("budget must be >= 1")
    params = offer_parameters(scenario)
    ev = _Evaluator(scenario, params, budget)
    rng = np.random.default_rng(seed)

    lo = np.array([p.lower for p in params])
    hi = np.array([p.upper for p in params])
    span = hi - lo

    starts = [0.5 * (lo + hi), lo.copy(), hi.copy()]
    while len(starts) < max(settings.multistarts, 1):
        starts.append(lo + rng.uniform(0.0, 1.0, len(params)) * span)

    best: EquilibriumOutcome | None = None
    n_started = 0
    for start in starts:
        if ev.used >= budget and ev.key(tuple(start)) not in ev.cache:
            break
        n_started += 1
        current = ev(tuple(start))
        if current is None:
            break
        if _better(current, best):
            best = current
        x = np.array(current.strategy.values)
        frac = 0.25
        exhausted = False
        while not exhausted and float(np.max(frac * span)) >= settings.step_min:
            improved = None
            for d in range(len(params)):
                step = frac * span[d]
                if step <= 0.0:
                    continue
                for sgn in (1.0, -1.0):
                    cand = x.copy()
                    cand[d] = min(max(cand[d] + sgn * step, lo[d]), hi[d])
                    if cand[d] == x[d]:
                        continue
                    outcome = ev(tuple(cand))
                    if outcome is None:
                        exhausted = True
                        break
                    if outcome.profit > current.profit + 1e-12 and (
                        improved is None or _better(outcome, improved)
                    ):
                        improved = outcome
                if exhausted:
                    break
            if improved is not None:
                current = improved
                x = np.array(current.strategy.values)
                if _better(current, best):
                    best = current
            elif not exhausted:
                frac *= 0.5
        if _better(current, best):
            best = current

    assert best is not None
    info = SearchInfo(evaluations=ev.used, starts=n_started, seed=seed, budget=budget)
    return EquilibriumOutcome(
        scenario=best.scenario,
        strategy=best.strategy,
        offers=best.offers,
        schedule=best.schedule,
        dam=best.dam,
        revenue=best.revenue,
        cost=best.cost,
        profit=best.profit,
        search=info,
    )


def brute_force(
    scenario: Scenario, levels: int, cap: int = BRUTE_FORCE_CAP
) -> EquilibriumOutcome:
    """Exhaustive grid over the offer parameters, `levels` points per
    dimension; exact argmax over the grid with the same deterministic
    tie-break as `optimize`.  Guards against grids above `cap` points."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    params = offer_parameters(scenario)
    total = levels ** len(params)
    if total > cap:
        raise ValueError(f"grid of {total} evaluations exceeds cap {cap}")
    axes = []
    for p in params:
        if levels == 1 or p.upper == p.lower:
            axes.append([0.5 * (p.lower + p.upper)] if p.upper == p.lower else [p.lower])
        else:
            axes.append(list(np.linspace(p.lower, p.upper, levels)))
    best: EquilibriumOutcome | None = None
    count = 0
    for combo in itertools.product(*axes):
        outcome = evaluate(Strategy(params, combo), scenario)
        count += 1
        if _better(outcome, best):
            best = outcome
    assert best is not None
    return EquilibriumOutcome(
        scenario=best.scenario,
        strategy=best.strategy,
        offers=best.offers,
        schedule=best.schedule,
        dam=best.dam,
        revenue=best.revenue,
        cost=best.cost,
        profit=best.profit,
        search=SearchInfo(evaluations=count, starts=0, seed=-1, budget=count),
    )


# ---------------------------------------------------------------------------
# certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Itemized a-posteriori check of one equilibrium outcome.

    Residuals are relative (scaled by the magnitude of what they compare).
    Feasibility families are checked against `feas_tolerance`, the two
    strong-duality families and the profit identity against `tolerance`.
    The embedded dual vectors extend the outcome's locational prices to a
    full dual solution of each period's market program and carry the fleet
    program's dual values.
    """

    residuals: dict[str, float]
    tolerance: float
    feas_tolerance: float
    dam_duals: dict[str, float]
    fleet_duals: dict[str, float]

    _DUALITY_FAMILIES = ("dam_strong_duality", "fleet_strong_duality", "profit_identity")

    @property
    def max_violation(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    @property
    def passed(self) -> bool:
        for family, value in self.residuals.items():
            limit = self.tolerance if family in self._DUALITY_FAMILIES else self.feas_tolerance
            if not (value <= limit):
                return False
        return True

    def failing(self) -> dict[str, float]:
        out = {}
        for family, value in self.residuals.items():
            limit = self.tolerance if family in self._DUALITY_FAMILIES else self.feas_tolerance
            if not (value <= limit):
                out[family] = value
        return out

    def summary(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        lines = [f"certificate: {mark} (duality tol {self.tolerance:g}, feasibility tol {self.feas_tolerance:g})"]
        for family in sorted(self.residuals):
            lines.append(f"  {family}: {self.residuals[family]:.3e}")
        return "\n".join(lines)


def certify(outcome: EquilibriumOutcome | None, tol: float | None = None) -> Certificate:
    """Check every constraint family of the bidding structure on an outcome:
    offer bounds, fleet-side feasibility and value optimality, market-side
    feasibility, and that the outcome's locational prices extend to an exact
    dual solution (so both welfare-side and cost-side strong-duality
    equalities hold at `tol`).  Refuses when there is no outcome."""
    if outcome is None:
        raise ValueError("no outcome to certify")
    scenario = outcome.scenario
    tol = scenario.settings.duality_tol if tol is None else tol
    feas_tol = max(scenario.settings.feas_tol * 10.0, 1e-12)
    T = scenario.network.horizon
    residuals: dict[str, float] = {}

    # offer bounds (upper-level constraint on the strategy)
    viol = 0.0
    for st in scenario.stations:
        tau = outcome.offers[st.id]
        for t in range(T):
            scale = 1.0 + max(abs(st.offer_min[t]), abs(st.offer_max[t]))
            viol = max(
                viol,
                (st.offer_min[t] - tau[t]) / scale,
                (tau[t] - st.offer_max[t]) / scale,
            )
    residuals["offer_bounds"] = max(viol, 0.0)

    # fleet-side feasibility of the stored schedule
    residuals["fleet_feasibility"] = _fleet_feasibility_residual(outcome)

    # fleet-side strong duality: schedule cost vs the automatic dual optimum
    finput = fleet_mod.fleet_input(scenario, outcome.offers)
    fleet_dual_lp = lpcore.dualize(fleet_mod.build_fleet(finput))
    fleet_dual = lpcore.require_optimal(fleet_dual_lp, feas_tol=scenario.settings.feas_tol)
    gap = abs(outcome.schedule.cost - fleet_dual.objective)
    residuals["fleet_strong_duality"] = gap / max(
        1.0, abs(outcome.schedule.cost), abs(fleet_dual.objective)
    )

    # market-side checks per period
    dinput = dam_input_for(scenario, outcome.schedule)
    dam_feas, dam_gap, dam_duals = _dam_residuals(dinput, outcome)
    residuals["dam_feasibility"] = dam_feas
    residuals["dam_strong_duality"] = dam_gap

    # profit decomposition recomputed from raw outputs
    recomputed = 0.0
    for st in scenario.stations:
        fleet = scenario.fleet(st.fleet_id)
        series = outcome.schedule.station[st.fleet_id][st.id]
        for t in range(T):
            recomputed += series[t] * (outcome.offers[st.id][t] - outcome.dam.lmp[fleet.bus][t])
    residuals["profit_identity"] = abs(recomputed - outcome.profit) / max(
        1.0, abs(recomputed), abs(outcome.profit)
    )

    return Certificate(
        residuals=residuals,
        tolerance=tol,
        feas_tolerance=feas_tol,
        dam_duals=dam_duals,
        fleet_duals={k: float(v) for k, v in fleet_dual.primal.items()},
    )


def _fleet_feasibility_residual(outcome: EquilibriumOutcome) -> float:
    scenario = outcome.scenario
    sched = outcome.schedule
    T = scenario.network.horizon
    worst = 0.0
    for f in scenario.fleets:
        scale = 1.0 + max(f.energy_max, f.max_charge, 1.0)
        e = f.initial_energy
        for t in range(T):
            total = sched.total[f.id][t]
            home = sched.home[f.id][t]
            st_sum = sum(sched.station[f.id][s][t] for s in sched.station[f.id])
            worst = max(worst, abs(total - home - st_sum) / scale)
            worst = max(worst, (total - f.max_charge) / scale, -total / scale)
            worst = max(
                worst, (home - f.home_connectivity[t] * f.home_cap) / scale, -home / scale
            )
            for cid, cap in f.station_caps:
                s_val = sched.station[f.id].get(cid, (0.0,) * T)[t]
                conn = f.station_conn(cid)[t]
                worst = max(worst, (s_val - conn * cap) / scale, -s_val / scale)
            for st in scenario.stations_of(f.id):
                for m, seg in enumerate(st.segments):
                    q = sched.segments[f.id][st.id][m][t]
                    worst = max(worst, (q - seg.width) / scale, -q / scale)
                st_series = sched.station[f.id][st.id]
                seg_sum = sum(sched.segments[f.id][st.id][m][t] for m in range(len(st.segments)))
                worst = max(worst, abs(st_series[t] - seg_sum) / scale)
            e = e - f.driving[t] / f.discharge_efficiency + total * f.charge_efficiency
            worst = max(worst, abs(e - sched.energy[f.id][t]) / scale)
            worst = max(
                worst, (f.energy_min - e) / scale, (e - f.energy_max) / scale
            )
        if f.final_energy_min is not None:
            worst = max(worst, (f.final_energy_min - e) / scale)
    return worst


def _dam_residuals(dinput, outcome):
    """Feasibility of the stored dispatch plus the restricted-dual gap: fix
    the balance duals at the outcome's prices and minimize the dual; any
    corruption of the published prices makes the restricted dual infeasible
    or strictly worse than the primal welfare."""
    net = dinput.network
    worst_feas = 0.0
    worst_gap = 0.0
    duals: dict[str, float] = {}

    for t in range(net.horizon):
        lp = dam_mod.build_dam(dinput, period=t)
        values = {}
        for v in lp.variables:
            name, rest = v.name.split("[", 1)
            key = rest.rstrip("]")
            parts = key.split(",")
            if name == "wtp":
                sid, m = parts[0], int(parts[1])
                values[v.name] = outcome.dam.wtp[sid][m][t]
            elif name == "gen":
                values[v.name] = outcome.dam.gen[parts[0]][t]
            elif name == "seg":
                values[v.name] = outcome.dam.gen_segments[parts[0]][int(parts[1])][t]
            elif name == "solar":
                values[v.name] = outcome.dam.solar[parts[0]][t]
            elif name == "angle":
                values[v.name] = outcome.dam.angle[parts[0]][t]
            elif name == "flow":
                values[v.name] = outcome.dam.flow[parts[0]][t]
            else:  # pragma: no cover - builder and extractor share names
                raise KeyError(v.name)
            scale = 1.0 + max(abs(v.lower), abs(v.upper)) if math.isfinite(v.upper) else 1.0
            worst_feas = max(
                worst_feas,
                (v.lower - values[v.name]) / scale,
                (values[v.name] - v.upper) / scale if math.isfinite(v.upper) else 0.0,
            )
        for con in lp.constraints:
            act = sum(coef * values[var] for var, coef in con.coefficients.items())
            scale = 1.0 + abs(con.rhs)
            worst_feas = max(worst_feas, abs(act - con.rhs) / scale)

        welfare = lp.objective_value(values)
        dual_lp = lpcore.dualize(lp)
        pinned = []
        for b in net.buses:
            pinned.append((lpcore.dual_variable_name(f"balance[{b.id},{t}]"), -outcome.dam.lmp[b.id][t]))
        restricted = _pin_variables(dual_lp, pinned)
        rsol = lpcore.solve(restricted)
        if not rsol.is_optimal:
            worst_gap = max(worst_gap, math.inf)
            continue
        gap = abs(welfare - rsol.objective) / max(1.0, abs(welfare), abs(rsol.objective))
        worst_gap = max(worst_gap, gap)
        for name, value in rsol.primal.items():
            duals[f"{name}@t{t}"] = float(value)

    return worst_feas, worst_gap, duals


def _pin_variables(lp: lpcore.LinearProgram, pinned) -> lpcore.LinearProgram:
    table = dict(pinned)
    variables = tuple(
        lpcore.Variable(v.name, table[v.name], table[v.name], v.objective)
        if v.name in table
        else v
        for v in lp.variables
    )
    return lpcore.LinearProgram(lp.sense, variables, lp.constraints, name=f"{lp.name}|pinned")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def outcome_to_json(outcome: EquilibriumOutcome) -> dict:
    from .model import scenario_to_json

    return {
        "schema_version": 1,
        "scenario": scenario_to_json(outcome.scenario),
        "offers": {k: list(v) for k, v in sorted(outcome.offers.items())},
        "strategy": {
            "values": list(outcome.strategy.values),
            "parameters": [
                {
                    "station": p.station_id,
                    "t_start": p.t_start,
                    "t_end": p.t_end,
                    "lower": p.lower,
                    "upper": p.upper,
                }
                for p in outcome.strategy.parameters
            ],
        },
        "revenue": outcome.revenue,
        "cost": outcome.cost,
        "profit": outcome.profit,
        "schedule": {
            "total": {k: list(v) for k, v in sorted(outcome.schedule.total.items())},
            "home": {k: list(v) for k, v in sorted(outcome.schedule.home.items())},
            "station": {
                f: {s: list(v) for s, v in sorted(stations.items())}
                for f, stations in sorted(outcome.schedule.station.items())
            },
            "segments": {
                f: {s: [list(row) for row in v] for s, v in sorted(stations.items())}
                for f, stations in sorted(outcome.schedule.segments.items())
            },
            "energy": {k: list(v) for k, v in sorted(outcome.schedule.energy.items())},
            "fleet_costs": dict(sorted(outcome.schedule.fleet_costs.items())),
            "cost": outcome.schedule.cost,
            "tie_break_applied": outcome.schedule.tie_break_applied,
        },
        "dam": {
            "lmp": {k: list(v) for k, v in sorted(outcome.dam.lmp.items())},
            "gen": {k: list(v) for k, v in sorted(outcome.dam.gen.items())},
            "gen_segments": {
                k: [list(row) for row in v] for k, v in sorted(outcome.dam.gen_segments.items())
            },
            "solar": {k: list(v) for k, v in sorted(outcome.dam.solar.items())},
            "flow": {k: list(v) for k, v in sorted(outcome.dam.flow.items())},
            "angle": {k: list(v) for k, v in sorted(outcome.dam.angle.items())},
            "wtp": {k: [list(row) for row in v] for k, v in sorted(outcome.dam.wtp.items())},
            "welfare": outcome.dam.welfare,
            "period_welfare": list(outcome.dam.period_welfare),
        },
        "search": None
        if outcome.search is None
        else {
            "evaluations": outcome.search.evaluations,
            "starts": outcome.search.starts,
            "seed": outcome.search.seed,
            "budget": outcome.search.budget,
        },
    }


def outcome_from_json(data: dict) -> EquilibriumOutcome:
    """Rebuild a full outcome (including the embedded scenario) from the
    document written by `outcome_to_json`; used to re-certify cached runs."""
    from .model import scenario_from_json

    scenario = scenario_from_json(data["scenario"])
    params = tuple(
        OfferParameter(p["station"], p["t_start"], p["t_end"], p["lower"], p["upper"])
        for p in data["strategy"]["parameters"]
    )
    strategy = Strategy(params, tuple(data["strategy"]["values"]))
    sched = data["schedule"]
    schedule = fleet_mod.FleetSchedule(
        horizon=scenario.network.horizon,
        total={k: tuple(v) for k, v in sched["total"].items()},
        home={k: tuple(v) for k, v in sched["home"].items()},
        station={
            f: {s: tuple(v) for s, v in stations.items()}
            for f, stations in sched["station"].items()
        },
        segments={
            f: {s: tuple(tuple(row) for row in v) for s, v in stations.items()}
            for f, stations in sched["segments"].items()
        },
        energy={k: tuple(v) for k, v in sched["energy"].items()},
        fleet_costs=dict(sched["fleet_costs"]),
        cost=float(sched["cost"]),
        tie_break_applied=bool(sched["tie_break_applied"]),
    )
    dam_data = data["dam"]
    dam_out = dam_mod.DamOutcome(
        horizon=scenario.network.horizon,
        gen={k: tuple(v) for k, v in dam_data["gen"].items()},
        gen_segments={
            k: tuple(tuple(row) for row in v) for k, v in dam_data["gen_segments"].items()
        },
        solar={k: tuple(v) for k, v in dam_data["solar"].items()},
        flow={k: tuple(v) for k, v in dam_data["flow"].items()},
        angle={k: tuple(v) for k, v in dam_data["angle"].items()},
        wtp={k: tuple(tuple(row) for row in v) for k, v in dam_data["wtp"].items()},
        lmp={k: tuple(v) for k, v in dam_data["lmp"].items()},
        welfare=float(dam_data["welfare"]),
        period_welfare=tuple(dam_data["period_welfare"]),
    )
    search = None
    if data.get("search"):
        s = data["search"]
        search = SearchInfo(s["evaluations"], s["starts"], s["seed"], s["budget"])
    return EquilibriumOutcome(
        scenario=scenario,
        strategy=strategy,
        offers={k: tuple(v) for k, v in data["offers"].items()},
        schedule=schedule,
        dam=dam_out,
        revenue=float(data["revenue"]),
        cost=float(data["cost"]),
        profit=float(data["profit"]),
        search=search,
    )


def certificate_to_json(cert: Certificate) -> dict:
    return {
        "passed": cert.passed,
        "tolerance": cert.tolerance,
        "feas_tolerance": cert.feas_tolerance,
        "max_violation": cert.max_violation,
        "residuals": dict(sorted(cert.residuals.items())),
        "failing": cert.failing(),
    }


def dump_outcome(outcome: EquilibriumOutcome, fh) -> None:
    json.dump(outcome_to_json(outcome), fh, indent=2, sort_keys=True)
    fh.write("\n")
