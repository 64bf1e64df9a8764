"""Household cost of nutrient adequacy under individualized and shared diets.

Individualized: one LP per member, costs summed; the household is feasible
only if every member is. Shared: one LP over the pooled household bounds for
members aged four and over, plus individual LPs for children 6-47 months.

Individual LPs are solved once per requirement row and market-month and
scaled by the member's meal share. Bounds and energy scale together, so the
optimal basket and cost scale exactly with the share.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .data_io import Dataset, HouseholdRecord
from .lp_core import (NUMERICAL, OPTIMAL, VACANT, DietSolution, SolverOptions,
                      build_problem, solve)
from .requirements import HouseholdRequirement, RequirementRow, RequirementTable, \
    household_requirement

INDIVIDUALIZED = "individualized"
SHARED = "shared"
SCENARIOS = (INDIVIDUALIZED, SHARED)

STRUCTURAL = "structural_infeasible"
INFEASIBLE = "infeasible"
EMPTY = "empty_household"

PANEL_COLUMNS = ["household_id", "market_id", "year", "month", "scenario", "status",
                 "cost_nominal", "cost_ppp", "per_capita", "per_1000kcal"]


@dataclass(frozen=True, eq=False)
class Menu:
    item_ids: list[str]
    prices: np.ndarray
    composition: np.ndarray  # (items, non-energy nutrients) per kg
    energy: np.ndarray  # kcal per kg

    @property
    def empty(self) -> bool:
        return not self.item_ids


class MenuBook:
    """Priced menus by market and month, built once per dataset."""

    def __init__(self, ds: Dataset):
        nids = ds.nutrient_ids
        e = nids.index(ds.energy_id)
        self.nutrient_ids = tuple(n for n in nids if n != ds.energy_id)
        keep = [k for k in range(len(nids)) if k != e]
        self._comp = {i: f.per_kg[keep] for i, f in ds.foods.items()}
        self._energy = {i: float(f.per_kg[e]) for i, f in ds.foods.items()}
        self._menus: dict[tuple[str, int, int], Menu] = {}
        p = ds.prices.sort_values(["market_id", "year", "month", "item_id"])
        for (mk, y, m), g in p.groupby(["market_id", "year", "month"], sort=True):
            items = [i for i in g["item_id"] if self._energy[i] > 0]
            price = g.set_index("item_id").loc[items, "price_per_kg"].to_numpy(dtype=float)
            self._menus[(mk, int(y), int(m))] = Menu(
                items, price,
                np.array([self._comp[i] for i in items]).reshape(len(items), len(keep)),
                np.array([self._energy[i] for i in items]))

    def menu(self, market: str, year: int, month: int) -> Menu:
        menu = self._menus.get((market, year, month))
        if menu is None:
            menu = Menu([], np.empty(0), np.empty((0, len(self.nutrient_ids))), np.empty(0))
        return menu


def solve_bounds(lower: np.ndarray, upper: np.ndarray, energy: float, menu: Menu,
                 nutrient_ids: tuple[str, ...], options: SolverOptions | None = None
                 ) -> DietSolution:
    if menu.empty:
        return DietSolution(VACANT)
    prob = build_problem(nutrient_ids, lower, upper, energy, menu.item_ids, menu.prices,
                         menu.composition, menu.energy)
    return solve(prob, options)


class RowSolver:
    """Memoized LP for unscaled requirement rows within one market-month."""

    def __init__(self, nutrient_ids: tuple[str, ...], options: SolverOptions | None = None):
        self.nutrient_ids = nutrient_ids
        self.options = options
        self._cache: dict[tuple, DietSolution] = {}

    def solve(self, row: RequirementRow, menu_key: tuple, menu: Menu) -> DietSolution:
        key = (menu_key, row.group_id, row.energy_kcal,
               row.min_need.tobytes(), row.max_tolerance.tobytes())
        sol = self._cache.get(key)
        if sol is None:
            sol = solve_bounds(row.min_need, row.max_tolerance, row.energy_kcal, menu,
                               self.nutrient_ids, self.options)
            self._cache[key] = sol
        return sol


@dataclass
class CellResult:
    status: str
    cost_nominal: float | None = None
    energy_kcal: float = 0.0
    failing: tuple[str, ...] = ()
    note: str = ""
    member_costs: dict[str, float] = field(default_factory=dict)


def _combine_status(statuses: list[str]) -> str:
    if all(s == OPTIMAL for s in statuses):
        return OPTIMAL
    if any(s == NUMERICAL for s in statuses):
        return NUMERICAL
    return INFEASIBLE


def individualized_cona(hreq: HouseholdRequirement, menu: Menu, menu_key: tuple,
                        solver: RowSolver) -> CellResult:
    """Sum of member least-cost diets; feasible only if every member is."""
    if not hreq.individual_rows:
        return CellResult(EMPTY, note="no member with requirements")
    if menu.empty:
        return CellResult(VACANT, energy_kcal=hreq.energy_total)
    costs, statuses, failing = {}, [], []
    for pid, (base, share) in hreq.per_member_unscaled.items():
        sol = solver.solve(base, menu_key, menu)
        statuses.append(sol.status)
        if sol.optimal:
            costs[pid] = sol.cost * share
        else:
            failing.append(pid)
    status = _combine_status(statuses)
    cost = float(sum(costs[p] for p in sorted(costs))) if status == OPTIMAL else None
    return CellResult(status, cost, hreq.energy_total, tuple(failing), member_costs=costs)


def shared_cona(hreq: HouseholdRequirement, menu: Menu, menu_key: tuple, solver: RowSolver
                ) -> CellResult:
    """One LP over the pooled bounds plus individual LPs for add-on children."""
    if not hreq.individual_rows:
        return CellResult(EMPTY, note="no member with requirements")
    if menu.empty:
        return CellResult(VACANT, energy_kcal=hreq.energy_total)
    shared = hreq.shared
    if shared is not None and shared.structurally_infeasible:
        return CellResult(STRUCTURAL, energy_kcal=hreq.energy_total,
                          failing=tuple(v[0] for v in shared.violations))
    statuses, failing, costs = [], [], {}
    if shared is not None:
        sol = solve_bounds(shared.lower, shared.upper, shared.energy, menu,
                           solver.nutrient_ids, solver.options)
        statuses.append(sol.status)
        if sol.optimal:
            costs["__shared__"] = sol.cost
        else:
            failing.append("__shared__")
    addon_ids = {pid for pid, _ in hreq.addon_children}
    for pid in sorted(addon_ids):
        base, share = hreq.per_member_unscaled[pid]
        sol = solver.solve(base, menu_key, menu)
        statuses.append(sol.status)
        if sol.optimal:
            costs[pid] = sol.cost * share
        else:
            failing.append(pid)
    status = _combine_status(statuses)
    cost = float(sum(costs[k] for k in sorted(costs))) if status == OPTIMAL else None
    note = "addon_only" if shared is None else ""
    return CellResult(status, cost, hreq.energy_total, tuple(failing), note, costs)


# -- PPP conversion ---------------------------------------------------------

def denton_monthly_factors(annual: dict[int, float]) -> pd.Series:
    """Monthly series whose yearly averages equal the annual factors.

    Minimizes the sum of squared proportional month-on-month changes, with
    each change taken relative to the preceding month's annual level so the
    problem stays a linear equality-constrained least squares.
    """
    if not annual:
        raise ValueError("at least one annual factor is required")
    years = sorted(annual)
    if years != list(range(years[0], years[-1] + 1)):
        raise ValueError("annual factors must cover contiguous years")
    a = np.array([annual[y] for y in years], dtype=float)
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise ValueError("annual factors must be positive")
    n_years = len(years)
    n = 12 * n_years
    level = np.repeat(a, 12)
    # (x_t - x_{t-1}) / level_{t-1}
    D = (np.eye(n, k=1) - np.eye(n))[:-1] / level[:-1, None]
    C = np.kron(np.eye(n_years), np.full((1, 12), 1.0 / 12.0))
    kkt = np.block([[2.0 * D.T @ D, C.T], [C, np.zeros((n_years, n_years))]])
    rhs = np.concatenate([np.zeros(n), a])
    x = np.linalg.solve(kkt, rhs)[:n]
    idx = pd.MultiIndex.from_product([years, range(1, 13)], names=["year", "month"])
    return pd.Series(x, index=idx, name="factor")


def to_ppp(cost_nominal: float | None, factor: float, orientation: str = "lcu_per_ppp"
           ) -> float | None:
    """Convert a nominal cost; ``lcu_per_ppp`` divides, ``ppp_per_lcu`` multiplies."""
    if cost_nominal is None:
        return None
    if orientation == "lcu_per_ppp":
        return cost_nominal / factor
    if orientation == "ppp_per_lcu":
        return cost_nominal * factor
    raise ValueError(f"unknown factor orientation {orientation!r}")


# -- panel -------------------------------------------------------------------

@dataclass(frozen=True)
class PanelConfig:
    start: tuple[int, int] = (2013, 1)
    end: tuple[int, int] = (2017, 7)
    switch: tuple[int, int] | None = (2016, 1)
    scenarios: tuple[str, ...] = SCENARIOS
    solver: SolverOptions = field(default_factory=SolverOptions)
    ppp_orientation: str = "lcu_per_ppp"
    workers: int = 1

    def months(self) -> list[tuple[int, int]]:
        if self.start > self.end:
            raise ValueError("horizon start is after its end")
        out = []
        y, m = self.start
        while (y, m) <= self.end:
            out.append((y, m))
            y, m = (y + 1, 1) if m == 12 else (y, m + 1)
        return out


def active_record(records: list[HouseholdRecord], year: int, month: int,
                  switch: tuple[int, int] | None) -> HouseholdRecord:
    """Survey wave whose composition applies to a given month."""
    ordered = sorted(records, key=lambda h: (h.survey_year, h.survey_month, h.household_id))
    if switch is None or len(ordered) == 1:
        return ordered[0]
    before = [h for h in ordered if (h.survey_year, h.survey_month) < switch]
    after = [h for h in ordered if (h.survey_year, h.survey_month) >= switch]
    if (year, month) < switch:
        return before[-1] if before else after[0]
    return after[0] if after else before[-1]


def _members_eating(h: HouseholdRecord) -> int:
    return sum(1 for m in h.members if m.meals_share > 0)


_WORKER: dict = {}


def _init_worker(ds: Dataset, cfg: PanelConfig) -> None:
    _WORKER["ds"] = ds
    _WORKER["cfg"] = cfg
    _WORKER["book"] = MenuBook(ds)
    _WORKER["table"] = RequirementTable.from_dataset(ds)


def _panel_chunk(units: list[str]) -> list[dict]:
    ds: Dataset = _WORKER["ds"]
    cfg: PanelConfig = _WORKER["cfg"]
    book: MenuBook = _WORKER["book"]
    table: RequirementTable = _WORKER["table"]
    solver = RowSolver(book.nutrient_ids, cfg.solver)
    by_unit: dict[str, list[HouseholdRecord]] = {}
    for h in ds.households:
        by_unit.setdefault(h.unit_id, []).append(h)
    reqs: dict[str, HouseholdRequirement] = {}
    out = []
    for unit in units:
        for y, m in cfg.months():
            h = active_record(by_unit[unit], y, m, cfg.switch)
            hreq = reqs.get(h.household_id)
            if hreq is None:
                hreq = reqs[h.household_id] = household_requirement(h, table)
            market = ds.market_for(h)
            key = (market, y, m)
            menu = book.menu(*key)
            for scen in cfg.scenarios:
                fn = individualized_cona if scen == INDIVIDUALIZED else shared_cona
                res = fn(hreq, menu, key, solver)
                out.append({
                    "household_id": unit, "market_id": market, "year": y, "month": m,
                    "scenario": scen, "status": res.status, "cost_nominal": res.cost_nominal,
                    "record_id": h.household_id, "energy_kcal": res.energy_kcal,
                    "n_eating": _members_eating(h), "failing": ";".join(res.failing),
                    "note": res.note,
                })
    return out


def cona_panel(ds: Dataset, cfg: PanelConfig | None = None) -> pd.DataFrame:
    """All household x month x scenario cells over the configured horizon.

    Returns the panel columns plus diagnostics (``record_id``, ``energy_kcal``,
    ``n_eating``, ``failing``, ``note``). Rows are sorted by household, month
    and scenario, so output does not depend on the worker count.
    """
    cfg = cfg or PanelConfig()
    units = sorted({h.unit_id for h in ds.households})
    # group units by market so memoized member LPs are reused within a worker
    unit_market = {h.unit_id: ds.market_for(h) for h in ds.households}
    by_market: dict[str, list[str]] = {}
    for u in units:
        by_market.setdefault(unit_market[u], []).append(u)
    chunks = [by_market[k] for k in sorted(by_market)]
    workers = max(1, min(cfg.workers or os.cpu_count() or 1, len(chunks)))
    rows: list[dict] = []
    if workers == 1:
        _init_worker(ds, cfg)
        for c in chunks:
            rows.extend(_panel_chunk(c))
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(ds, cfg)) as ex:
            for part in ex.map(_panel_chunk, chunks):
                rows.extend(part)
    panel = pd.DataFrame(rows)
    panel["scenario"] = pd.Categorical(panel["scenario"], categories=list(SCENARIOS))
    panel = panel.sort_values(["household_id", "year", "month", "scenario"]).reset_index(drop=True)
    panel["scenario"] = panel["scenario"].astype(str)
    return add_ppp(panel, ds, cfg.ppp_orientation)


def add_ppp(panel: pd.DataFrame, ds: Dataset, orientation: str = "lcu_per_ppp") -> pd.DataFrame:
    """Attach PPP cost, per-capita and per-1000-kcal columns."""
    out = panel.copy()
    if ds.ppp_annual:
        factors = denton_monthly_factors(dict(ds.ppp_annual))
        keys = list(zip(out["year"], out["month"]))
        missing = sorted({k for k in keys if k not in factors.index})
        if missing:
            raise ValueError(f"no PPP factor for months {missing[:5]}")
        f = factors.loc[keys].to_numpy()
    else:
        f = np.ones(len(out))
    cost = out["cost_nominal"].to_numpy(dtype=float)
    ppp = cost / f if orientation == "lcu_per_ppp" else cost * f
    if orientation not in ("lcu_per_ppp", "ppp_per_lcu"):
        raise ValueError(f"unknown factor orientation {orientation!r}")
    out["cost_ppp"] = ppp
    out["per_capita"] = ppp / out["n_eating"].to_numpy(dtype=float)
    energy = out["energy_kcal"].to_numpy(dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out["per_1000kcal"] = np.where(energy > 0, ppp * 1000.0 / energy, np.nan)
    return out


def structural_report(ds: Dataset) -> pd.DataFrame:
    """Households whose shared lower bound exceeds the upper bound."""
    table = RequirementTable.from_dataset(ds)
    rows = []
    for h in ds.households:
        hreq = household_requirement(h, table)
        if hreq.shared is not None:
            for nid, lo, hi in hreq.shared.violations:
                rows.append((h.household_id, nid, lo, hi))
    return pd.DataFrame(rows, columns=["household_id", "nutrient_id", "lower", "upper"])
