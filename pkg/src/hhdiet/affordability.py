"""Affordability ratios, the sharing premium and survey-weighted summaries.

Everything here is evaluated in each household's survey month, in nominal
terms: diet cost over daily food (or total) expenditure. A ratio of exactly 1
counts as affordable.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd

from .cona import (INDIVIDUALIZED, SHARED, MenuBook, RowSolver, add_ppp,
                   individualized_cona, shared_cona)
from .data_io import Dataset, HouseholdRecord
from .requirements import RequirementTable, household_requirement

NO_ACCESS = "no_access"
REALLOCATION = "reallocation_access"
FOOD_BUDGET = "food_budget_access"
ACCESS_CLASSES = (NO_ACCESS, REALLOCATION, FOOD_BUDGET)

REFERENCE_LINE = 1.90  # per capita per day, PPP units


@dataclass(frozen=True)
class AccessResult:
    household_id: str
    scenario: str
    ratio_food: float | None
    ratio_total: float | None
    access_class: str


def _cell_get(cell, key):
    return cell[key] if isinstance(cell, Mapping) else getattr(cell, key)


def ratios(cell, hh: HouseholdRecord, scenario: str | None = None) -> AccessResult:
    """Classify one survey-month cell (anything with ``status`` and ``cost_nominal``)."""
    food, total = hh.food_expenditure_per_day, hh.total_expenditure_per_day
    if food <= 0 or total <= 0:
        raise ValueError(f"{hh.household_id}: expenditure must be positive")
    scen = scenario if scenario is not None else _cell_get(cell, "scenario")
    if _cell_get(cell, "status") != "optimal":
        return AccessResult(hh.household_id, scen, None, None, NO_ACCESS)
    cost = float(_cell_get(cell, "cost_nominal"))
    rf, rt = cost / food, cost / total
    if rf <= 1.0:
        cls = FOOD_BUDGET
    elif rt <= 1.0:
        cls = REALLOCATION
    else:
        cls = NO_ACCESS
    return AccessResult(hh.household_id, scen, rf, rt, cls)


def premium(shared_cell, individualized_cell) -> float | None:
    """Shared over individualized cost; None unless both are optimal."""
    if _cell_get(shared_cell, "status") != "optimal" \
            or _cell_get(individualized_cell, "status") != "optimal":
        return None
    return float(_cell_get(shared_cell, "cost_nominal")) \
        / float(_cell_get(individualized_cell, "cost_nominal"))


def _check(values, weights) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.size == 0:
        raise ValueError("empty input")
    if v.shape != w.shape:
        raise ValueError("values and weights differ in length")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be positive")
    return v, w


def weighted_median(values, weights) -> float:
    """Smallest value whose cumulative weight reaches half the total."""
    v, w = _check(values, weights)
    order = np.argsort(v, kind="mergesort")
    v, w = v[order], w[order]
    cum = np.cumsum(w)
    return float(v[np.searchsorted(cum, 0.5 * cum[-1], side="left")])


def weighted_mean(values, weights) -> float:
    v, w = _check(values, weights)
    return float(np.sum(w * v) / np.sum(w))


# -- survey-month table ------------------------------------------------------

def survey_cells(ds: Dataset, panel: pd.DataFrame | None = None,
                 scenarios: tuple[str, ...] = (INDIVIDUALIZED, SHARED)) -> pd.DataFrame:
    """One row per survey record and scenario, taken from ``panel`` when it has
    the record's survey month and solved directly otherwise."""
    cols = ["record_id", "year", "month", "scenario", "status", "cost_nominal",
            "energy_kcal", "n_eating", "market_id"]
    found = pd.DataFrame(columns=cols)
    if panel is not None and not panel.empty:
        want = pd.DataFrame([(h.household_id, h.survey_year, h.survey_month)
                             for h in ds.households], columns=["record_id", "year", "month"])
        found = panel.merge(want, on=["record_id", "year", "month"])[cols]
        found = found[found["scenario"].isin(scenarios)]
    have = set(zip(found["record_id"], found["scenario"]))
    rows = []
    book = table = solver = None
    for h in ds.households:
        todo = [s for s in scenarios if (h.household_id, s) not in have]
        if not todo:
            continue
        if book is None:
            book, table = MenuBook(ds), RequirementTable.from_dataset(ds)
            solver = RowSolver(book.nutrient_ids)
        hreq = household_requirement(h, table)
        key = (ds.market_for(h), h.survey_year, h.survey_month)
        menu = book.menu(*key)
        for s in todo:
            fn = individualized_cona if s == INDIVIDUALIZED else shared_cona
            res = fn(hreq, menu, key, solver)
            rows.append({"record_id": h.household_id, "year": h.survey_year,
                         "month": h.survey_month, "scenario": s, "status": res.status,
                         "cost_nominal": res.cost_nominal, "energy_kcal": res.energy_kcal,
                         "n_eating": sum(1 for m in h.members if m.meals_share > 0),
                         "market_id": key[0]})
    if rows:
        extra = pd.DataFrame(rows, columns=cols)
        found = extra if found.empty else pd.concat([found, extra], ignore_index=True)
    found = found.sort_values(["record_id", "scenario"]).reset_index(drop=True)
    found["cost_nominal"] = found["cost_nominal"].astype(float)
    return add_ppp(found, ds)


def access_table(ds: Dataset, panel: pd.DataFrame | None = None,
                 switch: tuple[int, int] | None = (2016, 1)) -> pd.DataFrame:
    """Ratios, access class and premium per survey record and scenario."""
    cells = survey_cells(ds, panel)
    by_id = {h.household_id: h for h in ds.households}
    rows = []
    for r in cells.itertuples(index=False):
        h = by_id[r.record_id]
        a = ratios({"status": r.status, "cost_nominal": r.cost_nominal}, h, r.scenario)
        period = "all" if switch is None else (
            "before_switch" if (h.survey_year, h.survey_month) < switch else "after_switch")
        rows.append({
            "household_id": r.record_id, "unit_id": h.unit_id, "scenario": r.scenario,
            "year": h.survey_year, "month": h.survey_month, "status": r.status,
            "cost_nominal": r.cost_nominal, "cost_ppp": r.cost_ppp,
            "per_capita": r.per_capita, "per_1000kcal": r.per_1000kcal,
            "ratio_food": a.ratio_food, "ratio_total": a.ratio_total,
            "access_class": a.access_class, "weight": h.sampling_weight,
            "cluster_id": h.cluster_id or h.district_id, "period": period,
        })
    out = pd.DataFrame(rows)
    wide = out.pivot(index="household_id", columns="scenario", values=["status", "cost_nominal"])
    prem = {}
    if {SHARED, INDIVIDUALIZED} <= set(out["scenario"]):
        for hid in wide.index:
            prem[hid] = premium(
                {"status": wide.at[hid, ("status", SHARED)],
                 "cost_nominal": wide.at[hid, ("cost_nominal", SHARED)]},
                {"status": wide.at[hid, ("status", INDIVIDUALIZED)],
                 "cost_nominal": wide.at[hid, ("cost_nominal", INDIVIDUALIZED)]})
    out["premium"] = out["household_id"].map(prem).astype(float)
    return out.sort_values(["household_id", "scenario"]).reset_index(drop=True)


def monotone_access_violations(access: pd.DataFrame) -> list[str]:
    """Households with food-budget access when shared but not when individualized."""
    w = access.pivot(index="household_id", columns="scenario", values="access_class")
    if SHARED not in w or INDIVIDUALIZED not in w:
        return []
    bad = (w[SHARED] == FOOD_BUDGET) & (w[INDIVIDUALIZED] != FOOD_BUDGET)
    return sorted(w.index[bad])


# -- population summary ------------------------------------------------------

_MEDIANS = ("cost_nominal", "cost_ppp", "per_capita", "per_1000kcal", "ratio_food",
            "ratio_total")


def _statistics(a: pd.DataFrame, reference_line: float) -> dict[tuple[str, str], float]:
    out: dict[tuple[str, str], float] = {}
    for scen, g in a.groupby("scenario", sort=True):
        w = g["weight"].to_numpy(dtype=float)
        total = w.sum()
        out[(scen, "share_feasible")] = float(w[(g["status"] == "optimal").to_numpy()].sum()
                                              / total)
        for cls in ACCESS_CLASSES:
            out[(scen, f"share_{cls}")] = float(w[(g["access_class"] == cls).to_numpy()].sum()
                                                / total)
        ok = g[g["status"] == "optimal"]
        for col in _MEDIANS:
            v = ok[col].to_numpy(dtype=float)
            keep = np.isfinite(v)
            out[(scen, f"median_{col}")] = (weighted_median(v[keep], ok["weight"].to_numpy()[keep])
                                            if keep.any() else float("nan"))
        pc = ok["per_capita"].to_numpy(dtype=float)
        keep = np.isfinite(pc)
        out[(scen, "share_cost_above_reference")] = (
            weighted_mean((pc[keep] > reference_line).astype(float),
                          ok["weight"].to_numpy()[keep]) if keep.any() else float("nan"))
    prem = a.drop_duplicates("household_id")
    prem = prem[prem["premium"].notna()]
    if not prem.empty:
        out[("shared/individualized", "median_premium")] = weighted_median(
            prem["premium"].to_numpy(), prem["weight"].to_numpy())
    return out


def population_summary(access: pd.DataFrame, bootstrap: int = 0, seed: int = 0,
                       by_period: bool = True, reference_line: float = REFERENCE_LINE
                       ) -> pd.DataFrame:
    """Weighted access shares and medians, per scenario and survey period.

    With ``bootstrap > 0`` standard errors come from resampling clusters
    (``cluster_id``) with replacement, seeded for reproducibility.
    """
    groups = [("all", access)]
    if by_period and "period" in access:
        groups += [(p, g) for p, g in access.groupby("period", sort=True) if p != "all"]
    rng = np.random.default_rng(seed)
    rows = []
    for label, a in groups:
        point = _statistics(a, reference_line)
        se: dict[tuple[str, str], float] = {}
        if bootstrap > 0:
            clusters = a["cluster_id"].to_numpy() if "cluster_id" in a else a["household_id"]
            ids, inv = np.unique(clusters, return_inverse=True)
            members = [np.flatnonzero(inv == k) for k in range(len(ids))]
            draws: dict[tuple[str, str], list[float]] = {k: [] for k in point}
            for _ in range(bootstrap):
                pick = rng.integers(len(ids), size=len(ids))
                idx = np.concatenate([members[k] for k in pick])
                b = a.iloc[idx].copy()
                # distinct household ids per draw keep the premium dedup per copy
                b["household_id"] = b["household_id"] + "#" + pd.Series(
                    np.repeat(np.arange(len(pick)), [len(members[k]) for k in pick]),
                    index=b.index).astype(str)
                stat = _statistics(b, reference_line)
                for k in point:
                    draws[k].append(stat.get(k, float("nan")))
            se = {}
            for k, v in draws.items():
                v = np.asarray(v, dtype=float)
                v = v[np.isfinite(v)]
                se[k] = float(np.std(v, ddof=1)) if len(v) > 1 else float("nan")
        counts = a.groupby("scenario")["household_id"].nunique().to_dict()
        n_prem = int(a.drop_duplicates("household_id")["premium"].notna().sum())
        for (scen, name), value in sorted(point.items()):
            rows.append({"period": label, "scenario": scen, "statistic": name, "value": value,
                         "se": se.get((scen, name), float("nan")),
                         "n": counts.get(scen, n_prem)})
    return pd.DataFrame(rows, columns=["period", "scenario", "statistic", "value", "se", "n"])


def write_outputs(access: pd.DataFrame, summary: pd.DataFrame, out_dir: str | Path
                  ) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"access": out / "access.csv", "summary": out / "summary.csv"}
    cols = ["household_id", "scenario", "ratio_food", "ratio_total", "access_class",
            "status", "cost_nominal", "cost_ppp", "per_capita", "per_1000kcal", "premium",
            "weight", "cluster_id", "period"]
    access[cols].to_csv(paths["access"], index=False, float_format="%.10g")
    summary.to_csv(paths["summary"], index=False, float_format="%.10g")
    return paths
