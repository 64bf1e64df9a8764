"""On-disk data model: CSV schemas, validation and loading.

All files are UTF-8 CSV with a header row. Food composition is read per
100 g edible portion and exposed per kg; prices are per kg edible portion.
A missing price row means the item was not available in that market-month.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from .catalog import BOUND_KINDS, LACTATION_AGE_RANGE

FILES = {
    "nutrients": "nutrients.csv",
    "foods": "foods.csv",
    "prices": "prices.csv",
    "market_map": "market_map.csv",
    "households": "households.csv",
    "members": "members.csv",
    "requirements": "requirements.csv",
    "ppp": "ppp_annual.csv",
}

NUTRIENT_COLS = ["nutrient_id", "name", "unit", "bound_kind"]
FOOD_COLS = ["item_id", "name", "food_group"]
PRICE_COLS = ["market_id", "year", "month", "item_id", "price_per_kg"]
MARKET_MAP_COLS = ["district_id", "market_id"]
HOUSEHOLD_COLS = ["household_id", "district_id", "survey_year", "survey_month",
                  "food_exp_day", "total_exp_day", "weight"]
HOUSEHOLD_OPTIONAL = ["panel_id", "cluster_id"]
MEMBER_COLS = ["household_id", "person_id", "age_months", "sex", "lactating", "meals_share"]
PPP_COLS = ["year", "factor"]


class DataValidationError(ValueError):
    """Raised when input files break a schema, reference or unit rule.

    ``problems`` holds one ``(file, row, rule, message)`` tuple per violation;
    ``row`` is the 1-based data row (header excluded) or ``None``.
    """

    def __init__(self, problems: list[tuple[str, int | None, str, str]]):
        self.problems = problems
        lines = []
        for fname, row, rule, msg in problems[:20]:
            where = f"{fname}" if row is None else f"{fname}, row {row}"
            lines.append(f"{where}: [{rule}] {msg}")
        if len(problems) > 20:
            lines.append(f"... and {len(problems) - 20} more")
        super().__init__("\n".join(lines))


@dataclass(frozen=True)
class NutrientDef:
    nutrient_id: str
    name: str
    unit: str
    bound_kind: str

    @property
    def has_lower(self) -> bool:
        return self.bound_kind in ("lower_only", "both")

    @property
    def has_upper(self) -> bool:
        return self.bound_kind in ("upper_only", "both")


@dataclass(frozen=True)
class FoodItem:
    item_id: str
    name: str
    food_group: str
    # per 100 g edible portion, ordered as Dataset.nutrient_ids
    composition_100g: tuple[float, ...]

    @property
    def per_kg(self) -> np.ndarray:
        return np.asarray(self.composition_100g, dtype=float) * 10.0


@dataclass(frozen=True)
class MemberRecord:
    person_id: str
    age_months: int
    sex: str
    lactating: bool
    meals_share: float


@dataclass(frozen=True)
class HouseholdRecord:
    household_id: str
    district_id: str
    survey_year: int
    survey_month: int
    food_expenditure_per_day: float
    total_expenditure_per_day: float
    sampling_weight: float
    members: tuple[MemberRecord, ...]
    panel_id: str = ""
    cluster_id: str = ""

    @property
    def unit_id(self) -> str:
        """Identifier shared by all survey waves of the same household."""
        return self.panel_id or self.household_id


@dataclass(frozen=True)
class Dataset:
    nutrients: tuple[NutrientDef, ...]
    foods: Mapping[str, FoodItem]
    prices: pd.DataFrame
    market_map: Mapping[str, str]
    households: tuple[HouseholdRecord, ...]
    requirements: pd.DataFrame
    ppp_annual: Mapping[int, float] = field(default_factory=dict)

    @property
    def nutrient_ids(self) -> list[str]:
        return [n.nutrient_id for n in self.nutrients]

    @property
    def energy_id(self) -> str:
        return next(n.nutrient_id for n in self.nutrients if n.bound_kind == "energy")

    @property
    def markets(self) -> list[str]:
        return sorted(set(self.market_map.values()) | set(self.prices["market_id"].unique()))

    def market_for(self, household: HouseholdRecord) -> str:
        return self.market_map[household.district_id]


# -- reading helpers --------------------------------------------------------

def _read(path: Path, required: list[str], problems: list) -> list[dict[str, str]]:
    if not path.exists():
        problems.append((path.name, None, "schema", "file not found"))
        return []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            problems.append((path.name, None, "schema", f"missing columns {missing}"))
            return []
        return list(reader)


def _num(value: str, kind, fname: str, row: int, col: str, problems: list,
         allow_empty: bool = False):
    if value is None or value.strip() == "":
        if allow_empty:
            return None
        problems.append((fname, row, "schema", f"column '{col}' is empty"))
        return None
    try:
        out = kind(value)
    except ValueError:
        problems.append((fname, row, "schema", f"column '{col}' is not {kind.__name__}: {value!r}"))
        return None
    if isinstance(out, float) and not math.isfinite(out):
        problems.append((fname, row, "unit", f"column '{col}' is not finite"))
        return None
    return out


def _flag(value: str) -> bool | None:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "y", "t"):
        return True
    if v in ("0", "false", "no", "n", "f", ""):
        return False
    return None


def load_catalog(directory: str | Path) -> Dataset:
    """Load and validate a dataset directory.

    Raises
    ------
    DataValidationError
        Listing every schema, referential and unit violation found.
    """
    root = Path(directory)
    problems: list[tuple[str, int | None, str, str]] = []

    # nutrients
    nutrients: list[NutrientDef] = []
    seen: set[str] = set()
    for i, r in enumerate(_read(root / FILES["nutrients"], NUTRIENT_COLS, problems), 1):
        kind = r["bound_kind"].strip()
        if kind not in BOUND_KINDS:
            problems.append(("nutrients.csv", i, "schema", f"unknown bound_kind {kind!r}"))
            continue
        nid = r["nutrient_id"].strip()
        if nid in seen:
            problems.append(("nutrients.csv", i, "schema", f"duplicate nutrient_id {nid!r}"))
        seen.add(nid)
        nutrients.append(NutrientDef(nid, r["name"], r["unit"], kind))
    if nutrients and sum(n.bound_kind == "energy" for n in nutrients) != 1:
        problems.append(("nutrients.csv", None, "schema",
                         "exactly one nutrient must have bound_kind 'energy'"))
    nids = [n.nutrient_id for n in nutrients]

    # foods
    foods: dict[str, FoodItem] = {}
    for i, r in enumerate(_read(root / FILES["foods"], FOOD_COLS + nids, problems), 1):
        values = []
        for nid in nids:
            v = _num(r[nid], float, "foods.csv", i, nid, problems)
            if v is not None and v < 0:
                problems.append(("foods.csv", i, "unit", f"negative nutrient content '{nid}'"))
            values.append(v if v is not None else 0.0)
        iid = r["item_id"].strip()
        if iid in foods:
            problems.append(("foods.csv", i, "schema", f"duplicate item_id {iid!r}"))
        foods[iid] = FoodItem(iid, r["name"], r["food_group"], tuple(values))

    # market map
    market_map: dict[str, str] = {}
    for i, r in enumerate(_read(root / FILES["market_map"], MARKET_MAP_COLS, problems), 1):
        did = r["district_id"].strip()
        if did in market_map:
            problems.append(("market_map.csv", i, "referential",
                             f"district {did!r} mapped more than once"))
        market_map[did] = r["market_id"].strip()

    # prices
    price_rows = []
    keys: set[tuple] = set()
    for i, r in enumerate(_read(root / FILES["prices"], PRICE_COLS, problems), 1):
        year = _num(r["year"], int, "prices.csv", i, "year", problems)
        month = _num(r["month"], int, "prices.csv", i, "month", problems)
        price = _num(r["price_per_kg"], float, "prices.csv", i, "price_per_kg", problems)
        iid = r["item_id"].strip()
        mid = r["market_id"].strip()
        if iid not in foods:
            problems.append(("prices.csv", i, "referential", f"unknown item {iid!r}"))
        if month is not None and not 1 <= month <= 12:
            problems.append(("prices.csv", i, "schema", f"month {month} outside 1-12"))
        if price is not None and price <= 0:
            problems.append(("prices.csv", i, "unit", f"nonpositive price {price}"))
        key = (mid, year, month, iid)
        if key in keys:
            problems.append(("prices.csv", i, "schema", f"duplicate observation {key}"))
        keys.add(key)
        price_rows.append((mid, year, month, iid, price))
    prices = pd.DataFrame(price_rows, columns=PRICE_COLS)
    if not prices.empty:
        prices = prices.astype({"year": "int64", "month": "int64", "price_per_kg": "float64"},
                               errors="ignore")

    # members
    members: dict[str, list[MemberRecord]] = {}
    for i, r in enumerate(_read(root / FILES["members"], MEMBER_COLS, problems), 1):
        age = _num(r["age_months"], int, "members.csv", i, "age_months", problems)
        share = _num(r["meals_share"], float, "members.csv", i, "meals_share", problems)
        sex = r["sex"].strip().upper()
        lact = _flag(r["lactating"])
        if sex not in ("M", "F"):
            problems.append(("members.csv", i, "schema", f"sex must be M or F, got {sex!r}"))
        if lact is None:
            problems.append(("members.csv", i, "schema", f"lactating flag {r['lactating']!r}"))
        if age is not None and age < 0:
            problems.append(("members.csv", i, "unit", "negative age_months"))
        if share is not None and not 0.0 <= share <= 1.0:
            problems.append(("members.csv", i, "unit", f"meals_share {share} outside [0, 1]"))
        if lact and (sex != "F" or age is None
                     or not LACTATION_AGE_RANGE[0] <= age < LACTATION_AGE_RANGE[1]):
            problems.append(("members.csv", i, "unit",
                             "lactating only allowed for females aged 14-50 y"))
        members.setdefault(r["household_id"].strip(), []).append(
            MemberRecord(r["person_id"].strip(), age or 0, sex, bool(lact),
                         share if share is not None else 0.0))

    # households
    households: list[HouseholdRecord] = []
    hh_seen: set[str] = set()
    for i, r in enumerate(_read(root / FILES["households"], HOUSEHOLD_COLS, problems), 1):
        hid = r["household_id"].strip()
        did = r["district_id"].strip()
        year = _num(r["survey_year"], int, "households.csv", i, "survey_year", problems)
        month = _num(r["survey_month"], int, "households.csv", i, "survey_month", problems)
        food = _num(r["food_exp_day"], float, "households.csv", i, "food_exp_day", problems)
        total = _num(r["total_exp_day"], float, "households.csv", i, "total_exp_day", problems)
        weight = _num(r["weight"], float, "households.csv", i, "weight", problems)
        if hid in hh_seen:
            problems.append(("households.csv", i, "schema", f"duplicate household_id {hid!r}"))
        hh_seen.add(hid)
        if did not in market_map:
            problems.append(("households.csv", i, "referential",
                             f"district {did!r} has no market mapping"))
        if month is not None and not 1 <= month <= 12:
            problems.append(("households.csv", i, "schema", f"survey_month {month} outside 1-12"))
        if food is not None and food <= 0:
            problems.append(("households.csv", i, "unit", "food_exp_day must be > 0"))
        if food is not None and total is not None and total < food:
            problems.append(("households.csv", i, "unit", "total_exp_day < food_exp_day"))
        if weight is not None and weight <= 0:
            problems.append(("households.csv", i, "unit", "weight must be > 0"))
        mem = members.get(hid, [])
        if not mem:
            problems.append(("households.csv", i, "referential", f"household {hid!r} has no members"))
        households.append(HouseholdRecord(
            hid, did, year or 0, month or 0, food or 0.0, total or 0.0, weight or 0.0,
            tuple(mem), (r.get("panel_id") or "").strip(), (r.get("cluster_id") or "").strip()))
    for hid in members:
        if hid not in hh_seen:
            problems.append(("members.csv", None, "referential", f"unknown household {hid!r}"))

    # requirements
    req_cols = ["group_id", "energy_kcal"]
    for n in nutrients:
        if n.bound_kind != "energy":
            req_cols += [f"min_{n.nutrient_id}", f"max_{n.nutrient_id}"]
    req_records = []
    for i, r in enumerate(_read(root / FILES["requirements"], req_cols, problems), 1):
        rec: dict[str, object] = {"group_id": r["group_id"].strip()}
        energy = _num(r["energy_kcal"], float, "requirements.csv", i, "energy_kcal", problems)
        if energy is not None and energy <= 0:
            problems.append(("requirements.csv", i, "unit", "energy_kcal must be > 0"))
        rec["energy_kcal"] = energy
        for n in nutrients:
            if n.bound_kind == "energy":
                continue
            lo = _num(r[f"min_{n.nutrient_id}"], float, "requirements.csv", i,
                      f"min_{n.nutrient_id}", problems, allow_empty=True)
            hi = _num(r[f"max_{n.nutrient_id}"], float, "requirements.csv", i,
                      f"max_{n.nutrient_id}", problems, allow_empty=True)
            if (lo is not None) != n.has_lower or (hi is not None) != n.has_upper:
                problems.append(("requirements.csv", i, "schema",
                                 f"bounds for '{n.nutrient_id}' do not match bound_kind {n.bound_kind}"))
            for v in (lo, hi):
                if v is not None and v < 0:
                    problems.append(("requirements.csv", i, "unit",
                                     f"negative bound for '{n.nutrient_id}'"))
            if lo is not None and hi is not None and lo > hi:
                problems.append(("requirements.csv", i, "unit",
                                 f"min > max for '{n.nutrient_id}'"))
            rec[f"min_{n.nutrient_id}"] = lo
            rec[f"max_{n.nutrient_id}"] = hi
        req_records.append(rec)
    requirements = pd.DataFrame(req_records, columns=req_cols)
    requirements = requirements.astype({c: "float64" for c in req_cols[1:]})
    if requirements["group_id"].duplicated().any():
        problems.append(("requirements.csv", None, "schema", "duplicate group_id"))
    requirements = requirements.set_index("group_id", drop=False)

    # optional PPP annual factors
    ppp: dict[int, float] = {}
    ppp_path = root / FILES["ppp"]
    if ppp_path.exists():
        for i, r in enumerate(_read(ppp_path, PPP_COLS, problems), 1):
            year = _num(r["year"], int, "ppp_annual.csv", i, "year", problems)
            factor = _num(r["factor"], float, "ppp_annual.csv", i, "factor", problems)
            if factor is not None and factor <= 0:
                problems.append(("ppp_annual.csv", i, "unit", "factor must be > 0"))
            if year is not None and factor is not None:
                ppp[year] = factor

    if problems:
        raise DataValidationError(problems)
    return Dataset(tuple(nutrients), foods, prices, market_map, tuple(households),
                   requirements, ppp)


# -- writing ----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _write(path: Path, header: list[str], rows: Iterable[Iterable]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_dataset(ds: Dataset, directory: str | Path) -> Path:
    """Write ``ds`` as the CSV file set read by :func:`load_catalog`."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    nids = ds.nutrient_ids
    _write(root / FILES["nutrients"], NUTRIENT_COLS,
           ((n.nutrient_id, n.name, n.unit, n.bound_kind) for n in ds.nutrients))
    _write(root / FILES["foods"], FOOD_COLS + nids,
           ((f.item_id, f.name, f.food_group, *f.composition_100g)
            for f in sorted(ds.foods.values(), key=lambda f: f.item_id)))
    p = ds.prices.sort_values(["market_id", "year", "month", "item_id"])
    _write(root / FILES["prices"], PRICE_COLS,
           zip(p["market_id"], p["year"].astype(int), p["month"].astype(int),
               p["item_id"], p["price_per_kg"].astype(float)))
    _write(root / FILES["market_map"], MARKET_MAP_COLS, sorted(ds.market_map.items()))
    _write(root / FILES["households"], HOUSEHOLD_COLS + HOUSEHOLD_OPTIONAL,
           ((h.household_id, h.district_id, h.survey_year, h.survey_month,
             h.food_expenditure_per_day, h.total_expenditure_per_day, h.sampling_weight,
             h.panel_id, h.cluster_id) for h in ds.households))
    _write(root / FILES["members"], MEMBER_COLS,
           ((h.household_id, m.person_id, m.age_months, m.sex, m.lactating, m.meals_share)
            for h in ds.households for m in h.members))
    req = ds.requirements
    cols = list(req.columns)
    _write(root / FILES["requirements"], cols,
           ([None if (isinstance(v, float) and math.isnan(v)) else v for v in row]
            for row in req.itertuples(index=False, name=None)))
    if ds.ppp_annual:
        _write(root / FILES["ppp"], PPP_COLS, sorted(ds.ppp_annual.items()))
    return root


# -- derived tables ---------------------------------------------------------

def availability_matrix(ds: Dataset, years_months: Iterable[tuple[int, int]] | None = None
                        ) -> pd.DataFrame:
    """Count of markets with an observed price per item and year-month.

    Items with no price rows still appear, with zero counts. The result is
    long-form: ``item_id, year, month, n_markets_observed``.
    """
    p = ds.prices
    if years_months is None:
        years_months = sorted(set(zip(p["year"].astype(int), p["month"].astype(int))))
    ym = list(years_months)
    counts = (p.groupby(["item_id", "year", "month"])["market_id"].nunique()
              if not p.empty else pd.Series(dtype="int64"))
    rows = []
    for iid in sorted(ds.foods):
        for y, m in ym:
            rows.append((iid, y, m, int(counts.get((iid, y, m), 0))))
    return pd.DataFrame(rows, columns=["item_id", "year", "month", "n_markets_observed"])
