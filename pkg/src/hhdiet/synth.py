"""Synthetic datasets with known seasonal structure.

Log prices follow ``trend * t + amplitude * cos(m*pi/6 - phase) + noise`` per
item and market. Prices go missing at a configured overall rate, more often
in lean months and for perishable foods. Household compositions are drawn
from the requirement-group population shares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .catalog import FOOD_GROUPS, GROUPS, NUTRIENTS, default_requirement_rows
from .data_io import Dataset, FoodItem, HouseholdRecord, MemberRecord, NutrientDef


@dataclass(frozen=True)
class SynthParams:
    n_markets: int = 25
    n_items: int = 51
    n_households: int = 500
    months: int = 55
    price_seasonal_amplitude: float = 0.10
    missingness_rate: float = 0.10
    lean_season_months: tuple[int, ...] = (12, 1, 2, 3)
    start: tuple[int, int] = (2013, 1)
    switch: tuple[int, int] | None = (2016, 1)
    noise_sd: float = 0.05
    monthly_trend: float = 0.01
    lean_weight: float = 3.0
    perishable_weight: float = 2.0
    # extra lean-month missingness for these food groups
    lean_scarce_groups: tuple[str, ...] = ()
    lean_scarce_weight: float = 1.0
    # share of households built around a young child, an adolescent and a
    # lactating woman, whose pooled density bounds are narrow
    mixed_household_rate: float = 0.0
    # multiplies the upper bounds of 4-8 year olds, narrowing shared bounds
    child_ul_scale: float = 1.0
    # rows of the price panel never observed, as (market_id, year, month)
    vacant_market_months: tuple[tuple[str, int, int], ...] = field(default_factory=tuple)

    def validate(self) -> None:
        for name in ("n_markets", "n_items", "n_households", "months"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_items > sum(len(g["items"]) for g in FOOD_GROUPS.values()):
            raise ValueError("n_items exceeds the food list")
        if self.price_seasonal_amplitude < 0:
            raise ValueError("price_seasonal_amplitude must be >= 0")
        if not 0.0 <= self.missingness_rate < 1.0:
            raise ValueError("missingness_rate must be in [0, 1)")
        if any(not 1 <= m <= 12 for m in self.lean_season_months):
            raise ValueError("lean_season_months must be calendar months")
        unknown = set(self.lean_scarce_groups) - set(FOOD_GROUPS)
        if unknown:
            raise ValueError(f"unknown food groups: {sorted(unknown)}")
        if self.lean_scarce_weight < 1.0:
            raise ValueError("lean_scarce_weight must be >= 1")
        if self.child_ul_scale <= 0:
            raise ValueError("child_ul_scale must be positive")
        if not 0.0 <= self.mixed_household_rate <= 1.0:
            raise ValueError("mixed_household_rate must be in [0, 1]")


def month_range(start: tuple[int, int], n: int) -> list[tuple[int, int]]:
    y, m = start
    out = []
    for _ in range(n):
        out.append((y, m))
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return out


def month_index(year: int, month: int) -> int:
    return year * 12 + month - 1


def _select_items(n_items: int) -> list[tuple[str, str]]:
    """Round-robin over food groups so small menus still span groups."""
    queues = [(g, list(spec["items"])) for g, spec in FOOD_GROUPS.items()]
    out: list[tuple[str, str]] = []
    while len(out) < n_items:
        for g, items in queues:
            if items and len(out) < n_items:
                out.append((g, items.pop(0)))
    return out


def _item_id(name: str) -> str:
    keep = "".join(ch if ch.isalnum() else "_" for ch in name.lower())
    return "_".join(p for p in keep.split("_") if p)


def _reference_density(nutrients: list[NutrientDef]) -> dict[str, float]:
    """Per-kcal density of an adult woman's requirement, lower bound where present."""
    ref = next(r for r in default_requirement_rows() if r["group_id"] == "Adult (F) 19-30 y")
    e = float(ref["energy_kcal"])
    out = {}
    for n in nutrients:
        if n.bound_kind == "energy":
            continue
        v = ref[f"min_{n.nutrient_id}"]
        if v is None:
            v = ref[f"max_{n.nutrient_id}"] * 0.25
        out[n.nutrient_id] = float(v) / e
    return out


def _foods(rng: np.random.Generator, n_items: int, nutrients: list[NutrientDef]) -> dict[str, FoodItem]:
    ref = _reference_density(nutrients)
    foods = {}
    for group, name in _select_items(n_items):
        spec = FOOD_GROUPS[group]
        kcal = spec["energy"] * float(rng.lognormal(0.0, 0.15))
        values = []
        for n in nutrients:
            if n.bound_kind == "energy":
                values.append(round(kcal, 3))
                continue
            richness = spec["profile"].get(n.nutrient_id)
            if richness is None:
                if n.nutrient_id in ("vit_b12", "retinol"):
                    values.append(0.0)
                    continue
                richness = 0.05
            density = ref[n.nutrient_id] * richness * float(rng.lognormal(0.0, 0.3))
            values.append(round(density * kcal, 6))
        iid = _item_id(name)
        foods[iid] = FoodItem(iid, name, group, tuple(values))
    return foods


def _prices(rng: np.random.Generator, p: SynthParams, foods: dict[str, FoodItem],
            markets: list[str]) -> pd.DataFrame:
    months = month_range(p.start, p.months)
    items = sorted(foods)
    n_i, n_m, n_t = len(items), len(markets), len(months)
    cal = np.array([m for _, m in months])
    t = np.arange(n_t)
    base = np.log([FOOD_GROUPS[foods[i].food_group]["price"] for i in items]) \
        + rng.normal(0.0, 0.3, n_i)
    phase = rng.uniform(0.0, 2 * np.pi, n_i)
    market_fx = rng.normal(0.0, 0.1, n_m)
    seasonal = p.price_seasonal_amplitude * np.cos(cal[None, :] * np.pi / 6 - phase[:, None])
    logp = (base[:, None, None] + market_fx[None, :, None]
            + (p.monthly_trend * t + 0.0)[None, None, :] + seasonal[:, None, :]
            + rng.normal(0.0, p.noise_sd, (n_i, n_m, n_t)))

    w_item = np.array([p.perishable_weight if FOOD_GROUPS[foods[i].food_group]["perishable"]
                       else 1.0 for i in items])
    lean = np.isin(cal, p.lean_season_months)
    w_month = np.where(lean, p.lean_weight, 1.0)
    w = w_item[:, None] * w_month[None, :]
    scarce = np.array([foods[i].food_group in p.lean_scarce_groups for i in items])
    w = w * np.where(scarce[:, None] & lean[None, :], p.lean_scarce_weight, 1.0)
    prob = np.clip(p.missingness_rate * w / w.mean(), 0.0, 0.95)
    missing = rng.random((n_i, n_m, n_t)) < prob[:, None, :]

    vacant = {(mk, y, m) for mk, y, m in p.vacant_market_months}
    rows = []
    for a, iid in enumerate(items):
        for b, mk in enumerate(markets):
            for c, (y, m) in enumerate(months):
                if missing[a, b, c] or (mk, y, m) in vacant:
                    continue
                rows.append((mk, y, m, iid, round(float(np.exp(logp[a, b, c])), 4)))
    return pd.DataFrame(rows, columns=["market_id", "year", "month", "item_id", "price_per_kg"])


_SHARE_W = np.array([g.population_share for g in GROUPS])


def _draw_member(rng: np.random.Generator, pid: str) -> MemberRecord:
    g = GROUPS[int(rng.choice(len(GROUPS), p=_SHARE_W / _SHARE_W.sum()))]
    hi = min(g.age_hi, 90 * 12)
    age = int(rng.integers(g.age_lo, hi))
    sex = g.sex if g.sex != "all" else ("M" if rng.random() < 0.5 else "F")
    return MemberRecord(pid, age, sex, g.lactating, _meals_share(rng))


def _meals_share(rng: np.random.Generator) -> float:
    u = rng.random()
    if u < 0.85:
        return 1.0
    if u < 0.88:
        return 0.0
    return round(int(rng.integers(7, 21)) / 21, 6)


_MIXED_CORE = ("Child (M) 4-8 y", "Child (F) 4-8 y", "Adolescent (M) 9-13 y",
               "Adolescent (F) 9-13 y", "Lactation (F) 19-30 y")


def _mixed_household(rng: np.random.Generator, hid: str) -> list[MemberRecord]:
    by_id = {g.group_id: g for g in GROUPS}
    picks = [_MIXED_CORE[int(rng.integers(2))], _MIXED_CORE[2 + int(rng.integers(2))],
             _MIXED_CORE[4]]
    members = []
    for k, gid in enumerate(picks):
        g = by_id[gid]
        members.append(MemberRecord(f"{hid}-P{k + 1}", int(rng.integers(g.age_lo, g.age_hi)),
                                    g.sex, g.lactating, 1.0))
    for k in range(int(rng.poisson(1.0))):
        members.append(_draw_member(rng, f"{hid}-P{len(picks) + k + 1}"))
    return members


def _household(rng: np.random.Generator, hid: str, mixed_rate: float = 0.0
               ) -> list[MemberRecord]:
    if mixed_rate > 0 and rng.random() < mixed_rate:
        return _mixed_household(rng, hid)
    size = 1 + min(int(rng.poisson(3.5)), 9)
    members = [_draw_member(rng, f"{hid}-P{k + 1}") for k in range(size)]
    if rng.random() < 0.08:
        members.append(MemberRecord(f"{hid}-P{size + 1}", int(rng.integers(0, 6)),
                                    "M" if rng.random() < 0.5 else "F", False, 1.0))
    return members


def _age_members(rng: np.random.Generator, members: list[MemberRecord], months: int,
                 hid: str) -> list[MemberRecord]:
    out = []
    for m in members:
        age = m.age_months + months
        lact = m.lactating and 168 <= age < 612 and rng.random() < 0.3
        out.append(MemberRecord(m.person_id, age, m.sex, lact, _meals_share(rng)))
    if rng.random() < 0.15:
        out.append(MemberRecord(f"{hid}-P{len(members) + 1}", int(rng.integers(0, 30)),
                                "M" if rng.random() < 0.5 else "F", False, 1.0))
    return out


def synth_generate(seed: int, params: SynthParams | None = None) -> Dataset:
    """Build a validated synthetic dataset; identical for identical inputs."""
    p = params or SynthParams()
    p.validate()
    rng = np.random.default_rng(seed)
    nutrients = [NutrientDef(*row) for row in NUTRIENTS]
    foods = _foods(rng, p.n_items, nutrients)
    markets = [f"M{k + 1:02d}" for k in range(p.n_markets)]
    prices = _prices(rng, p, foods, markets)

    n_extra = max(1, p.n_markets // 5)
    market_map = {f"D{k + 1:02d}": markets[k] for k in range(p.n_markets)}
    for k in range(n_extra):
        market_map[f"D{p.n_markets + k + 1:02d}"] = markets[int(rng.integers(p.n_markets))]
    districts = sorted(market_map)

    months = month_range(p.start, p.months)
    first, last = months[0], months[-1]
    two_waves = p.switch is not None and first < p.switch <= last
    wave1 = [ym for ym in months if p.switch is None or ym < p.switch][:12]
    wave2 = [ym for ym in months if two_waves and ym >= p.switch][:12]

    # expenditure scale: currency per 1000 kcal of a typical mixed diet
    med_price = float(prices["price_per_kg"].median()) if not prices.empty else 1000.0
    kcal_kg = float(np.median([f.per_kg[0] for f in foods.values()]))
    per_1000kcal = 0.85 * med_price / kcal_kg * 1000.0
    energy_by_group = {r["group_id"]: float(r["energy_kcal"]) for r in default_requirement_rows()}

    def household_energy(members: list[MemberRecord]) -> float:
        total = 0.0
        for m in members:
            if m.age_months < 6:
                continue
            g = next((g for g in GROUPS if g.lactating == m.lactating
                      and (g.sex in ("all", m.sex)) and g.age_lo <= m.age_months < g.age_hi), None)
            total += m.meals_share * energy_by_group[g.group_id] if g else 0.0
        return total

    def record(hid, panel, did, ym, members, cluster) -> HouseholdRecord:
        energy = max(household_energy(members), 500.0)
        inflation = math.exp(p.monthly_trend * (month_index(*ym) - month_index(*first)))
        food = round(energy / 1000 * per_1000kcal * inflation * float(rng.lognormal(0.0, 0.45)), 4)
        total = round(food / float(rng.uniform(0.6, 0.9)), 4)
        weight = round(float(rng.lognormal(6.5, 0.5)), 4)
        return HouseholdRecord(hid, did, ym[0], ym[1], food, total, weight, tuple(members),
                               panel, cluster)

    households: list[HouseholdRecord] = []
    for k in range(p.n_households):
        panel = f"H{k + 1:04d}"
        did = districts[int(rng.integers(len(districts)))]
        cluster = f"EA-{did}-{int(rng.integers(4))}"
        ym1 = wave1[int(rng.integers(len(wave1)))]
        mem1 = _household(rng, panel, p.mixed_household_rate)
        if two_waves:
            households.append(record(f"{panel}-1", panel, did, ym1, mem1, cluster))
            ym2 = wave2[int(rng.integers(len(wave2)))]
            gap = month_index(*ym2) - month_index(*ym1)
            mem2 = _age_members(rng, mem1, gap, panel)
            households.append(record(f"{panel}-2", panel, did, ym2, mem2, cluster))
        else:
            households.append(record(panel, panel, did, ym1, mem1, cluster))

    req = pd.DataFrame(default_requirement_rows())
    if p.child_ul_scale != 1.0:
        young = req["group_id"].str.contains("4-8 y")
        macros = {"max_carbohydrate", "max_protein", "max_fat"}
        for col in (c for c in req.columns if c.startswith("max_") and c not in macros):
            hi = req.loc[young, col].astype(float)
            scaled = hi * p.child_ul_scale
            lo = req.loc[young, "min_" + col[4:]].astype(float)
            # keep each child's own row comfortably feasible
            scaled = scaled.where(lo.isna(), np.maximum(scaled, 1.25 * lo))
            req.loc[young, col] = scaled.where(hi.notna())
    req = req.astype({c: "float64" for c in req.columns if c != "group_id"})
    req = req.set_index("group_id", drop=False)
    years = sorted({y for y, _ in months})
    ppp = {y: round(320.0 * 1.15 ** (y - 2013), 4) for y in years}
    return Dataset(tuple(nutrients), foods, prices, market_map, tuple(households), req, ppp)
