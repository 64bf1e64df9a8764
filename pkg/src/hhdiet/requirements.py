"""Individual requirement rows and shared household requirements.

Members aged 48 months and over form the shared pool, whose bounds use the
most demanding per-kcal density of any member::

    lower_j = HHE * max_i(min_need[j, i] / E_i)
    upper_j = HHE * min_i(max_tolerance[j, i] / E_i)
    HHE     = sum_i E_i

Children 6-47 months keep their individual rows and are solved separately;
infants under 6 months and members taking no meals at home are excluded.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .catalog import GROUPS, PROTEIN_RELAX_AGE, PROTEIN_RELAX_FACTOR, GroupRule
from .data_io import Dataset, HouseholdRecord, MemberRecord

POOL_MIN_AGE = 48
ADDON_MIN_AGE = 6


class ClassificationError(ValueError):
    """No requirement group matches a member."""


@dataclass(frozen=True, eq=False)
class RequirementRow:
    group_id: str
    energy_kcal: float
    # aligned with ``nutrient_ids``; NaN where a nutrient has no such bound
    min_need: np.ndarray
    max_tolerance: np.ndarray
    nutrient_ids: tuple[str, ...]

    def scaled(self, factor: float) -> "RequirementRow":
        return replace(self, energy_kcal=self.energy_kcal * factor,
                       min_need=self.min_need * factor,
                       max_tolerance=self.max_tolerance * factor)


@dataclass(frozen=True)
class RequirementTable:
    rows: dict[str, RequirementRow]
    nutrient_ids: tuple[str, ...]
    rules: tuple[GroupRule, ...] = GROUPS

    @classmethod
    def from_dataset(cls, ds: Dataset, rules: tuple[GroupRule, ...] = GROUPS) -> "RequirementTable":
        return cls.from_frame(ds.requirements, [n.nutrient_id for n in ds.nutrients
                                                if n.bound_kind != "energy"], rules)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, nutrient_ids: list[str],
                   rules: tuple[GroupRule, ...] = GROUPS) -> "RequirementTable":
        nids = tuple(nutrient_ids)
        lo_cols = [f"min_{n}" for n in nids]
        hi_cols = [f"max_{n}" for n in nids]
        rows = {}
        for rec in frame.to_dict("records"):
            lo = np.array([np.nan if rec[c] is None else rec[c] for c in lo_cols], dtype=float)
            hi = np.array([np.nan if rec[c] is None else rec[c] for c in hi_cols], dtype=float)
            rows[rec["group_id"]] = RequirementRow(rec["group_id"], float(rec["energy_kcal"]),
                                                   lo, hi, nids)
        return cls(rows, nids, rules)


def classify(member: MemberRecord, table: RequirementTable) -> RequirementRow:
    """Requirement row for a member aged 6 months or more."""
    if member.age_months < ADDON_MIN_AGE:
        raise ClassificationError(
            f"{member.person_id}: age {member.age_months} months is below the 6-month floor")
    for rule in table.rules:
        if rule.lactating != member.lactating:
            continue
        if rule.sex != "all" and rule.sex != member.sex:
            continue
        if rule.age_lo <= member.age_months < rule.age_hi:
            try:
                return table.rows[rule.group_id]
            except KeyError:
                raise ClassificationError(
                    f"{member.person_id}: group {rule.group_id!r} missing from requirement table"
                ) from None
    raise ClassificationError(
        f"{member.person_id}: no group for age {member.age_months} months, sex {member.sex}, "
        f"lactating={member.lactating}")


def scale_partial(row: RequirementRow, meals_share: float) -> RequirementRow:
    if not 0.0 <= meals_share <= 1.0:
        raise ValueError(f"meals_share {meals_share} outside [0, 1]")
    if meals_share == 1.0:
        return row
    return row.scaled(meals_share)


def addon_row(member: MemberRecord, table: RequirementTable) -> RequirementRow:
    """Individual row for a member, with the protein ceiling relaxed for 6-35 months."""
    row = classify(member, table)
    if PROTEIN_RELAX_AGE[0] <= member.age_months < PROTEIN_RELAX_AGE[1] \
            and "protein" in row.nutrient_ids:
        hi = row.max_tolerance.copy()
        k = row.nutrient_ids.index("protein")
        hi[k] *= PROTEIN_RELAX_FACTOR
        row = replace(row, max_tolerance=hi)
    return row


@dataclass(frozen=True)
class Partition:
    shared_pool: tuple[MemberRecord, ...]
    addon_children: tuple[MemberRecord, ...]
    excluded: tuple[MemberRecord, ...]


def partition(household: HouseholdRecord) -> Partition:
    pool, addon, excluded = [], [], []
    for m in household.members:
        if m.meals_share == 0 or m.age_months < ADDON_MIN_AGE:
            excluded.append(m)
        elif m.age_months < POOL_MIN_AGE:
            addon.append(m)
        else:
            pool.append(m)
    return Partition(tuple(pool), tuple(addon), tuple(excluded))


@dataclass(frozen=True, eq=False)
class SharedBounds:
    lower: np.ndarray  # NaN where the nutrient has no lower bound
    upper: np.ndarray  # NaN where the nutrient has no upper bound
    energy: float
    nutrient_ids: tuple[str, ...]
    # (nutrient_id, lower, upper) where lower > upper
    violations: tuple[tuple[str, float, float], ...] = ()

    @property
    def structurally_infeasible(self) -> bool:
        return bool(self.violations)


def shared_requirements(pool: list[RequirementRow]) -> SharedBounds:
    """Shared bounds for a non-empty pool of (already scaled) rows."""
    if not pool:
        raise ValueError("shared requirements are undefined for an empty pool")
    energies = np.array([r.energy_kcal for r in pool])
    if np.any(energies <= 0):
        raise ValueError("every pool member needs positive energy")
    hhe = float(energies.sum())
    lo = np.vstack([r.min_need for r in pool]) / energies[:, None]
    hi = np.vstack([r.max_tolerance for r in pool]) / energies[:, None]
    # bound presence is per nutrient, identical across rows
    lower = hhe * lo.max(axis=0)
    upper = hhe * hi.min(axis=0)
    if len(pool) == 1:
        lower, upper = pool[0].min_need.copy(), pool[0].max_tolerance.copy()
    nids = pool[0].nutrient_ids
    bad = np.flatnonzero(lower > upper)  # NaN comparisons are False
    violations = tuple((nids[j], float(lower[j]), float(upper[j])) for j in bad)
    return SharedBounds(lower, upper, hhe, nids, violations)


@dataclass(frozen=True)
class HouseholdRequirement:
    household_id: str
    shared: SharedBounds | None  # None when the pool is empty
    pool: tuple[tuple[str, RequirementRow], ...]
    addon_children: tuple[tuple[str, RequirementRow], ...]
    excluded: tuple[str, ...]
    per_member_unscaled: dict[str, tuple[RequirementRow, float]] = field(default_factory=dict)

    @property
    def individual_rows(self) -> tuple[tuple[str, RequirementRow], ...]:
        return self.pool + self.addon_children

    @property
    def energy_total(self) -> float:
        """Energy of everyone covered: shared pool plus add-on children."""
        return float(sum(r.energy_kcal for _, r in self.individual_rows))


def household_requirement(household: HouseholdRecord, table: RequirementTable
                          ) -> HouseholdRequirement:
    part = partition(household)
    pool: list[tuple[str, RequirementRow]] = []
    addon: list[tuple[str, RequirementRow]] = []
    unscaled: dict[str, tuple[RequirementRow, float]] = {}
    for m in part.shared_pool:
        base = classify(m, table)
        unscaled[m.person_id] = (base, m.meals_share)
        pool.append((m.person_id, scale_partial(base, m.meals_share)))
    for m in part.addon_children:
        base = addon_row(m, table)
        unscaled[m.person_id] = (base, m.meals_share)
        addon.append((m.person_id, scale_partial(base, m.meals_share)))
    shared = shared_requirements([r for _, r in pool]) if pool else None
    return HouseholdRequirement(household.household_id, shared, tuple(pool), tuple(addon),
                                tuple(m.person_id for m in part.excluded), unscaled)
