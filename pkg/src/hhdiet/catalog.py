"""Default nutrient catalog, requirement-group scheme and requirement table.

The requirement values are DRI-style figures (EAR as the lower bound, UL as
the upper bound, AMDR shares for macronutrients) intended as a realistic
default for synthetic runs. Real analyses should supply their own
``requirements.csv``.
"""
from __future__ import annotations

from dataclasses import dataclass

# (nutrient_id, name, unit, bound_kind)
NUTRIENTS: tuple[tuple[str, str, str, str], ...] = (
    ("energy", "Energy", "kcal", "energy"),
    ("carbohydrate", "Carbohydrate", "g", "both"),
    ("protein", "Protein", "g", "both"),
    ("fat", "Lipids", "g", "both"),
    ("vit_a", "Vitamin A", "µg", "lower_only"),
    ("retinol", "Retinol", "µg", "upper_only"),
    ("vit_c", "Vitamin C", "mg", "both"),
    ("vit_e", "Vitamin E", "mg", "both"),
    ("thiamin", "Thiamin", "mg", "lower_only"),
    ("riboflavin", "Riboflavin", "mg", "lower_only"),
    ("niacin", "Niacin", "mg", "lower_only"),
    ("vit_b6", "Vitamin B6", "mg", "both"),
    ("folate", "Folate", "µg", "lower_only"),
    ("vit_b12", "Vitamin B12", "µg", "lower_only"),
    ("calcium", "Calcium", "mg", "both"),
    ("copper", "Copper", "mg", "both"),
    ("iron", "Iron", "mg", "both"),
    ("magnesium", "Magnesium", "mg", "lower_only"),
    ("phosphorus", "Phosphorus", "mg", "both"),
    ("selenium", "Selenium", "µg", "both"),
    ("zinc", "Zinc", "mg", "both"),
    ("sodium", "Sodium", "mg", "upper_only"),
)

BOUND_KINDS = ("energy", "lower_only", "upper_only", "both")


@dataclass(frozen=True)
class GroupRule:
    group_id: str
    sex: str  # "M", "F" or "all"
    age_lo: int  # months, inclusive
    age_hi: int  # months, exclusive
    lactating: bool
    population_share: float  # percent, used by the synthetic generator


_Y = 12
_INF = 10_000

# Requirement groups and their population shares (percent).
GROUPS: tuple[GroupRule, ...] = (
    GroupRule("Infant (all) 6 months-1 y", "all", 6, 1 * _Y, False, 1.35),
    GroupRule("Child (all) 1-2 y", "all", 1 * _Y, 3 * _Y, False, 5.45),
    GroupRule("Child (M) 3 y", "M", 3 * _Y, 4 * _Y, False, 1.57),
    GroupRule("Child (F) 3 y", "F", 3 * _Y, 4 * _Y, False, 1.82),
    GroupRule("Child (M) 4-8 y", "M", 4 * _Y, 9 * _Y, False, 8.15),
    GroupRule("Child (F) 4-8 y", "F", 4 * _Y, 9 * _Y, False, 8.46),
    GroupRule("Adolescent (M) 9-13 y", "M", 9 * _Y, 14 * _Y, False, 7.92),
    GroupRule("Adolescent (M) 14-18 y", "M", 14 * _Y, 19 * _Y, False, 5.91),
    GroupRule("Adult (M) 19-30 y", "M", 19 * _Y, 31 * _Y, False, 8.14),
    GroupRule("Adult (M) 31-50 y", "M", 31 * _Y, 51 * _Y, False, 8.19),
    GroupRule("Adult (M) 51-70 y", "M", 51 * _Y, 71 * _Y, False, 3.04),
    GroupRule("Older Adult (M) 70+ y", "M", 71 * _Y, _INF, False, 0.99),
    GroupRule("Adolescent (F) 9-13 y", "F", 9 * _Y, 14 * _Y, False, 7.76),
    GroupRule("Adolescent (F) 14-18 y", "F", 14 * _Y, 19 * _Y, False, 5.53),
    GroupRule("Adult (F) 19-30 y", "F", 19 * _Y, 31 * _Y, False, 6.84),
    GroupRule("Adult (F) 31-50 y", "F", 31 * _Y, 51 * _Y, False, 7.31),
    GroupRule("Adult (F) 51-70 y", "F", 51 * _Y, 71 * _Y, False, 3.58),
    GroupRule("Older Adult (F) 70+ y", "F", 71 * _Y, _INF, False, 1.25),
    GroupRule("Lactation (F) 14-18 y", "F", 14 * _Y, 19 * _Y, True, 0.28),
    GroupRule("Lactation (F) 19-30 y", "F", 19 * _Y, 31 * _Y, True, 3.41),
    GroupRule("Lactation (F) 31-50 y", "F", 31 * _Y, 51 * _Y, True, 1.64),
)

LACTATION_AGE_RANGE = (14 * _Y, 51 * _Y)

# Add-on children whose protein upper bound is relaxed by this factor.
PROTEIN_RELAX_AGE = (6, 36)
PROTEIN_RELAX_FACTOR = 1.5

# Short keys used to write the per-group tables compactly below.
_KEYS = (
    "inf", "c12", "c3m", "c3f", "c48m", "c48f",
    "m913", "m1418", "m1930", "m3150", "m5170", "m70",
    "f913", "f1418", "f1930", "f3150", "f5170", "f70",
    "l1418", "l1930", "l3150",
)

_ENERGY = dict(zip(_KEYS, (
    700, 1000, 1250, 1200, 1500, 1400,
    2000, 2700, 2700, 2600, 2400, 2200,
    1800, 2100, 2200, 2100, 1900, 1800,
    2500, 2600, 2500,
)))

_PROTEIN_MIN = dict(zip(_KEYS, (
    11, 11, 13, 13, 15, 15,
    28, 43, 46, 46, 46, 46,
    28, 38, 38, 38, 38, 38,
    59, 59, 59,
)))


def _by_band(inf, c13, c48, c913, c1418, adult, older=None, lact=None,
             f913=None, f1418=None, fadult=None, folder=None):
    """Expand age-band values to every group key. Female values default to male."""
    older = adult if older is None else older
    f913 = c913 if f913 is None else f913
    f1418 = c1418 if f1418 is None else f1418
    fadult = adult if fadult is None else fadult
    folder = fadult if folder is None else folder
    lact = fadult if lact is None else lact
    return dict(zip(_KEYS, (
        inf, c13, c13, c13, c48, c48,
        c913, c1418, adult, adult, older, older,
        f913, f1418, fadult, fadult, folder, folder,
        lact, lact, lact,
    )))


# Micronutrient lower bounds (EAR-like).
_MIN = {
    "vit_a": _by_band(350, 210, 275, 445, 630, 625, lact=900, f913=420, f1418=485, fadult=500),
    "vit_c": _by_band(50, 13, 22, 39, 63, 75, lact=100, f1418=56, fadult=60),
    "vit_e": _by_band(5, 5, 6, 9, 12, 12, lact=16),
    "thiamin": _by_band(0.3, 0.4, 0.5, 0.7, 1.0, 1.0, lact=1.2, f1418=0.9, fadult=0.9),
    "riboflavin": _by_band(0.4, 0.4, 0.5, 0.8, 1.1, 1.1, lact=1.3, f1418=0.9, fadult=0.9),
    "niacin": _by_band(4, 5, 6, 9, 12, 12, lact=13, f1418=11, fadult=11),
    "vit_b6": _by_band(0.3, 0.4, 0.5, 0.8, 1.1, 1.1, older=1.4, lact=1.7,
                       f1418=1.0, fadult=1.1, folder=1.3),
    "folate": _by_band(80, 120, 160, 250, 320, 320, lact=450),
    "vit_b12": _by_band(0.5, 0.7, 1.0, 1.5, 2.0, 2.0, lact=2.4),
    "calcium": _by_band(260, 500, 800, 1100, 1100, 800, lact=800, folder=1000),
    "copper": _by_band(0.22, 0.26, 0.34, 0.54, 0.685, 0.7, lact=1.0),
    "iron": _by_band(6.9, 3.0, 4.1, 5.9, 7.7, 6.0, lact=6.5, f913=5.7, f1418=7.9,
                     fadult=8.1, folder=5.0),
    "magnesium": _by_band(75, 65, 110, 200, 340, 340, lact=265, f1418=300, fadult=260),
    "phosphorus": _by_band(275, 380, 405, 1055, 1055, 580, lact=580),
    "selenium": _by_band(20, 17, 23, 35, 45, 45, lact=59),
    "zinc": _by_band(2.5, 2.5, 4.0, 7.0, 8.5, 9.4, lact=10.4, f1418=7.3, fadult=6.8),
}

# Upper bounds (UL-like).
_MAX = {
    "retinol": _by_band(600, 600, 900, 1700, 2800, 3000),
    "vit_c": _by_band(400, 400, 650, 1200, 1800, 2000),
    "vit_e": _by_band(150, 200, 300, 600, 800, 1000),
    "vit_b6": _by_band(30, 30, 40, 60, 80, 100),
    "calcium": _by_band(1500, 2500, 2500, 3000, 3000, 2500, older=2000),
    "copper": _by_band(1.0, 1.0, 3.0, 5.0, 8.0, 10.0),
    "iron": _by_band(40, 40, 40, 40, 45, 45),
    "phosphorus": _by_band(3000, 3000, 3000, 4000, 4000, 4000, older=3000),
    "selenium": _by_band(60, 90, 150, 280, 400, 400),
    "zinc": _by_band(5, 7, 12, 23, 34, 40),
    "sodium": _by_band(1000, 1200, 1500, 1800, 2300, 2300),
}

# Macronutrient shares of energy: (carb lo, carb hi, protein hi, fat lo, fat hi).
_AMDR = {
    "young": (0.45, 0.65, 0.20, 0.30, 0.40),
    "child": (0.45, 0.65, 0.30, 0.25, 0.35),
    "adult": (0.45, 0.65, 0.35, 0.20, 0.35),
}


def _amdr_band(key: str) -> str:
    if key in ("inf", "c12", "c3m", "c3f"):
        return "young"
    if key in ("c48m", "c48f", "m913", "f913", "m1418", "f1418", "l1418"):
        return "child"
    return "adult"


def default_requirement_rows() -> list[dict[str, float | str | None]]:
    """Requirement table as plain records (one dict per group).

    Keys are ``group_id``, ``energy_kcal`` and ``min_<id>``/``max_<id>`` per
    nutrient; ``None`` marks an absent bound.
    """
    rows = []
    for rule, key in zip(GROUPS, _KEYS):
        energy = float(_ENERGY[key])
        carb_lo, carb_hi, prot_hi, fat_lo, fat_hi = _AMDR[_amdr_band(key)]
        row: dict[str, float | str | None] = {"group_id": rule.group_id, "energy_kcal": energy}
        for nid, _name, _unit, kind in NUTRIENTS:
            if kind == "energy":
                continue
            lo = hi = None
            if nid == "carbohydrate":
                lo, hi = carb_lo * energy / 4, carb_hi * energy / 4
            elif nid == "protein":
                lo, hi = float(_PROTEIN_MIN[key]), prot_hi * energy / 4
            elif nid == "fat":
                lo, hi = fat_lo * energy / 9, fat_hi * energy / 9
            else:
                if kind in ("both", "lower_only"):
                    lo = float(_MIN[nid][key])
                if kind in ("both", "upper_only"):
                    hi = float(_MAX[nid][key])
            row[f"min_{nid}"] = lo
            row[f"max_{nid}"] = hi
        rows.append(row)
    return rows


# Food list by group. Energy is kcal per 100 g edible portion; ``profile``
# gives nutrient richness relative to an adult reference density.
FOOD_GROUPS: dict[str, dict] = {
    "Cereals & Cereal Products": {
        "items": ["Maize flour (dehulled)", "Maize flour (whole grain)", "Maize grain",
                  "Maize grain, Admarc", "Rice grain", "White bread"],
        "energy": 350, "perishable": False, "price": 600,
        "profile": {"carbohydrate": 1.5, "protein": 0.8, "fat": 0.3, "thiamin": 1.2,
                    "niacin": 0.8, "vit_b6": 0.6, "folate": 0.3, "magnesium": 1.0,
                    "phosphorus": 1.0, "zinc": 0.8, "iron": 0.8, "copper": 0.9,
                    "selenium": 0.4, "sodium": 0.1},
    },
    "Dark Green Leafy Vegetables": {
        "items": ["Chinese cabbage", "Pumpkin leaves", "Rape leaves"],
        "energy": 30, "perishable": True, "price": 700,
        "profile": {"carbohydrate": 0.6, "protein": 2.5, "fat": 0.5, "vit_a": 12.0,
                    "vit_c": 15.0, "vit_e": 5.0, "thiamin": 2.0, "riboflavin": 4.0,
                    "niacin": 2.0, "vit_b6": 4.0, "folate": 10.0, "calcium": 10.0,
                    "copper": 9.0, "iron": 8.0, "magnesium": 6.0, "phosphorus": 2.0,
                    "selenium": 4.0, "zinc": 4.0, "sodium": 0.5},
    },
    "Eggs": {
        "items": ["Chicken eggs"],
        "energy": 150, "perishable": False, "price": 1800,
        "profile": {"protein": 3.0, "fat": 2.5, "carbohydrate": 0.05, "vit_a": 2.0,
                    "retinol": 1.5, "vit_e": 1.0, "riboflavin": 4.0, "vit_b12": 6.0,
                    "folate": 1.5, "phosphorus": 2.5, "selenium": 4.0, "zinc": 1.5,
                    "iron": 1.5, "sodium": 1.0, "calcium": 0.6, "vit_b6": 0.8},
    },
    "Fish & Seafood": {
        "items": ["Cichlid (Utaka, dried)", "Oreochromis lidole, dry",
                  "Oreochromis lidole, fresh", "Sardine (Usipa, sun dried)"],
        "energy": 300, "perishable": True, "price": 3500,
        "profile": {"protein": 5.0, "fat": 1.2, "carbohydrate": 0.02, "niacin": 5.0,
                    "vit_b6": 2.0, "vit_b12": 20.0, "calcium": 5.0, "iron": 2.0,
                    "phosphorus": 5.0, "selenium": 6.0, "zinc": 3.0, "riboflavin": 2.0,
                    "sodium": 2.0, "magnesium": 2.0, "copper": 0.6, "retinol": 0.3},
    },
    "Flesh Meat": {
        "items": ["Beef", "Goat", "Live chicken", "Pork"],
        "energy": 200, "perishable": False, "price": 3000,
        "profile": {"protein": 4.5, "fat": 2.0, "carbohydrate": 0.02, "niacin": 4.0,
                    "vit_b6": 2.0, "vit_b12": 8.0, "iron": 2.5, "zinc": 4.0,
                    "phosphorus": 2.5, "selenium": 3.0, "riboflavin": 1.5, "thiamin": 1.5,
                    "retinol": 0.8, "sodium": 0.6, "magnesium": 0.8, "copper": 0.6},
    },
    "Legumes": {
        "items": ["Brown beans", "Cowpeas", "Groundnuts", "Pigeon peas", "White beans"],
        "energy": 340, "perishable": False, "price": 900,
        "profile": {"carbohydrate": 0.9, "protein": 2.2, "fat": 0.7, "thiamin": 2.0,
                    "riboflavin": 0.8, "niacin": 1.2, "vit_b6": 1.2, "folate": 4.0,
                    "calcium": 0.8, "copper": 6.0, "iron": 2.2, "magnesium": 2.5,
                    "phosphorus": 2.2, "selenium": 2.5, "zinc": 1.6, "vit_e": 1.2,
                    "sodium": 0.05},
    },
    "Milk & Milk Products": {
        "items": ["Fresh milk", "Powdered milk"],
        "energy": 200, "perishable": False, "price": 1500,
        "profile": {"protein": 2.5, "fat": 2.2, "carbohydrate": 0.6, "vit_a": 1.0,
                    "retinol": 1.0, "riboflavin": 4.0, "vit_b12": 5.0, "calcium": 6.0,
                    "phosphorus": 2.5, "zinc": 1.2, "selenium": 1.5, "sodium": 1.0,
                    "magnesium": 1.0, "vit_b6": 0.6},
    },
    "Oils & Fats": {
        "items": ["Cooking oil", "Cooking oil refill"],
        "energy": 880, "perishable": False, "price": 1400,
        "profile": {"fat": 4.5, "vit_e": 3.0, "vit_a": 1.0},
    },
    "Vitamin-A rich fruits": {
        "items": ["Mangoes", "Oranges", "Papaya"],
        "energy": 55, "perishable": True, "price": 400,
        "profile": {"carbohydrate": 1.7, "protein": 0.5, "fat": 0.2, "vit_a": 5.0,
                    "vit_c": 20.0, "vit_e": 2.0, "folate": 2.0, "calcium": 1.5,
                    "copper": 5.0, "magnesium": 1.5, "vit_b6": 1.5, "selenium": 1.0,
                    "thiamin": 0.8, "riboflavin": 0.8, "niacin": 0.8, "iron": 0.6,
                    "phosphorus": 0.5, "zinc": 0.4},
    },
    "Vit-A rich Vegetables": {
        "items": ["Pumpkin"],
        "energy": 30, "perishable": True, "price": 300,
        "profile": {"carbohydrate": 1.3, "protein": 0.8, "fat": 0.2, "vit_a": 15.0,
                    "vit_c": 6.0, "vit_e": 4.0, "riboflavin": 2.0, "vit_b6": 2.0,
                    "folate": 2.0, "copper": 6.0, "iron": 2.0, "magnesium": 2.0,
                    "phosphorus": 1.5, "selenium": 1.0, "zinc": 1.0, "calcium": 1.0},
    },
    "Other Fruits": {
        "items": ["Avocado", "Banana", "Guava"],
        "energy": 90, "perishable": True, "price": 450,
        "profile": {"carbohydrate": 1.4, "protein": 0.4, "fat": 0.8, "vit_c": 8.0,
                    "vit_b6": 2.5, "folate": 1.5, "magnesium": 1.2, "copper": 1.5,
                    "vit_a": 0.3, "vit_e": 1.0, "niacin": 0.8, "riboflavin": 0.6,
                    "thiamin": 0.6, "iron": 0.5, "phosphorus": 0.5, "zinc": 0.4,
                    "selenium": 0.3, "calcium": 0.3},
    },
    "Other Vegetables": {
        "items": ["Tomatoes", "Okra", "Onions", "Cabbage", "Cucumber", "Eggplant",
                  "Green beans"],
        "energy": 30, "perishable": True, "price": 500,
        "profile": {"carbohydrate": 1.2, "protein": 1.5, "fat": 0.3, "vit_a": 2.0,
                    "vit_c": 10.0, "vit_e": 2.0, "thiamin": 1.5, "riboflavin": 1.5,
                    "niacin": 1.5, "vit_b6": 2.5, "folate": 4.0, "calcium": 3.0,
                    "copper": 8.0, "iron": 3.0, "magnesium": 2.5, "phosphorus": 1.5,
                    "selenium": 3.0, "zinc": 2.0, "sodium": 0.3},
    },
    "Roots & Tubers": {
        "items": ["Cassava", "Irish potatoes", "Sweet potatoes"],
        "energy": 110, "perishable": False, "price": 350,
        "profile": {"carbohydrate": 1.6, "protein": 0.4, "fat": 0.1, "vit_c": 3.0,
                    "thiamin": 1.0, "vit_b6": 1.5, "folate": 0.6, "copper": 1.2,
                    "magnesium": 0.8, "phosphorus": 0.5, "niacin": 0.8, "iron": 0.5,
                    "zinc": 0.4, "calcium": 0.3, "selenium": 0.2, "riboflavin": 0.3},
    },
    "Salty & fried foods": {
        "items": ["Mandazi"],
        "energy": 380, "perishable": False, "price": 900,
        "profile": {"carbohydrate": 1.2, "protein": 0.6, "fat": 1.2, "thiamin": 0.6,
                    "sodium": 1.5, "iron": 0.5, "niacin": 0.5},
    },
    "Sweets & Confectionary": {
        "items": ["Biscuits", "Brown sugar", "White buns", "White sugar"],
        "energy": 390, "perishable": False, "price": 700,
        "profile": {"carbohydrate": 1.9, "protein": 0.2, "fat": 0.4, "vit_a": 0.6,
                    "sodium": 1.0, "thiamin": 0.3},
    },
    "Stimulants, Spices, & Condiments": {
        "items": ["Salt"],
        "energy": 1, "perishable": False, "price": 250,
        "profile": {"sodium": 2000.0},
    },
    "Caloric beverages": {
        "items": ["Coca-cola"],
        "energy": 42, "perishable": False, "price": 800,
        "profile": {"carbohydrate": 2.3, "sodium": 0.3},
    },
}

SEASONALITY_EXCLUDED_GROUPS = (
    "Salty & fried foods", "Sweets & Confectionary",
    "Stimulants, Spices, & Condiments", "Caloric beverages",
)
