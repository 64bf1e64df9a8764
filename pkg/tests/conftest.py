from pathlib import Path

import pytest

TOY = {
    "nutrients.csv": """nutrient_id,name,unit,bound_kind
energy,Energy,kcal,energy
iron,Iron,mg,both
vit_a,Vitamin A,µg,lower_only
sodium,Sodium,mg,upper_only
""",
    "foods.csv": """item_id,name,food_group,energy,iron,vit_a,sodium
beans,Brown beans,Legumes,340,8.0,2,20
fish,Dried fish,Fish & Seafood,300,4.0,50,300
leaves,Pumpkin leaves,Dark Green Leafy Vegetables,30,3.0,400,20
maize,Maize flour,Cereals & Cereal Products,360,2.5,0,5
oil,Cooking oil,Oils & Fats,880,0,0,0
""",
    "market_map.csv": """district_id,market_id
D1,M1
D2,M2
D3,M1
""",
    "households.csv": """household_id,district_id,survey_year,survey_month,food_exp_day,total_exp_day,weight
H1,D1,2014,1,300,450,1.5
H2,D2,2014,3,120,200,2.0
H3,D3,2014,2,90,100,1.0
H4,D2,2014,1,50,80,0.5
""",
    "members.csv": """household_id,person_id,age_months,sex,lactating,meals_share
H1,H1-P1,300,F,0,1
H1,H1-P2,420,M,0,1
H2,H2-P1,300,F,0,1
H2,H2-P2,60,F,0,1
H2,H2-P3,20,M,0,1
H3,H3-P1,420,M,0,1
H4,H4-P1,300,F,0,1
H4,H4-P2,3,F,0,1
H4,H4-P3,420,M,0,0.5
""",
    "requirements.csv": """group_id,energy_kcal,min_iron,max_iron,min_vit_a,max_vit_a,min_sodium,max_sodium
Adult (F) 19-30 y,2200,8.1,45,500,,,2300
Adult (M) 31-50 y,2700,6,45,625,,,2300
Child (F) 4-8 y,1400,4.1,40,275,,,1500
Child (all) 1-2 y,1000,3.0,40,210,,,1200
""",
}


def _prices() -> str:
    base = {"beans": 900, "fish": 3500, "leaves": 700, "maize": 600, "oil": 1400}
    lines = ["market_id,year,month,item_id,price_per_kg"]
    for market, bump in (("M1", 1.0), ("M2", 1.1)):
        for month in (1, 2, 3):
            if market == "M2" and month == 2:
                continue  # vacant market-month
            for item, p in base.items():
                if market == "M1" and month == 3 and item == "leaves":
                    continue
                lines.append(f"{market},2014,{month},{item},{p * bump * (1 + 0.05 * month):.2f}")
    return "\n".join(lines) + "\n"


def write_toy(directory: Path, **overrides: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    files = dict(TOY, **{"prices.csv": _prices()})
    files.update(overrides)
    for name, text in files.items():
        (directory / name).write_text(text, encoding="utf-8")
    return directory


@pytest.fixture
def toy_dir(tmp_path):
    return write_toy(tmp_path / "toy")


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
