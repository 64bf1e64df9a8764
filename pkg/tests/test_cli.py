import json
import subprocess
import sys

import pandas as pd
import pytest

from hhdiet.cli import main

TOY_FLAGS = ["--start", "2014-01", "--end", "2014-03", "--switch-date", "none"]


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())
            if p.suffix in (".csv", ".txt")}


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    cfg = root / "synth.cfg"
    cfg.write_text("# small panel\nsynth.n_markets = 3\nsynth.n_items = 20\n"
                   "synth.n_households = 8\nsynth.months = 24\nsynth.missingness_rate = 0.2\n")
    assert main(["synth", "--config", str(cfg), "--out", str(root / "data"), "--seed", "5"]) == 0
    return root / "data"


def test_synth_writes_dataset(small_data):
    names = {p.name for p in small_data.iterdir()}
    assert {"foods.csv", "prices.csv", "households.csv", "members.csv", "market_map.csv",
            "requirements.csv", "nutrients.csv", "ppp_annual.csv",
            "resolved_config.json"} <= names
    doc = json.loads((small_data / "resolved_config.json").read_text())
    assert doc["command"] == "synth"
    assert doc["synth"]["n_households"] == 8
    assert doc["seed"] == 5
    assert pd.read_csv(small_data / "households.csv")["household_id"].nunique() == 8


def test_solve_toy(toy_dir, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "--data", str(toy_dir), "--out", str(out), *TOY_FLAGS]) == 0
    assert "24 cells written" in capsys.readouterr().out
    panel = pd.read_csv(out / "cona_panel.csv")
    assert len(panel) == 4 * 2 * 3
    assert {"household_id", "market_id", "year", "month", "scenario", "status",
            "cost_nominal", "cost_ppp", "per_capita", "per_1000kcal"} <= set(panel.columns)
    counts = pd.read_csv(out / "status_counts.csv")
    assert counts["cells"].sum() == 24
    for name in ("structural_infeasible.csv", "availability.csv", "resolved_config.json"):
        assert (out / name).exists()


def test_single_scenario(toy_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["solve", "--data", str(toy_dir), "--out", str(out), "--scenario", "shared",
                 *TOY_FLAGS]) == 0
    assert set(pd.read_csv(out / "cona_panel.csv")["scenario"]) == {"shared"}


def test_bad_csv_exits_2(toy_dir, tmp_path, capsys):
    text = (toy_dir / "prices.csv").read_text().splitlines()
    text[3] = ",".join(text[3].split(",")[:-1] + ["-4"])
    (toy_dir / "prices.csv").write_text("\n".join(text) + "\n")
    assert main(["solve", "--data", str(toy_dir), "--out", str(tmp_path / "r"),
                 *TOY_FLAGS]) == 2
    err = capsys.readouterr().err
    assert "prices.csv" in err and "row 3" in err


@pytest.mark.parametrize("flags", [
    ["--start", "2015-01", "--end", "2014-01"],
    ["--start", "2015-13"],
    ["--workers", "-1"],
])
def test_bad_settings_exit_2(toy_dir, tmp_path, flags):
    assert main(["solve", "--data", str(toy_dir), "--out", str(tmp_path / "r"), *flags]) == 2


def test_unknown_config_key_exits_2(toy_dir, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["solve", "--config", str(cfg), "--data", str(toy_dir),
                 "--out", str(tmp_path / "r")]) == 2


def test_missing_data_exits_2(tmp_path):
    assert main(["solve", "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path / "r")]) == 2
    assert main(["solve", "--out", str(tmp_path / "r")]) == 2


def test_runtime_failure_exits_3(small_data, tmp_path, capsys):
    # the synthetic PPP table stops in 2014, so 2019 cannot be converted
    assert main(["solve", "--data", str(small_data), "--out", str(tmp_path / "r"),
                 "--start", "2019-01", "--end", "2019-02", "--switch-date", "none"]) == 3
    assert "PPP" in capsys.readouterr().err


def test_config_file_and_flag_precedence(toy_dir, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"data = {toy_dir}\nstart = 2014-01\nend = 2014-02\nswitch_date = none\n"
                   "impute = off\n")
    out = tmp_path / "r"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--end", "2014-03"]) == 0
    doc = json.loads((out / "resolved_config.json").read_text())
    assert doc["end"] == "2014-03" and doc["start"] == "2014-01" and doc["impute"] == "off"
    assert doc["workers"] >= 1
    assert len(pd.read_csv(out / "cona_panel.csv")) == 24


def test_report_and_determinism(small_data, tmp_path):
    flags = ["--start", "2013-01", "--end", "2014-12", "--switch-date", "none", "--bootstrap", "10"]
    runs = []
    for name, workers in (("a", 1), ("b", 1), ("c", 2)):
        out = tmp_path / name
        assert main(["report", "--data", str(small_data), "--out", str(out),
                     "--workers", str(workers), *flags]) == 0
        runs.append(outputs(out))
    expected = {"cona_panel.csv", "status_counts.csv", "seasonal_factors.csv",
                "seasonal_gaps.csv", "fit_stats.csv", "model_comparison.csv", "access.csv",
                "summary.csv", "report.txt", "availability.csv", "ppp_factors.csv"}
    assert expected <= set(runs[0])
    assert runs[0] == runs[1]
    assert runs[0] == runs[2]
    assert b"seasonal gaps" in runs[0]["report.txt"]


def test_seasonality_and_afford_reuse_panel(small_data, tmp_path):
    out = tmp_path / "run"
    flags = ["--start", "2013-01", "--end", "2014-12", "--switch-date", "none"]
    assert main(["solve", "--data", str(small_data), "--out", str(out), *flags]) == 0
    before = (out / "cona_panel.csv").read_bytes()
    assert main(["seasonality", "--data", str(small_data), "--out", str(out), *flags]) == 0
    assert main(["afford", "--data", str(small_data), "--out", str(out), *flags]) == 0
    assert (out / "cona_panel.csv").read_bytes() == before
    gaps = pd.read_csv(out / "seasonal_gaps.csv")
    assert {"stochastic_dummy", "trigonometric", "feasibility_lpm"} <= set(gaps["model"])
    summary = pd.read_csv(out / "summary.csv")
    assert {"share_food_budget_access", "median_per_capita"} <= set(summary["statistic"])


def test_module_entry_point(toy_dir, tmp_path):
    r = subprocess.run([sys.executable, "-m", "hhdiet", "solve", "--data", str(toy_dir),
                        "--out", str(tmp_path / "r"), *TOY_FLAGS],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "hhdiet", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and "hhdiet" in r.stdout
