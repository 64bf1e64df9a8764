"""Command line entry point.

    hhdiet synth --out data/ --seed 7
    hhdiet solve --data data/ --out run/ --workers 4
    hhdiet seasonality --data data/ --out run/
    hhdiet afford --data data/ --out run/
    hhdiet report --data data/ --out run/

Settings come from an optional ``key = value`` file (``--config``) with
command-line flags taking precedence. Every run writes the resolved settings
to ``resolved_config.json`` in the output directory.

Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from dataclasses import asdict, fields
from pathlib import Path

import pandas as pd

from . import __version__
from .affordability import access_table, population_summary
from .affordability import write_outputs as write_afford
from .cona import SCENARIOS, PanelConfig, cona_panel, denton_monthly_factors, \
    structural_report
from .data_io import DataValidationError, availability_matrix, load_catalog, write_dataset
from .lp_core import LPInternalError, SolverOptions
from .seasonality import run_seasonality
from .seasonality import write_outputs as write_seasonality
from .synth import SynthParams, synth_generate

log = logging.getLogger("hhdiet")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3

DEFAULTS = {
    "data": None,
    "out": "out",
    "workers": 0,  # 0 = every available core
    "seed": 0,
    "start": "2013-01",
    "end": "2017-07",
    "switch_date": "2016-01",
    "scenario": "both",
    "impute": "on",
    "exclude_vacancy": "off",
    "bootstrap": 0,
    "ppp_orientation": "lcu_per_ppp",
    "feasibility_tol": SolverOptions.feasibility_tol,
    "optimality_tol": SolverOptions.optimality_tol,
    "pivot_tol": SolverOptions.pivot_tol,
    "max_pivots": SolverOptions.max_pivots,
}
SYNTH_KEYS = {f.name for f in fields(SynthParams)}


class ConfigError(ValueError):
    pass


def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value.strip("\"'")
    return out


def _year_month(text: str, name: str) -> tuple[int, int]:
    try:
        y, m = (int(p) for p in str(text).split("-"))
    except ValueError:
        raise ConfigError(f"{name} must look like YYYY-MM, got {text!r}") from None
    if not 1 <= m <= 12:
        raise ConfigError(f"{name} has an invalid month: {text!r}")
    return y, m


def _on_off(text, name: str) -> bool:
    v = str(text).lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"{name} must be on or off, got {text!r}")


def _synth_value(key: str, text: str):
    default = getattr(SynthParams(), key)
    if isinstance(default, bool):
        return _on_off(text, key)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if key == "start" or key == "switch":
        return None if text.lower() == "none" else _year_month(text, key)
    if key == "lean_season_months":
        return tuple(int(v) for v in text.replace(",", " ").split())
    if key == "lean_scarce_groups":
        return tuple(v.strip() for v in text.split(";") if v.strip())
    raise ConfigError(f"synth key {key!r} cannot be set from text")


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags into one validated settings dict."""
    cfg = dict(DEFAULTS)
    synth: dict[str, object] = {}
    if args.config:
        for key, value in read_config(args.config).items():
            if key.startswith("synth."):
                synth[key[6:]] = value
            elif key in DEFAULTS:
                cfg[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    try:
        cfg["workers"] = int(cfg["workers"])
        cfg["seed"] = int(cfg["seed"])
        cfg["bootstrap"] = int(cfg["bootstrap"])
        cfg["max_pivots"] = int(cfg["max_pivots"])
        for k in ("feasibility_tol", "optimality_tol", "pivot_tol"):
            cfg[k] = float(cfg[k])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    start = _year_month(cfg["start"], "start")
    end = _year_month(cfg["end"], "end")
    if start > end:
        raise ConfigError("start is after end")
    sw = cfg["switch_date"]
    if sw is not None and str(sw).lower() != "none":
        _year_month(sw, "switch_date")
    if cfg["scenario"] not in ("individualized", "shared", "both"):
        raise ConfigError("scenario must be individualized, shared or both")
    cfg["impute"] = "on" if _on_off(cfg["impute"], "impute") else "off"
    cfg["exclude_vacancy"] = "on" if _on_off(cfg["exclude_vacancy"], "exclude_vacancy") \
        else "off"
    if cfg["workers"] < 0:
        raise ConfigError("workers must be >= 0")
    cfg["workers"] = cfg["workers"] or os.cpu_count() or 1
    if min(cfg["feasibility_tol"], cfg["optimality_tol"], cfg["pivot_tol"]) <= 0:
        raise ConfigError("tolerances must be positive")
    if cfg["ppp_orientation"] not in ("lcu_per_ppp", "ppp_per_lcu"):
        raise ConfigError("ppp_orientation must be lcu_per_ppp or ppp_per_lcu")
    unknown = set(synth) - SYNTH_KEYS
    if unknown:
        raise ConfigError(f"unknown synth keys {sorted(unknown)}")
    cfg["synth"] = {k: _synth_value(k, str(v)) for k, v in sorted(synth.items())}
    return cfg


def panel_config(cfg: dict) -> PanelConfig:
    sw = cfg["switch_date"]
    switch = None if sw is None or str(sw).lower() == "none" else _year_month(sw, "switch_date")
    scen = SCENARIOS if cfg["scenario"] == "both" else (cfg["scenario"],)
    solver = SolverOptions(feasibility_tol=cfg["feasibility_tol"],
                           optimality_tol=cfg["optimality_tol"], pivot_tol=cfg["pivot_tol"],
                           max_pivots=cfg["max_pivots"])
    return PanelConfig(_year_month(cfg["start"], "start"), _year_month(cfg["end"], "end"),
                       switch, scen, solver, cfg["ppp_orientation"], cfg["workers"])


def _write_resolved(cfg: dict, out: Path, command: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "version": __version__,
           **{k: v for k, v in cfg.items() if k != "synth"}, "synth": cfg["synth"]}
    (out / "resolved_config.json").write_text(json.dumps(doc, indent=2, sort_keys=True,
                                                          default=list) + "\n")


def _load(cfg: dict):
    if not cfg["data"]:
        raise ConfigError("--data (or data = ... in the config) is required")
    return load_catalog(cfg["data"])


def _csv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")


# -- commands ------------------------------------------------------------------

def cmd_synth(cfg: dict) -> int:
    out = Path(cfg["out"])
    params = SynthParams(**cfg["synth"])
    ds = synth_generate(cfg["seed"], params)
    write_dataset(ds, out)
    _write_resolved(cfg, out, "synth")
    print(f"wrote synthetic dataset to {out} ({len(ds.households)} household records, "
          f"{len(ds.prices)} price rows)")
    return EXIT_OK


def _solve(cfg: dict, ds, out: Path) -> pd.DataFrame:
    pc = panel_config(cfg)
    panel = cona_panel(ds, pc)
    _csv(panel, out / "cona_panel.csv")
    counts = panel.groupby(["scenario", "status"]).size().rename("cells").reset_index()
    _csv(counts, out / "status_counts.csv")
    _csv(structural_report(ds), out / "structural_infeasible.csv")
    _csv(availability_matrix(ds, pc.months()), out / "availability.csv")
    if ds.ppp_annual:
        f = denton_monthly_factors(dict(ds.ppp_annual)).reset_index()
        _csv(f, out / "ppp_factors.csv")
    print(f"{len(panel)} cells written to {out / 'cona_panel.csv'}")
    for r in counts.itertuples(index=False):
        print(f"  {r.scenario:<15} {r.status:<24} {r.cells}")
    return panel


def _panel(cfg: dict, ds, out: Path) -> pd.DataFrame:
    path = out / "cona_panel.csv"
    if path.exists():
        return pd.read_csv(path, dtype={"household_id": str, "record_id": str,
                                        "market_id": str, "failing": str, "note": str},
                           keep_default_na=False, na_values=[""])
    return _solve(cfg, ds, out)


def cmd_solve(cfg: dict) -> int:
    out = Path(cfg["out"])
    ds = _load(cfg)
    _write_resolved(cfg, out, "solve")
    _solve(cfg, ds, out)
    return EXIT_OK


def _seasonality(cfg: dict, ds, out: Path, panel: pd.DataFrame) -> list[str]:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = run_seasonality(panel, ds, impute=cfg["impute"] == "on",
                              exclude_vacancy=cfg["exclude_vacancy"] == "on")
    for w in caught:
        log.warning("%s", w.message)
    write_seasonality(rep, out)
    lines = ["seasonal gaps"]
    for sample, f in rep.fits:
        if sample != "prices":
            lines.append(f"  {f.method:<17} {f.label:<15} {sample:<9} {f.gap:8.2f}")
    for sc, yy, mm in rep.undefined_imputation:
        lines.append(f"  no optimal cell to impute from: {sc} {yy}-{mm:02d}")
    return lines


def cmd_seasonality(cfg: dict) -> int:
    out = Path(cfg["out"])
    ds = _load(cfg)
    _write_resolved(cfg, out, "seasonality")
    print("\n".join(_seasonality(cfg, ds, out, _panel(cfg, ds, out))))
    return EXIT_OK


def _afford(cfg: dict, ds, out: Path, panel: pd.DataFrame) -> list[str]:
    pc = panel_config(cfg)
    access = access_table(ds, panel, pc.switch)
    summary = population_summary(access, bootstrap=cfg["bootstrap"], seed=cfg["seed"])
    write_afford(access, summary, out)
    lines = ["population summary (all periods)"]
    for r in summary[summary["period"] == "all"].itertuples(index=False):
        lines.append(f"  {r.scenario:<22} {r.statistic:<28} {r.value:12.4f}")
    return lines


def cmd_afford(cfg: dict) -> int:
    out = Path(cfg["out"])
    ds = _load(cfg)
    _write_resolved(cfg, out, "afford")
    print("\n".join(_afford(cfg, ds, out, _panel(cfg, ds, out))))
    return EXIT_OK


def cmd_report(cfg: dict) -> int:
    out = Path(cfg["out"])
    ds = _load(cfg)
    _write_resolved(cfg, out, "report")
    panel = _solve(cfg, ds, out)
    lines = _seasonality(cfg, ds, out, panel) + [""] + _afford(cfg, ds, out, panel)
    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "solve": cmd_solve, "seasonality": cmd_seasonality,
            "afford": cmd_afford, "report": cmd_report}

HELP = {
    "synth": "write a synthetic dataset",
    "solve": "solve the household cost panel",
    "seasonality": "estimate seasonal factors and gaps",
    "afford": "classify survey households by affordability",
    "report": "run solve, seasonality and afford, then write report.txt",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hhdiet", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--data", help="dataset directory")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int,
                        help="worker processes for LP solves (0 = all cores)")
    common.add_argument("--seed", type=int, help="seed for synth and bootstrap")
    common.add_argument("--start", help="first month, YYYY-MM")
    common.add_argument("--end", help="last month, YYYY-MM")
    common.add_argument("--switch-date", dest="switch_date",
                        help="month from which the later survey wave applies, or none")
    common.add_argument("--scenario", choices=["individualized", "shared", "both"])
    common.add_argument("--impute", choices=["on", "off"])
    common.add_argument("--bootstrap", type=int, help="cluster bootstrap replications")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in HELP.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (LPInternalError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
