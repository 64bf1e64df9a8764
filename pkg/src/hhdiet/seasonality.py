"""Seasonal factors and gaps for diet costs, diet feasibility and food prices.

Three estimators share one differenced design:

* stochastic-trend dummy model: first differences of a log series (with
  gaps allowed) on a drift and differenced month indicators;
* trigonometric model: the same differences on differenced cos/sin terms,
  giving ``S_m = lambda * cos(m*pi/6 - omega)``;
* linear probability model for feasibility on month and market indicators.

Factors and gaps are reported in log-points x 100 (costs, prices) or
percentage points (feasibility). Standard errors are cluster-robust (CR1).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from .catalog import SEASONALITY_EXCLUDED_GROUPS
from .data_io import Dataset

MONTHS = np.arange(1, 13)
OMITTED_MONTH = 12
_ANGLE = MONTHS * np.pi / 6.0

STOCHASTIC_DUMMY = "stochastic_dummy"
TRIGONOMETRIC = "trigonometric"
FEASIBILITY_LPM = "feasibility_lpm"

# statuses that never carry a cost and are left out of seasonality work
NOT_APPLICABLE = ("empty_household",)
VACANCY = "infeasible_by_vacancy"


# -- differencing ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Differenced:
    """Differenced observations, one row per usable (later) observation."""

    unit: np.ndarray
    dy: np.ndarray
    gap: np.ndarray  # skipped months k
    month: np.ndarray  # calendar month of the later observation
    prev_month: np.ndarray
    dummies: np.ndarray  # (n, 12) e_month - e_prev_month
    cluster: np.ndarray

    @property
    def n(self) -> int:
        return len(self.dy)

    @property
    def elapsed(self) -> np.ndarray:
        return self.gap + 1.0

    def trig(self) -> np.ndarray:
        a, b = self.month * np.pi / 6.0, self.prev_month * np.pi / 6.0
        return np.column_stack([np.cos(a) - np.cos(b), np.sin(a) - np.sin(b)])


def difference_with_gaps(frame: pd.DataFrame, unit_col: str = "unit_id",
                         value_col: str = "value", cluster_col: str | None = None
                         ) -> Differenced:
    """Pair each observation with its unit's most recent preceding one.

    ``frame`` needs ``unit_col``, ``year``, ``month`` and ``value_col``. Units
    observed once contribute nothing.
    """
    cols = [unit_col, "year", "month", value_col] + ([cluster_col] if cluster_col else [])
    f = frame[cols].copy()
    if f.duplicated([unit_col, "year", "month"]).any():
        raise ValueError("more than one value per unit and month")
    v = f[value_col].to_numpy(dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("series values must be finite")
    f["_t"] = f["year"].astype(int) * 12 + f["month"].astype(int) - 1
    f = f.sort_values([unit_col, "_t"], kind="mergesort")
    unit = f[unit_col].to_numpy()
    t = f["_t"].to_numpy()
    val = f[value_col].to_numpy(dtype=float)
    same = np.zeros(len(f), dtype=bool)
    same[1:] = unit[1:] == unit[:-1]
    cur = np.flatnonzero(same)
    prev = cur - 1
    month = f["month"].to_numpy(dtype=int)
    dummies = np.zeros((len(cur), 12))
    np.add.at(dummies, (np.arange(len(cur)), month[cur] - 1), 1.0)
    np.add.at(dummies, (np.arange(len(cur)), month[prev] - 1), -1.0)
    cluster = f[cluster_col].to_numpy()[cur] if cluster_col else unit[cur]
    return Differenced(unit[cur], val[cur] - val[prev], (t[cur] - t[prev] - 1).astype(float),
                       month[cur], month[prev], dummies, cluster)


# -- OLS and fit statistics ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FitStats:
    n: int
    k: int
    n_clusters: int
    cov_type: str  # "CR1" or "HC1"
    f_stat: float
    df_num: int
    df_den: int
    p_value: float
    r2: float
    adj_r2: float
    aic_per_obs: float
    bic_per_obs: float
    se: np.ndarray
    cov: np.ndarray


def _robust_cov(X: np.ndarray, resid: np.ndarray, clusters: np.ndarray | None
                ) -> tuple[np.ndarray, str, int]:
    n, k = X.shape
    bread = np.linalg.pinv(X.T @ X)
    groups = None if clusters is None else pd.factorize(clusters, sort=True)[0]
    G = 0 if groups is None else int(groups.max()) + 1
    if G >= 2:
        scores = np.zeros((G, k))
        np.add.at(scores, groups, X * resid[:, None])
        meat = scores.T @ scores
        factor = G / (G - 1) * (n - 1) / (n - k)
        return factor * bread @ meat @ bread, "CR1", G
    warnings.warn("fewer than two clusters; using heteroskedasticity-robust (HC1) errors",
                  RuntimeWarning, stacklevel=3)
    Xu = X * resid[:, None]
    return n / (n - k) * bread @ (Xu.T @ Xu) @ bread, "HC1", G


def fit_stats(y: np.ndarray, design: np.ndarray, coef: np.ndarray,
              clusters: np.ndarray | None = None, test: list[int] | None = None
              ) -> FitStats:
    """Robust covariance, joint Wald F test on ``test`` columns, R2 and AIC/BIC per obs.

    AIC and BIC use the Gaussian log-likelihood with the variance concentrated
    out. The F statistic has ``(q, G - 1)`` degrees of freedom under CR1 and
    ``(q, n - k)`` under the HC1 fallback.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(design, dtype=float)
    n, k = X.shape
    if n <= k:
        raise ValueError("fewer observations than parameters")
    resid = y - X @ coef
    cov, cov_type, G = _robust_cov(X, resid, clusters)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - k) if tss > 0 else 0.0
    sigma2 = max(rss / n, np.finfo(float).tiny)
    loglik = -0.5 * n * (math.log(2 * math.pi) + math.log(sigma2) + 1.0)
    aic = (-2 * loglik + 2 * k) / n
    bic = (-2 * loglik + k * math.log(n)) / n
    test = list(range(k)) if test is None else list(test)
    q = len(test)
    df_den = G - 1 if cov_type == "CR1" else n - k
    f_stat, p = float("nan"), float("nan")
    if q:
        b = coef[test]
        V = cov[np.ix_(test, test)]
        try:
            f_stat = float(b @ np.linalg.solve(V, b)) / q
        except np.linalg.LinAlgError:
            f_stat = float(b @ np.linalg.pinv(V) @ b) / q
        if np.isfinite(f_stat) and df_den > 0:
            p = float(stats.f.sf(f_stat, q, df_den))
    return FitStats(n, k, G, cov_type, f_stat, q, df_den, p, r2, adj, aic, bic, se, cov)


def _ols(y: np.ndarray, X: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


# -- fits ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SeasonalFit:
    method: str
    label: str
    trend: float
    coef: dict[str, float]
    factors: np.ndarray  # 12 values, x100; NaN for months dropped from the design
    se: np.ndarray
    gap: float
    fit: FitStats | None
    levels: np.ndarray | None = None  # feasibility only: percent feasible by month
    dropped_months: tuple[int, ...] = ()
    note: str = ""
    extra: dict[str, float] = field(default_factory=dict)


def seasonal_gap(factors) -> float:
    """Max minus min of twelve seasonal factors (missing months ignored)."""
    f = np.asarray(factors, dtype=float)
    if f.shape != (12,):
        raise ValueError("expected 12 seasonal factors")
    if np.all(np.isnan(f)):
        raise ValueError("no seasonal factor available")
    return float(np.nanmax(f) - np.nanmin(f))


def _demean(delta_full: np.ndarray, cov_full: np.ndarray, keep: np.ndarray
            ) -> tuple[np.ndarray, np.ndarray]:
    """Demean month effects over the identified months and propagate covariance."""
    m = int(keep.sum())
    M = np.zeros((12, 12))
    idx = np.flatnonzero(keep)
    M[np.ix_(idx, idx)] = np.eye(m) - 1.0 / m
    s = M @ np.where(keep, delta_full, 0.0)
    cov = M @ cov_full @ M.T
    s[~keep] = np.nan
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    se[~keep] = np.nan
    return s, se


def fit_stochastic_dummy(diff: Differenced, label: str = "") -> SeasonalFit:
    """Drift plus differenced month dummies, December omitted, demeaned x100."""
    present = np.zeros(12, dtype=bool)
    present[diff.month - 1] = True
    present[diff.prev_month - 1] = True
    if not present.any():
        raise ValueError("no differenced observations")
    ref = OMITTED_MONTH if present[OMITTED_MONTH - 1] else int(MONTHS[present][-1])
    month_cols = [int(m) for m in MONTHS if present[m - 1] and m != ref]
    D = diff.dummies[:, [m - 1 for m in month_cols]]
    used = list(range(len(month_cols)))
    X = np.column_stack([diff.elapsed, D])
    if diff.n <= X.shape[1]:
        raise ValueError("fewer observations than parameters")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("rank-deficient seasonal design")
    coef = _ols(diff.dy, X)
    st = fit_stats(diff.dy, X, coef, diff.cluster, test=list(range(1, X.shape[1])))
    keep = present.copy()
    delta = np.zeros(12)
    cov = np.zeros((12, 12))
    pos = [month_cols[j] - 1 for j in used]
    delta[pos] = coef[1:]
    cov[np.ix_(pos, pos)] = st.cov[1:, 1:]
    dropped = tuple(int(m) for m in MONTHS if not keep[m - 1])
    s, se = _demean(delta, cov, keep)
    factors = 100.0 * s
    names = {f"delta_{month_cols[j]}": float(coef[1 + i]) for i, j in enumerate(used)}
    return SeasonalFit(STOCHASTIC_DUMMY, label, float(coef[0]), {"trend": float(coef[0]), **names},
                       factors, 100.0 * se, seasonal_gap(factors), st, dropped_months=dropped)


def fit_trigonometric(diff: Differenced, label: str = "") -> SeasonalFit:
    """Drift plus differenced cos/sin terms; gap = 2 * lambda (x100)."""
    X = np.column_stack([diff.elapsed, diff.trig()])
    if diff.n <= X.shape[1]:
        raise ValueError("fewer observations than parameters")
    coef = _ols(diff.dy, X)
    st = fit_stats(diff.dy, X, coef, diff.cluster, test=[1, 2])
    alpha, beta = float(coef[1]), float(coef[2])
    lam = math.hypot(alpha, beta)
    omega = math.atan2(beta, alpha)
    basis = np.column_stack([np.cos(_ANGLE), np.sin(_ANGLE)])
    factors = 100.0 * (basis @ coef[1:])
    se = 100.0 * np.sqrt(np.clip(np.einsum("ij,jk,ik->i", basis, st.cov[1:, 1:], basis),
                                 0.0, None))
    peak = (omega * 6.0 / np.pi) % 12.0
    return SeasonalFit(TRIGONOMETRIC, label, float(coef[0]),
                       {"trend": float(coef[0]), "alpha": alpha, "beta": beta},
                       factors, se, 200.0 * lam, st,
                       extra={"lambda": lam, "omega": omega, "peak_month": peak})


def feasibility_lpm(panel: pd.DataFrame, label: str = "", cluster_col: str | None = "cluster_id",
                    exclude_vacancy: bool = False) -> SeasonalFit:
    """OLS of 1{optimal} on month and market indicators.

    ``levels`` holds the predicted percent feasible by month at the sample's
    market mix; ``factors`` are the demeaned month effects in percentage points.
    """
    p = panel[~panel["status"].isin(NOT_APPLICABLE)]
    if exclude_vacancy:
        p = p[p["status"] != VACANCY]
    if p.empty:
        raise ValueError("no cells to fit")
    y = (p["status"] == "optimal").to_numpy(dtype=float)
    month = p["month"].to_numpy(dtype=int)
    present = np.isin(MONTHS, month)
    if np.all(y == y[0]):
        factors = np.where(present, 0.0, np.nan)
        levels = np.where(present, 100.0 * y[0], np.nan)
        return SeasonalFit(FEASIBILITY_LPM, label, float("nan"), {}, factors,
                           np.where(present, 0.0, np.nan), 0.0, None, levels,
                           tuple(int(m) for m in MONTHS if not present[m - 1]),
                           note="degenerate: constant outcome")
    ref = OMITTED_MONTH if present[OMITTED_MONTH - 1] else int(MONTHS[present][-1])
    mcols = [m for m in MONTHS if present[m - 1] and m != ref]
    markets = np.sort(p["market_id"].unique())
    M = (month[:, None] == np.array(mcols)[None, :]).astype(float)
    mk = p["market_id"].to_numpy()
    K = (mk[:, None] == markets[None, 1:]).astype(float)
    X = np.column_stack([np.ones(len(y)), M, K])
    coef = _ols(y, X)
    clusters = p[cluster_col].to_numpy() if cluster_col and cluster_col in p else mk
    st = fit_stats(y, X, coef, clusters, test=list(range(1, 1 + len(mcols))))
    delta = np.zeros(12)
    cov = np.zeros((12, 12))
    pos = [m - 1 for m in mcols]
    delta[pos] = coef[1:1 + len(mcols)]
    cov[np.ix_(pos, pos)] = st.cov[1:1 + len(mcols), 1:1 + len(mcols)]
    s, se = _demean(delta, cov, present)
    base = float(coef[0] + (K @ coef[1 + len(mcols):]).mean())
    levels = np.where(present, 100.0 * (base + delta), np.nan)
    factors = 100.0 * s
    return SeasonalFit(FEASIBILITY_LPM, label, float("nan"),
                       {"intercept": float(coef[0]),
                        **{f"month_{m}": float(c) for m, c in zip(mcols, coef[1:])}},
                       factors, 100.0 * se, seasonal_gap(factors), st, levels,
                       tuple(int(m) for m in MONTHS if not present[m - 1]),
                       extra={"mean_feasible": 100.0 * float(y.mean())})


# -- cost and price panels -------------------------------------------------------

def attach_clusters(panel: pd.DataFrame, ds: Dataset) -> pd.DataFrame:
    """Add ``cluster_id`` to a CoNA panel (falls back to the district)."""
    lookup = {}
    for h in ds.households:
        lookup[h.unit_id] = h.cluster_id or h.district_id
    out = panel.copy()
    out["cluster_id"] = out["household_id"].map(lookup)
    return out


def impute_infeasible(panel: pd.DataFrame, value_col: str = "cost_nominal"
                      ) -> tuple[pd.DataFrame, list[tuple[str, int, int]]]:
    """Give each non-optimal cell its scenario's month-year maximum optimal cost.

    Returns the panel with an ``imputed`` flag, and the (scenario, year, month)
    keys that had no optimal cell to impute from; those cells stay missing.
    """
    out = panel.copy()
    ok = out["status"] == "optimal"
    target = ~ok & ~out["status"].isin(NOT_APPLICABLE)
    key = ["scenario", "year", "month"]
    peak = out[ok].groupby(key)[value_col].max()
    fill = pd.Series(list(zip(out["scenario"], out["year"], out["month"])),
                     index=out.index).map(peak)
    has = fill.notna()
    out["imputed"] = target & has
    out.loc[out["imputed"], value_col] = fill[out["imputed"]]
    missing = out[target & ~has][key].drop_duplicates().sort_values(key)
    undefined = [(str(s), int(y), int(m)) for s, y, m in missing.itertuples(index=False)]
    return out, undefined


def cost_series(panel: pd.DataFrame, scenario: str, imputed: bool = False,
                cluster_col: str = "cluster_id") -> pd.DataFrame:
    """Log nominal household cost by month for one scenario."""
    p = panel[panel["scenario"] == scenario]
    if imputed:
        p = p[(p["status"] == "optimal") | p["imputed"]]
    else:
        p = p[p["status"] == "optimal"]
    p = p[p["cost_nominal"].notna() & (p["cost_nominal"] > 0)]
    cols = {"household_id": "unit_id"}
    out = p.rename(columns=cols)[["unit_id", "year", "month", "cost_nominal"]
                                 + ([cluster_col] if cluster_col in p else [])].copy()
    out["value"] = np.log(out.pop("cost_nominal").to_numpy(dtype=float))
    return out


def price_series(ds: Dataset) -> pd.DataFrame:
    """Log price per kg by item and market, tagged with the food group."""
    p = ds.prices
    out = pd.DataFrame({
        "unit_id": p["item_id"] + "@" + p["market_id"],
        "item_id": p["item_id"], "market_id": p["market_id"],
        "food_group": p["item_id"].map({i: f.food_group for i, f in ds.foods.items()}),
        "year": p["year"], "month": p["month"],
        "value": np.log(p["price_per_kg"].to_numpy(dtype=float)),
    })
    return out.sort_values(["unit_id", "year", "month"]).reset_index(drop=True)


def price_seasonality(ds: Dataset, by: str = "food_group") -> list[SeasonalFit]:
    """Pooled trigonometric fits by food group (or by item), clustered by market."""
    if by not in ("food_group", "item_id"):
        raise ValueError("by must be 'food_group' or 'item_id'")
    series = price_series(ds)
    series = series[~series["food_group"].isin(SEASONALITY_EXCLUDED_GROUPS)]
    fits = []
    for key, g in series.groupby(by, sort=True):
        diff = difference_with_gaps(g, cluster_col="market_id")
        if diff.n <= 3:
            continue
        fits.append(fit_trigonometric(diff, str(key)))
    return fits


# -- orchestration -----------------------------------------------------------------

@dataclass
class SeasonalityReport:
    fits: list[tuple[str, SeasonalFit]]  # (sample, fit)
    undefined_imputation: list[tuple[str, int, int]]
    comparison: pd.DataFrame


def run_seasonality(panel: pd.DataFrame, ds: Dataset | None = None, impute: bool = True,
                    exclude_vacancy: bool = False, prices: bool = True) -> SeasonalityReport:
    """Feasibility LPM, cost factors (feasible and imputed), model comparison, prices."""
    if "cluster_id" not in panel and ds is not None:
        panel = attach_clusters(panel, ds)
    fits: list[tuple[str, SeasonalFit]] = []
    undefined: list[tuple[str, int, int]] = []
    work = panel
    if impute:
        work, undefined = impute_infeasible(panel)
    rows = []
    for scen in sorted(panel["scenario"].unique()):
        sub = work[work["scenario"] == scen]
        fits.append(("all", feasibility_lpm(sub, scen, exclude_vacancy=exclude_vacancy)))
        samples = [("feasible", False)] + ([("imputed", True)] if impute else [])
        for sample, imp in samples:
            series = cost_series(sub, scen, imputed=imp)
            diff = difference_with_gaps(series, cluster_col="cluster_id"
                                        if "cluster_id" in series else None)
            pair = []
            for fn in (fit_stochastic_dummy, fit_trigonometric):
                try:
                    f = fn(diff, scen)
                except ValueError as exc:
                    warnings.warn(f"{fn.__name__} skipped for {scen}/{sample}: {exc}",
                                  RuntimeWarning, stacklevel=2)
                    continue
                fits.append((sample, f))
                pair.append(f)
            if sample == "feasible" and len(pair) == 2:
                best = min(pair, key=lambda f: f.fit.bic_per_obs)
                for f in pair:
                    rows.append({"scenario": scen, "model": f.method,
                                 "bic_per_obs": f.fit.bic_per_obs,
                                 "aic_per_obs": f.fit.aic_per_obs,
                                 "preferred": f is best})
    if prices and ds is not None:
        fits.extend(("prices", f) for f in price_seasonality(ds))
    return SeasonalityReport(fits, undefined, pd.DataFrame(
        rows, columns=["scenario", "model", "bic_per_obs", "aic_per_obs", "preferred"]))


def write_outputs(report: SeasonalityReport, out_dir: str | Path) -> dict[str, Path]:
    """seasonal_factors.csv, seasonal_gaps.csv and fit_stats.csv in long form."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    factors, gaps, fits = [], [], []
    for sample, f in report.fits:
        for m in MONTHS:
            factors.append({"model": f.method, "scenario_or_group": f.label, "sample": sample,
                            "month": int(m), "factor": f.factors[m - 1], "se": f.se[m - 1],
                            "level": None if f.levels is None else f.levels[m - 1]})
        gaps.append({"model": f.method, "scenario_or_group": f.label, "sample": sample,
                     "gap": f.gap, "note": f.note})
        s = f.fit
        fits.append({"model": f.method, "scenario_or_group": f.label, "sample": sample,
                     "n": None if s is None else s.n, "k": None if s is None else s.k,
                     "clusters": None if s is None else s.n_clusters,
                     "cov_type": None if s is None else s.cov_type,
                     "f_stat": None if s is None else s.f_stat,
                     "df_num": None if s is None else s.df_num,
                     "df_den": None if s is None else s.df_den,
                     "p_value": None if s is None else s.p_value,
                     "adj_r2": None if s is None else s.adj_r2,
                     "aic_per_obs": None if s is None else s.aic_per_obs,
                     "bic_per_obs": None if s is None else s.bic_per_obs})
    paths = {
        "seasonal_factors": out / "seasonal_factors.csv",
        "seasonal_gaps": out / "seasonal_gaps.csv",
        "fit_stats": out / "fit_stats.csv",
        "model_comparison": out / "model_comparison.csv",
    }
    fmt = "%.10g"
    pd.DataFrame(factors).to_csv(paths["seasonal_factors"], index=False, float_format=fmt)
    pd.DataFrame(gaps).to_csv(paths["seasonal_gaps"], index=False, float_format=fmt)
    pd.DataFrame(fits).to_csv(paths["fit_stats"], index=False, float_format=fmt)
    report.comparison.to_csv(paths["model_comparison"], index=False, float_format=fmt)
    return paths
