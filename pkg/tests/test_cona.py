import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from hhdiet.cona import (EMPTY, INDIVIDUALIZED, SHARED, STRUCTURAL, MenuBook, PanelConfig,
                         RowSolver, active_record, add_ppp, cona_panel, denton_monthly_factors,
                         individualized_cona, shared_cona, to_ppp)
from hhdiet.data_io import HouseholdRecord, MemberRecord, load_catalog
from hhdiet.lp_core import OPTIMAL, VACANT
from hhdiet.requirements import RequirementTable, household_requirement
from hhdiet.synth import SynthParams, synth_generate

from oracles import denton_nullspace


def roughness(x):
    x = np.asarray(x, float)
    return float(np.sum((x[1:] / x[:-1] - 1.0) ** 2))


def level_roughness(x, annual):
    x = np.asarray(x, float)
    return float(np.sum((np.diff(x) / np.repeat(annual, 12)[:-1]) ** 2))


# -- Denton -----------------------------------------------------------------

def test_denton_constant_input():
    f = denton_monthly_factors({2013: 80.0, 2014: 80.0})
    assert len(f) == 24
    np.testing.assert_allclose(f.to_numpy(), 80.0, rtol=1e-12)


def test_denton_single_year():
    f = denton_monthly_factors({2015: 250.0})
    np.testing.assert_allclose(f.to_numpy(), 250.0, rtol=1e-12)


def test_denton_two_years_against_oracle():
    f = denton_monthly_factors({2013: 100.0, 2014: 112.0}).to_numpy()
    np.testing.assert_allclose(f, denton_nullspace([100.0, 112.0]), rtol=1e-8)
    assert np.all(np.diff(f) > 0)
    steps = np.diff(f)
    assert steps[11] <= steps.max() + 1e-12
    assert f[:12].mean() == pytest.approx(100.0, rel=1e-9)
    assert f[12:].mean() == pytest.approx(112.0, rel=1e-9)


def test_denton_rejects_bad_input():
    for bad in ({}, {2013: 0.0}, {2013: 1.0, 2015: 2.0}, {2013: -4.0}):
        with pytest.raises(ValueError):
            denton_monthly_factors(bad)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(10.0, 1000.0), min_size=2, max_size=6))
def test_denton_benchmarks_and_smoothness(annual):
    years = {2010 + i: a for i, a in enumerate(annual)}
    f = denton_monthly_factors(years)
    means = f.groupby(level="year").mean()
    for y, a in years.items():
        assert means[y] == pytest.approx(a, rel=1e-9)
    assert (f > 0).all()
    np.testing.assert_allclose(f.to_numpy(), denton_nullspace(annual), rtol=1e-7)
    step = np.repeat(annual, 12)
    if np.ptp(annual) > 1e-9 * max(annual):
        assert level_roughness(f, annual) < level_roughness(step, annual)


@settings(max_examples=50, deadline=None)
@given(st.floats(50.0, 500.0), st.lists(st.floats(0.7, 1.4), min_size=1, max_size=5))
def test_denton_smoother_than_steps_for_moderate_changes(start, growth):
    annual = list(start * np.cumprod([1.0] + growth))
    f = denton_monthly_factors({2010 + i: a for i, a in enumerate(annual)})
    if np.ptp(annual) > 1e-6 * max(annual):
        assert roughness(f) < roughness(np.repeat(annual, 12))


# -- PPP ----------------------------------------------------------------------

def test_to_ppp():
    assert to_ppp(716.0, 100.0) == pytest.approx(7.16)
    assert to_ppp(None, 100.0) is None
    a = to_ppp(716.0, 100.0)
    b = to_ppp(716.0, 1 / 100.0, "ppp_per_lcu")
    assert a == pytest.approx(b, rel=1e-15)
    with pytest.raises(ValueError):
        to_ppp(1.0, 1.0, "sideways")


def test_add_ppp_identities():
    ds = synth_generate(3, SynthParams(n_markets=2, n_items=15, n_households=4, months=14))
    panel = cona_panel(ds, PanelConfig(start=(2013, 1), end=(2014, 2), switch=None))
    ok = panel["status"] == OPTIMAL
    assert panel.loc[ok, ["cost_ppp", "per_capita", "per_1000kcal"]].notna().all().all()
    assert panel.loc[~ok, ["cost_nominal", "cost_ppp", "per_1000kcal"]].isna().all().all()
    sub = panel[ok]
    np.testing.assert_allclose(sub["per_1000kcal"] * sub["energy_kcal"] / 1000, sub["cost_ppp"],
                               rtol=1e-9)
    f = denton_monthly_factors(dict(ds.ppp_annual))
    fac = f.loc[list(zip(sub["year"], sub["month"]))].to_numpy()
    np.testing.assert_allclose(sub["cost_ppp"], sub["cost_nominal"] / fac, rtol=1e-12)
    flipped = add_ppp(panel, ds, "ppp_per_lcu")
    np.testing.assert_allclose(flipped.loc[ok, "cost_ppp"], sub["cost_nominal"] * fac, rtol=1e-12)


def test_add_ppp_missing_month():
    ds = synth_generate(3, SynthParams(n_markets=2, n_items=15, n_households=2, months=12))
    panel = cona_panel(ds, PanelConfig(start=(2013, 1), end=(2013, 2), switch=None))
    panel.loc[0, "year"] = 1999
    with pytest.raises(ValueError, match="PPP"):
        add_ppp(panel, ds)


# -- cells on the toy dataset -----------------------------------------------

@pytest.fixture
def toy(toy_dir):
    ds = load_catalog(toy_dir)
    return ds, MenuBook(ds), RequirementTable.from_dataset(ds)


def cell(toy, hid, fn, month=1):
    ds, book, table = toy
    h = next(x for x in ds.households if x.household_id == hid)
    key = (ds.market_for(h), 2014, month)
    return fn(household_requirement(h, table), book.menu(*key), key,
              RowSolver(book.nutrient_ids))


def test_single_adult_shared_equals_individualized(toy):
    a = cell(toy, "H3", individualized_cona)
    b = cell(toy, "H3", shared_cona)
    assert a.status == b.status == OPTIMAL
    assert b.cost_nominal == pytest.approx(a.cost_nominal, rel=1e-9)


def test_individualized_is_sum_of_members(toy):
    res = cell(toy, "H2", individualized_cona)
    assert res.status == OPTIMAL
    assert set(res.member_costs) == {"H2-P1", "H2-P2", "H2-P3"}
    assert res.cost_nominal == pytest.approx(sum(res.member_costs.values()), rel=1e-12)


def test_partial_member_scales_cost(toy):
    full = cell(toy, "H1", individualized_cona)
    half = cell(toy, "H4", individualized_cona)
    solo = cell(toy, "H3", individualized_cona)  # same market as H1
    assert full.member_costs["H1-P2"] == pytest.approx(solo.cost_nominal, rel=1e-12)
    assert "H4-P2" not in half.member_costs  # infant under six months
    ds, book, table = toy
    adult_m = table.rows["Adult (M) 31-50 y"]
    whole = RowSolver(book.nutrient_ids).solve(adult_m, ("M2", 2014, 1), book.menu("M2", 2014, 1))
    assert half.member_costs["H4-P3"] == pytest.approx(0.5 * whole.cost, rel=1e-12)
    assert half.energy_kcal == pytest.approx(2200 + 0.5 * 2700)


def test_shared_never_cheaper_on_toy(toy):
    for hid in ("H1", "H2", "H3", "H4"):
        a = cell(toy, hid, individualized_cona)
        b = cell(toy, hid, shared_cona)
        if b.status == OPTIMAL:
            assert a.status == OPTIMAL
            assert b.cost_nominal >= a.cost_nominal * (1 - 1e-9)


def test_vacant_month(toy):
    assert cell(toy, "H2", individualized_cona, month=2).status == VACANT
    assert cell(toy, "H2", shared_cona, month=2).status == VACANT


def test_infeasible_member_is_listed(toy_dir):
    req = (toy_dir / "requirements.csv").read_text().replace(
        "Child (F) 4-8 y,1400,4.1,40,275", "Child (F) 4-8 y,1400,4.1,40,20000")
    (toy_dir / "requirements.csv").write_text(req)
    ds = load_catalog(toy_dir)
    book, table = MenuBook(ds), RequirementTable.from_dataset(ds)
    h = next(x for x in ds.households if x.household_id == "H2")
    key = (ds.market_for(h), 2014, 1)
    res = individualized_cona(household_requirement(h, table), book.menu(*key), key,
                              RowSolver(book.nutrient_ids))
    assert res.status == "infeasible"
    assert res.failing == ("H2-P2",)
    assert res.cost_nominal is None


def test_structural_infeasibility_skips_lp(toy_dir):
    # the child tolerates far less iron per kcal than the adult needs
    req = (toy_dir / "requirements.csv").read_text().replace(
        "Child (F) 4-8 y,1400,4.1,40", "Child (F) 4-8 y,1400,4.1,4.2")
    (toy_dir / "requirements.csv").write_text(req)
    ds = load_catalog(toy_dir)
    book, table = MenuBook(ds), RequirementTable.from_dataset(ds)
    h = next(x for x in ds.households if x.household_id == "H2")
    key = (ds.market_for(h), 2014, 1)
    res = shared_cona(household_requirement(h, table), book.menu(*key), key,
                      RowSolver(book.nutrient_ids))
    assert res.status == STRUCTURAL
    assert "iron" in res.failing


def test_addon_only_household(toy_dir):
    mem = (toy_dir / "members.csv").read_text() + "H5,H5-P1,20,M,0,1\n"
    hh = (toy_dir / "households.csv").read_text() + "H5,D1,2014,1,40,60,1.0\n"
    (toy_dir / "members.csv").write_text(mem)
    (toy_dir / "households.csv").write_text(hh)
    ds = load_catalog(toy_dir)
    book, table = MenuBook(ds), RequirementTable.from_dataset(ds)
    h = next(x for x in ds.households if x.household_id == "H5")
    key = (ds.market_for(h), 2014, 1)
    hreq = household_requirement(h, table)
    a = individualized_cona(hreq, book.menu(*key), key, RowSolver(book.nutrient_ids))
    b = shared_cona(hreq, book.menu(*key), key, RowSolver(book.nutrient_ids))
    assert b.note == "addon_only"
    assert b.cost_nominal == pytest.approx(a.cost_nominal, rel=1e-12)


def test_empty_household(toy_dir):
    mem = (toy_dir / "members.csv").read_text() + "H5,H5-P1,2,M,0,1\n"
    hh = (toy_dir / "households.csv").read_text() + "H5,D1,2014,1,40,60,1.0\n"
    (toy_dir / "members.csv").write_text(mem)
    (toy_dir / "households.csv").write_text(hh)
    ds = load_catalog(toy_dir)
    panel = cona_panel(ds, PanelConfig(start=(2014, 1), end=(2014, 3), switch=None))
    assert (panel.loc[panel["household_id"] == "H5", "status"] == EMPTY).all()


# -- panel --------------------------------------------------------------------

def test_toy_panel_shape_and_vacancy(toy_dir):
    ds = load_catalog(toy_dir)
    panel = cona_panel(ds, PanelConfig(start=(2014, 1), end=(2014, 3), switch=None))
    assert len(panel) == 4 * 2 * 3
    m2_feb = panel[(panel["market_id"] == "M2") & (panel["month"] == 2)]
    assert set(m2_feb["household_id"]) == {"H2", "H4"}
    assert (m2_feb["status"] == VACANT).all()
    assert list(panel.columns[:10]) == ["household_id", "market_id", "year", "month", "scenario",
                                        "status", "cost_nominal", "record_id", "energy_kcal",
                                        "n_eating"]


def test_full_horizon_has_55_cells_per_household():
    p = SynthParams(n_markets=2, n_items=12, n_households=3, months=55)
    ds = synth_generate(8, p)
    panel = cona_panel(ds, PanelConfig())
    counts = panel.groupby(["household_id", "scenario"]).size()
    assert (counts == 55).all()
    assert len(panel) == 3 * 2 * 55
    # the second wave drives months from the switch on
    rec = panel.drop_duplicates(["household_id", "year", "month"])
    before = rec[rec["year"] < 2016]["record_id"].str.endswith("-1").all()
    after = rec[rec["year"] >= 2016]["record_id"].str.endswith("-2").all()
    assert before and after


def test_single_wave_horizon():
    ds = synth_generate(8, SynthParams(n_markets=2, n_items=12, n_households=3, months=12))
    panel = cona_panel(ds, PanelConfig(start=(2013, 1), end=(2013, 12), switch=None))
    assert (panel.groupby(["household_id", "scenario"]).size() == 12).all()


def test_active_record_switch():
    def rec(hid, y, m):
        return HouseholdRecord(hid, "D", y, m, 1.0, 1.0, 1.0,
                               (MemberRecord("p", 300, "F", False, 1.0),), panel_id="U")
    w1, w2 = rec("U-1", 2013, 6), rec("U-2", 2016, 8)
    assert active_record([w2, w1], 2015, 12, (2016, 1)) is w1
    assert active_record([w2, w1], 2016, 1, (2016, 1)) is w2
    assert active_record([w2, w1], 2017, 1, None) is w1
    assert active_record([w1], 2017, 1, (2016, 1)) is w1


def test_panel_independent_of_workers():
    ds = synth_generate(4, SynthParams(n_markets=3, n_items=12, n_households=6, months=8))
    cfg = dict(start=(2013, 1), end=(2013, 8), switch=None)
    a = cona_panel(ds, PanelConfig(workers=1, **cfg))
    b = cona_panel(ds, PanelConfig(workers=2, **cfg))
    pd.testing.assert_frame_equal(a, b)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10_000))
def test_panel_feasibility_nesting(seed):
    p = SynthParams(n_markets=2, n_items=14, n_households=6, months=6, missingness_rate=0.3,
                    mixed_household_rate=0.5)
    ds = synth_generate(seed, p)
    panel = cona_panel(ds, PanelConfig(start=(2013, 1), end=(2013, 6), switch=None))
    assert len(panel) == 6 * 2 * 6
    wide = panel.pivot_table(index=["household_id", "year", "month"], columns="scenario",
                             values="cost_nominal", aggfunc="first", dropna=False)
    st_ = panel.pivot(index=["household_id", "year", "month"], columns="scenario", values="status")
    shared_ok = st_[SHARED] == OPTIMAL
    assert (st_.loc[shared_ok, INDIVIDUALIZED] == OPTIMAL).all()
    both = shared_ok & (st_[INDIVIDUALIZED] == OPTIMAL)
    w = wide[both.reindex(wide.index, fill_value=False)]
    assert (w[SHARED] >= w[INDIVIDUALIZED] * (1 - 1e-9)).all()
