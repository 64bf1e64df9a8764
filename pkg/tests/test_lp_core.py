import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhdiet.catalog import NUTRIENTS
from hhdiet.lp_core import (INFEASIBLE, NUMERICAL, OPTIMAL, VACANT, SolverOptions,
                            build_problem, solve, to_lp_text, verify)

from oracles import vertex_enumeration


def two_item(iron_min=20.0):
    return build_problem(["iron"], np.array([iron_min]), np.array([np.nan]), 2000.0,
                         ["A", "B"], np.array([100.0, 300.0]),
                         np.array([[10.0], [50.0]]), np.array([4000.0, 2000.0]))


def random_problem(rng, n_items=None, n_nutr=None):
    n = n_items or int(rng.integers(1, 5))
    k = n_nutr or int(rng.integers(1, 4))
    comp = rng.uniform(0, 50, (n, k)) * (rng.random((n, k)) < 0.8)
    energy = rng.uniform(500, 4000, n)
    prices = rng.uniform(50, 500, n)
    E = float(rng.uniform(1000, 3000))
    dens = comp / energy[:, None] * E  # nutrient delivered at E by each item alone
    lo = np.where(rng.random(k) < 0.7, rng.uniform(0, 1.2, k) * dens.mean(axis=0), np.nan)
    hi = np.where(rng.random(k) < 0.5, rng.uniform(0.8, 2.0, k) * dens.max(axis=0) + 1, np.nan)
    ids = [f"i{j}" for j in range(n)]
    return build_problem([f"n{j}" for j in range(k)], lo, hi, E, ids, prices, comp, energy)


def oracle(p):
    return vertex_enumeration(p.prices, p.lower_matrix, p.lower, p.upper_matrix, p.upper,
                              p.energy_content, p.energy)


def test_single_item_energy_only():
    p = build_problem([], np.array([]), np.array([]), 2000.0, ["maize"], [100.0],
                      np.zeros((1, 0)), [4000.0])
    s = solve(p)
    assert s.status == OPTIMAL
    assert s.quantities[0] == pytest.approx(0.5, abs=1e-12)
    assert s.cost == pytest.approx(50.0, abs=1e-10)


def test_two_item_iron_vertex():
    # both constraints bind: 4000 qa + 2000 qb = 2000, 10 qa + 50 qb = 20
    s = solve(two_item())
    assert s.status == OPTIMAL
    np.testing.assert_allclose(s.quantities, [1 / 3, 1 / 3], atol=1e-12)
    assert s.cost == pytest.approx(400 / 3, rel=1e-12)
    assert oracle(two_item()) == pytest.approx(400 / 3, rel=1e-12)
    # the point (0.375, 0.25) meets energy but delivers only 16.25 mg of iron
    assert 10 * 0.375 + 50 * 0.25 < 20
    assert s.lower_duals[0] == pytest.approx(50 / 9, rel=1e-9)
    assert s.energy_dual == pytest.approx(1 / 90, rel=1e-9)


def test_two_item_unreachable_iron_is_infeasible():
    s = solve(two_item(200.0))
    assert s.status == INFEASIBLE
    assert s.phase1_value > 1e-3
    assert s.farkas is not None
    assert oracle(two_item(200.0)) is None


def test_empty_menu_is_vacancy():
    p = build_problem(["iron"], [20.0], [np.nan], 2000.0, [], [], np.zeros((0, 1)), [])
    assert solve(p).status == VACANT


def test_missing_nutrient_source_is_infeasible():
    p = build_problem(["vit_a"], [300.0], [np.nan], 2000.0, ["a", "b"], [1.0, 2.0],
                      np.zeros((2, 1)), [3000.0, 3500.0])
    assert solve(p).status == INFEASIBLE


def test_catalog_matrix_shape():
    kinds = [k for _, _, _, k in NUTRIENTS if k != "energy"]
    ids = [i for i, _, _, k in NUTRIENTS if k != "energy"]
    lo = np.array([1.0 if k in ("lower_only", "both") else np.nan for k in kinds])
    hi = np.array([9.0 if k in ("upper_only", "both") else np.nan for k in kinds])
    p = build_problem(ids, lo, hi, 2000.0, list("abcde"), np.ones(5), np.ones((5, len(ids))),
                      np.full(5, 3000.0))
    assert len(p.lower) == 19
    assert len(p.upper) == 14
    assert p.shape == (34, 5)
    assert p.constraint_matrix().shape == (34, 5)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        build_problem([], [], [], 0.0, ["a"], [1.0], np.zeros((1, 0)), [1.0])
    with pytest.raises(ValueError):
        build_problem([], [], [], 10.0, ["a"], [0.0], np.zeros((1, 0)), [1.0])


def test_columns_sorted_by_item_id():
    p = build_problem(["x"], [1.0], [np.nan], 100.0, ["b", "a"], [2.0, 1.0],
                      [[1.0], [2.0]], [10.0, 20.0])
    assert p.item_ids == ("a", "b")
    np.testing.assert_array_equal(p.prices, [1.0, 2.0])


def test_verify_clean_vertex():
    p = two_item()
    s = solve(p)
    rep = verify(p, s)
    assert rep["max_violation"] < 1e-9
    assert rep["dual_objective"] == pytest.approx(s.cost, rel=1e-10)


def test_verify_detects_perturbation():
    p = two_item()
    s = solve(p)
    bumped = type(s)(s.status, s.quantities + np.array([1e-3, 0.0]), s.cost, s.lower_duals,
                     s.upper_duals, s.energy_dual)
    rep = verify(p, bumped)
    assert rep["violations"]["energy"] == pytest.approx(4000 * 1e-3 / 2000, rel=1e-9)


def test_pivot_limit_reported_as_numerical():
    s = solve(two_item(), SolverOptions(max_pivots=1))
    assert s.status == NUMERICAL
    assert s.certificate["reason"] == "pivot limit"


def test_lp_text_dump():
    txt = to_lp_text(two_item())
    assert "min_iron: 10 q_A + 50 q_B >= 20" in txt
    assert "energy: 4000 q_A + 2000 q_B = 2000" in txt


def test_oracle_equivalence_sample():
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        p = random_problem(rng)
        s = solve(p)
        ref = oracle(p)
        if ref is None:
            assert s.status == INFEASIBLE
        else:
            assert s.status == OPTIMAL
            assert s.cost == pytest.approx(ref, rel=1e-8)


def test_bland_from_the_start_agrees():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = random_problem(rng, 4, 3)
        a, b = solve(p), solve(p, SolverOptions(bland_after_degenerate=0))
        assert a.status == b.status
        if a.optimal:
            assert a.cost == pytest.approx(b.cost, rel=1e-9)


def test_degenerate_instance_terminates():
    # many identical items and a redundant pair of rows
    comp = np.ones((6, 2)) * 10.0
    p = build_problem(["x", "y"], [5.0, 5.0], [5.0, np.nan], 1000.0, list("abcdef"),
                      np.ones(6), comp, np.full(6, 2000.0))
    s = solve(p)
    assert s.status == OPTIMAL
    assert s.cost == pytest.approx(0.5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1.01, 3.0))
def test_price_scaling(seed, c):
    p = random_problem(np.random.default_rng(seed))
    a = solve(p)
    b = solve(p.scaled(price_factor=c))
    assert a.status == b.status
    if a.optimal:
        assert b.cost == pytest.approx(c * a.cost, rel=1e-8)
        np.testing.assert_allclose(b.quantities @ p.prices, a.quantities @ p.prices, rtol=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1.0, 1.5), st.floats(0.6, 1.0))
def test_tightening_never_lowers_cost(seed, up, down):
    p = random_problem(np.random.default_rng(seed))
    base = solve(p)
    tight = solve(p.scaled(lower_factor=up, upper_factor=down))
    if tight.optimal:
        assert base.optimal
        assert tight.cost >= base.cost * (1 - 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1.0, 2.0))
def test_price_increase_never_lowers_cost(seed, c):
    rng = np.random.default_rng(seed)
    p = random_problem(rng)
    j = int(rng.integers(p.n_items))
    prices = p.prices.copy()
    prices[j] *= c
    q = type(p)(p.item_ids, prices, p.energy_content, p.lower_ids, p.lower_matrix, p.lower,
                p.upper_ids, p.upper_matrix, p.upper, p.energy)
    a, b = solve(p), solve(q)
    assert a.status == b.status
    if a.optimal:
        assert b.cost >= a.cost * (1 - 1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_strong_duality(seed):
    p = random_problem(np.random.default_rng(seed), n_items=8, n_nutr=6)
    s = solve(p)
    if s.optimal:
        rep = verify(p, s)
        assert rep["dual_objective"] == pytest.approx(s.cost, rel=1e-8)
        assert np.all(s.lower_duals >= -1e-9)
        assert np.all(s.upper_duals <= 1e-9)
