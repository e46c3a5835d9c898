import numpy as np
import pytest
from hypothesis import given, strategies as st

from srk.errors import ValidationError
from srk.storage import (
    StorageFleet, StorageTrajectory, check_storage_cumulative, check_storage_feasible, cumulative_matrix,
    simulate_soc, split_storage_duals,
)


def test_simulate_soc_examples():
    assert np.array_equal(simulate_soc(np.zeros(4)), np.zeros(5))
    assert np.array_equal(simulate_soc([-1, 1]), [0, 1, 0])
    assert np.array_equal(simulate_soc([-1, -1, 2]), [0, 1, 2, 0])


def test_cumulative_matrix():
    L = cumulative_matrix(3)
    assert np.array_equal(L, [[-1, 0, 0], [-1, -1, 0], [-1, -1, -1]])
    assert np.linalg.matrix_rank(L) == 3


def test_feasibility_examples():
    assert check_storage_feasible([-1, 1], 1.0)
    over = check_storage_feasible([-2, 2], 1.0)
    assert not over and over.violations == [(0, 1.0)]
    empty = check_storage_feasible([1, -1], 1.0)
    assert not empty and empty.violations == [(0, -1.0)]


def test_per_period_capacity():
    assert check_storage_feasible([-1, 0], [1.0, 1.0])
    assert not check_storage_feasible([-1, 0], [1.0, 0.5])


def test_fleet_validation():
    fleet = StorageFleet([0.0, 2.0, 0.0, 1.0])
    assert fleet.nodes == [1, 3]
    assert np.array_equal(fleet.initial_soc, np.zeros(4))
    with pytest.raises(ValidationError):
        StorageFleet([1.0, -0.1])
    with pytest.raises(ValidationError):
        StorageFleet([np.inf])


def test_trajectory():
    tr = StorageTrajectory.from_extraction([-0.5, -0.5, 1.0])
    assert np.allclose(tr.z, [0, 0.5, 1.0, 0])


profiles = st.lists(st.floats(-3, 3), min_size=1, max_size=8)


@given(profiles, st.floats(0, 5))
def test_matrix_and_running_sum_forms_agree(u, b):
    assert bool(check_storage_feasible(u, b)) == check_storage_cumulative(u, b)


@given(st.integers(1, 8), st.floats(0, 5))
def test_origin_is_feasible(N, b):
    assert check_storage_feasible(np.zeros(N), b)


@given(profiles)
def test_terminal_state(u):
    L = cumulative_matrix(len(u))
    z = simulate_soc(u)
    assert z[-1] == pytest.approx((L @ np.asarray(u))[-1], abs=1e-12)
    assert np.allclose(z[1:], L @ np.asarray(u), atol=1e-12)


@given(profiles)
def test_split_duals_reproduce_price(price):
    up, lo = split_storage_duals(price)
    L = cumulative_matrix(len(price))
    assert np.all(up >= 0) and np.all(lo >= 0)
    assert np.allclose(L.T @ (up - lo), price, atol=1e-12)
