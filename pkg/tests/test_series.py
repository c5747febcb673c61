import numpy as np
import pytest

from thermalkit.errors import InvalidParameterError
from thermalkit.series import (TimeSeries, mean_over_realizations,
                               validate_time_grid)


def make_series(values, realization=0):
    values = np.asarray(values, dtype=np.float64)
    return TimeSeries("Fk", 8, 2, 1, "example",
                      np.arange(values.size, dtype=np.int64), values,
                      realization)


def test_validate_time_grid_accepts_increasing_ints():
    grid = validate_time_grid([0, 1, 5, 9])
    assert grid.dtype == np.int64
    assert np.array_equal(grid, [0, 1, 5, 9])


@pytest.mark.parametrize("bad", [[1, 1, 2], [3, 2], [-1, 0], []])
def test_validate_time_grid_rejects_bad_grids(bad):
    with pytest.raises(InvalidParameterError):
        validate_time_grid(bad)


def test_time_series_key_groups_by_everything_but_realization():
    a = make_series([1.0, 2.0], realization=0)
    b = make_series([3.0, 4.0], realization=1)
    assert a.key() == b.key()


def test_time_series_rejects_length_mismatch():
    with pytest.raises(InvalidParameterError):
        TimeSeries("Fk", 8, 2, 1, "x", np.array([0, 1], dtype=np.int64),
                   np.zeros(3))


def test_mean_over_realizations_is_exact():
    series = [make_series([1.0, -2.0], 0), make_series([3.0, 6.0], 1)]
    mean = mean_over_realizations(series)
    assert np.array_equal(mean.values, [2.0, 2.0])
    assert mean.realization is None


def test_mean_over_realizations_rejects_mixed_keys():
    a = make_series([1.0, 2.0], 0)
    b = TimeSeries("DeltaK", 8, 2, 1, "example",
                   np.array([0, 1], dtype=np.int64), np.zeros(2), 1)
    with pytest.raises(InvalidParameterError):
        mean_over_realizations([a, b])
