import numpy as np
import pytest

from restore_kit.data import (
    DataError,
    breast_cancer_path,
    load_logistic_dataset,
    prepare_logistic_dataset,
    synthetic_logistic_dataset,
    write_logistic_csv,
)


def test_bundled_breast_cancer_shape():
    ds = load_logistic_dataset(breast_cancer_path())
    assert ds.n == 683 and ds.dim == 10
    assert set(np.unique(ds.responses)) == {-1.0, 1.0}
    assert ds.columns[-1] == "intercept"
    np.testing.assert_array_equal(ds.predictors[:, -1], 1.0)
    np.testing.assert_allclose(ds.predictors[:, :-1].mean(0), 0.0, atol=1e-12)
    np.testing.assert_allclose(ds.predictors[:, :-1].std(0), 0.5, atol=1e-12)


def test_binary_column_scaled_to_unit_range():
    X = np.array([[0.0, 1.0], [1.0, 2.0], [1.0, 5.0], [0.0, 3.0]])
    ds = prepare_logistic_dataset(X, [0, 1, 1, 0])
    assert np.ptp(ds.predictors[:, 0]) == pytest.approx(1.0)
    assert ds.predictors[:, 0].mean() == pytest.approx(0.0)
    np.testing.assert_array_equal(ds.responses, [-1, 1, 1, -1])


def test_constant_column_rejected():
    with pytest.raises(DataError, match="constant"):
        prepare_logistic_dataset(np.ones((5, 1)), [0, 1, 0, 1, 0])


def test_non_binary_response_names_row(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y,a\n1,2\n0,3\n2,4\n")
    with pytest.raises(DataError, match="row 3"):
        load_logistic_dataset(p)


def test_ragged_row_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y,a,b\n1,2,3\n0,3\n")
    with pytest.raises(DataError, match="row 2"):
        load_logistic_dataset(p)


def test_missing_response_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(DataError, match="'y'"):
        load_logistic_dataset(p)


def test_mixed_codings_rejected():
    with pytest.raises(DataError, match="mix"):
        prepare_logistic_dataset(np.array([[1.0], [2.0], [3.0]]), [0, -1, 1])


def test_synthetic_round_trip(tmp_path):
    X, y = synthetic_logistic_dataset(n=50, n_predictors=4, seed=3)
    write_logistic_csv(tmp_path / "s.csv", X, y)
    ds = load_logistic_dataset(tmp_path / "s.csv")
    ref = prepare_logistic_dataset(X, y)
    np.testing.assert_allclose(ds.predictors, ref.predictors)
    np.testing.assert_array_equal(ds.responses, ref.responses)
    assert ds.dim == 5
