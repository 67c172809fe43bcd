import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlpca_validation.datagen import (DataError, GeneratorConfig, MaskedDataset, generate,
                                      helix_curve, mask_one_of_d, mask_path_for, quadratic_truth,
                                      read_csv, write_csv, zscore)


def test_helix_points():
    np.testing.assert_allclose(helix_curve(0.0), [0.0, 1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(helix_curve(0.5), [1.0, 0.0, 0.5], atol=1e-15)


def test_noise_free_helix_lies_on_cylinder():
    data, t = generate(GeneratorConfig("helix", 500, 0.0, seed=3))
    x = data.values
    np.testing.assert_allclose(x[:, 0] ** 2 + x[:, 1] ** 2, 1.0, atol=1e-12)
    assert np.all(np.abs(x[:, 2]) <= 0.8)
    np.testing.assert_array_equal(x[:, 2], t)


@pytest.mark.parametrize("family,dim", [("helix", 3), ("quadratic", 2), ("gauss2d", 2)])
def test_shapes_and_determinism(family, dim):
    cfg = GeneratorConfig(family, 37, 0.4, seed=11)
    a, _ = generate(cfg)
    b, _ = generate(cfg)
    assert a.values.shape == (37, dim)
    assert a.fully_observed
    assert a.values.tobytes() == b.values.tobytes()


def test_gauss2d_moments():
    data, t = generate(GeneratorConfig("gauss2d", 10_000, 1.0, seed=0))
    assert t is None
    assert np.all(np.abs(data.values.mean(axis=0)) < 0.05)
    assert np.all(np.abs(data.values.var(axis=0) - 1.0) < 0.05)


def test_quadratic_truth():
    np.testing.assert_array_equal(quadratic_truth(0.0), [0.0, 0.0])
    t = np.linspace(0, 1, 11)
    a, b = quadratic_truth(t), quadratic_truth(-t)
    np.testing.assert_array_equal(a[:, 0], -b[:, 0])
    np.testing.assert_array_equal(a[:, 1], b[:, 1])


def test_on_curve_quadratic_samples_project_to_zero():
    data, _ = generate(GeneratorConfig("quadratic", 50, 0.0, seed=1))
    grid = quadratic_truth(np.linspace(-1, 1, 10_000))
    # dense-grid projection, refined by the exact local minimum
    d = ((data.values[:, None, :] - grid[None]) ** 2).sum(axis=2)
    nearest = np.argmin(d, axis=1)
    assert np.max(np.sqrt(d[np.arange(50), nearest])) < 2e-4
    x1 = data.values[:, 0]
    np.testing.assert_allclose(quadratic_truth(x1), data.values, atol=1e-10)


def test_config_validation():
    with pytest.raises(ValueError):
        GeneratorConfig("torus", 10, 0.1)
    with pytest.raises(ValueError):
        GeneratorConfig("helix", 0, 0.1)
    with pytest.raises(ValueError):
        GeneratorConfig("helix", 10, -1.0)
    with pytest.raises(ValueError):
        GeneratorConfig("helix", 10, 0.1, t_range=(1.0, 1.0))


def test_mask_one_of_d_contract():
    data, _ = generate(GeneratorConfig("helix", 1000, 0.4, seed=2))
    masked = mask_one_of_d(data, seed=9)
    assert np.all(masked.mask.sum(axis=1) == 2)
    assert masked.values.tobytes() == data.values.tobytes()
    np.testing.assert_array_equal(masked.ground_truth, data.values)
    again = mask_one_of_d(data, seed=9)
    np.testing.assert_array_equal(masked.mask, again.mask)


def test_mask_coordinate_frequencies():
    data = MaskedDataset.complete(np.zeros((10_000, 3)))
    freq = (~mask_one_of_d(data, seed=4).mask).mean(axis=0)
    assert np.all(np.abs(freq - 1 / 3) < 0.03)


def test_mask_needs_two_dims():
    with pytest.raises(DataError):
        mask_one_of_d(MaskedDataset.complete(np.zeros((3, 1))), seed=0)


def test_empty_rows_are_rejected():
    with pytest.raises(DataError, match="no observed"):
        MaskedDataset(np.zeros((2, 2)), [[True, False], [False, False]])


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 30))
def test_csv_roundtrip(tmp_path_factory, seed, n):
    path = tmp_path_factory.mktemp("csv") / "data.csv"
    data, _ = generate(GeneratorConfig("helix", n, 0.4, seed=seed))
    masked = mask_one_of_d(data, seed)
    write_csv(masked, path)
    back = read_csv(path)
    np.testing.assert_array_equal(back.mask, masked.mask)
    np.testing.assert_array_equal(back.values[back.mask], masked.values[masked.mask])


def test_csv_is_byte_identical_on_rewrite(tmp_path):
    data, _ = generate(GeneratorConfig("gauss2d", 20, 1.0, seed=2))
    write_csv(data, tmp_path / "a.csv")
    write_csv(data, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert mask_path_for(tmp_path / "a.csv").name == "a.mask.csv"


def test_nan_cells_mark_missing(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x1,x2\n1.0,nan\n,3.0\n")
    # empty cell is not numeric
    with pytest.raises(DataError, match=r"d.csv:3"):
        read_csv(path)
    path.write_text("x1,x2\n1.0,nan\n2.0,3.0\n")
    data = read_csv(path)
    np.testing.assert_array_equal(data.mask, [[True, False], [True, True]])


def test_malformed_csv_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2\n1,2\n3\n")
    with pytest.raises(DataError, match=r"bad.csv:3: expected 2 columns"):
        read_csv(path)
    path.write_text("x1,x2\n1,2\n3,abc\n")
    with pytest.raises(DataError, match=r"bad.csv:3: non-numeric"):
        read_csv(path)


def test_sidecar_mask_and_all_missing_row(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x1,x2\n1,2\n3,4\n")
    mask_path_for(path).write_text("x1,x2\n1,0\n0,0\n")
    with pytest.raises(DataError, match="no observed"):
        read_csv(path)


def test_zscore():
    data, _ = generate(GeneratorConfig("helix", 200, 0.4, seed=1))
    scaled, mean, std = zscore(data)
    np.testing.assert_allclose(scaled.values.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(scaled.values.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(scaled.values * std + mean, data.values, atol=1e-12)
