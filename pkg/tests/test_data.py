import numpy as np
import pytest

from photonic_qnn.data import CLASS_A, CLASS_B, Dataset, gen_xor, load_iris, shuffle_split_order
from photonic_qnn.errors import IngestionError


def best_linear_accuracy(ds, n_angles=720, random=None):
    """Exhaustive search over directions and thresholds of w . x >= b (both orientations)."""
    x, y = ds.features, ds.labels
    if random is not None:
        angles = random.uniform(0, 2 * np.pi, n_angles)
    else:
        angles = np.linspace(0, 2 * np.pi, n_angles, endpoint=False)
    best = 0.0
    for a in angles:
        proj = x @ np.array([np.cos(a), np.sin(a)])
        order = np.sort(proj)
        cuts = np.concatenate([[order[0] - 1], (order[:-1] + order[1:]) / 2, [order[-1] + 1]])
        pred = proj[None, :] >= cuts[:, None]
        acc = (pred == y[None, :].astype(bool)).mean(axis=1)
        best = max(best, acc.max(), (1 - acc).max())
    return best


def test_xor_degenerate_clusters():
    ds = gen_xor(5, 0.0, seed=0)
    pts = {tuple(p) for p in ds.features}
    assert pts == {(0.25, 0.25), (0.75, 0.75), (0.25, 0.75), (0.75, 0.25)}
    for p, lab in zip(ds.features, ds.labels):
        assert lab == (CLASS_A if p[0] == p[1] else CLASS_B)


@pytest.mark.parametrize("sigma", [0.05, 0.1])
def test_xor_size_and_balance(sigma):
    ds = gen_xor(16, sigma, seed=1)
    assert len(ds) == 64
    assert ds.class_counts() == (32, 32)
    assert ds.features.min() >= 0 and ds.features.max() <= 1


def test_xor_not_linearly_separable():
    ds = gen_xor(16, 0.1, seed=1)
    rng = np.random.default_rng(0)
    # 10^4 random hyperplanes w . x + b with w on the circle and b spanning the square
    w = rng.normal(size=(10**4, 2))
    b = rng.uniform(-2, 2, 10**4)
    pred = (ds.features @ w.T + b) >= 0
    acc = (pred == ds.labels[:, None].astype(bool)).mean(axis=0)
    assert np.maximum(acc, 1 - acc).max() <= 0.75
    assert best_linear_accuracy(ds) <= 0.75


def test_xor_seeded_determinism():
    assert gen_xor(seed=3).to_csv() == gen_xor(seed=3).to_csv()
    assert gen_xor(seed=3).to_csv() != gen_xor(seed=4).to_csv()


def test_xor_argument_checks():
    with pytest.raises(ValueError):
        gen_xor(0)
    with pytest.raises(ValueError):
        gen_xor(4, -0.1)


def test_iris_subset_counts_and_normalization():
    ds = load_iris()
    assert len(ds) == 100
    assert ds.class_counts() == (50, 50)
    np.testing.assert_array_equal(ds.features.max(axis=0), [1.0, 1.0])
    # petal length max 6.9 cm, petal width max 2.5 cm in the public file
    raw_max = np.array([6.9, 2.5])
    assert ds.features[ds.labels == CLASS_A].max(axis=0)[0] == pytest.approx(5.1 / raw_max[0])


def test_iris_nearly_linearly_separable():
    assert best_linear_accuracy(load_iris()) >= 0.9


def test_iris_minmax():
    ds = load_iris(normalization="minmax")
    np.testing.assert_array_equal(ds.features.min(axis=0), [0.0, 0.0])
    np.testing.assert_array_equal(ds.features.max(axis=0), [1.0, 1.0])
    with pytest.raises(ValueError):
        load_iris(normalization="zscore")


def _write(tmp_path, text, name="iris.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_iris_numeric_species_codes(tmp_path):
    rows = ["5.0,3.0,1.4,0.2,0", "6.0,2.9,4.5,1.5,1", "6.3,3.3,6.0,2.5,2", "5.9,3.0,4.2,1.5,1"]
    ds = load_iris(_write(tmp_path, "\n".join(rows) + "\n"))
    assert len(ds) == 3
    assert ds.class_counts() == (2, 1)


def test_iris_malformed_row_reports_row_number(tmp_path):
    text = "a,b,c,d,species\n6.0,2.9,4.5,1.5,Iris-versicolor\n6.3,3.3,oops,2.5,Iris-virginica\n"
    with pytest.raises(IngestionError, match="row 3"):
        load_iris(_write(tmp_path, text))
    with pytest.raises(IngestionError, match="row 2"):
        load_iris(_write(tmp_path, "a,b,c,d,species\n6.0,2.9,4.5\n"))
    with pytest.raises(IngestionError, match="row 2"):
        load_iris(_write(tmp_path, "a,b,c,d,species\n6.0,2.9,4.5,1.5,Iris-unknown\n"))


def test_iris_missing_class(tmp_path):
    text = "6.0,2.9,4.5,1.5,Iris-versicolor\n5.9,3.0,4.2,1.5,Iris-versicolor\n"
    with pytest.raises(IngestionError, match="virginica"):
        load_iris(_write(tmp_path, text))


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[0.1, 1.2]]), np.array([0]))
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        Dataset(np.array([[0.1, 0.2]]), np.array([2]))
    with pytest.raises(ValueError):
        Dataset(np.array([[0.1, 0.2, 0.3]]), np.array([0]))


def test_dataset_is_immutable():
    ds = gen_xor(2)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 0.5


def test_csv_round_trip_is_exact(tmp_path):
    ds = gen_xor(8, 0.1, seed=5)
    p = tmp_path / "xor.csv"
    ds.to_csv(p)
    back = Dataset.from_csv(p)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert back.to_csv() == p.read_text()


def test_from_csv_errors(tmp_path):
    with pytest.raises(IngestionError, match="row 1"):
        Dataset.from_csv(_write(tmp_path, "a,b,c\n0.1,0.2,0\n", "d.csv"))
    with pytest.raises(IngestionError, match="row 3"):
        Dataset.from_csv(_write(tmp_path, "x0,x1,label\n0.1,0.2,0\n0.1,zz,1\n", "d.csv"))
    with pytest.raises(IngestionError, match="row 2"):
        Dataset.from_csv(_write(tmp_path, "x0,x1,label\n0.1,0.2\n", "d.csv"))


def test_shuffle_order():
    a = shuffle_split_order(64, 7)
    assert np.array_equal(a, shuffle_split_order(gen_xor(), 7))
    assert sorted(a) == list(range(64))
    for s1, s2 in ((0, 1), (7, 8), (123, 124)):
        assert not np.array_equal(shuffle_split_order(64, s1), shuffle_split_order(64, s2))
