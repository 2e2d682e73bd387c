import numpy as np
import pytest

from memdpe import pipeline as pl


@pytest.fixture(scope="module")
def iris(dataset_path):
    return pl.load_dataset("iris", dataset_path("iris"))


def test_load_counts_all_datasets(dataset_path):
    for name, (rows, feats, classes) in pl.DATASET_SPECS.items():
        ds = pl.load_dataset(name, dataset_path(name))
        assert ds.features.shape == (rows, feats)
        assert ds.labels.shape == (rows,)
        assert ds.n_classes == classes
        assert set(np.unique(ds.labels)) == set(range(classes))


def test_load_empty_file(tmp_path):
    p = tmp_path / "iris.csv"
    p.write_text("")
    with pytest.raises(pl.ParseError):
        pl.load_dataset("iris", p)


def test_load_wrong_columns(tmp_path):
    p = tmp_path / "iris.csv"
    p.write_text("a,b,c\n1,2,0\n")
    with pytest.raises(pl.SchemaError):
        pl.load_dataset("iris", p)


def test_load_malformed_row(tmp_path):
    p = tmp_path / "iris.csv"
    p.write_text("a,b,c,d,class\n1,2,3,oops,0\n")
    with pytest.raises(pl.ParseError):
        pl.load_dataset("iris", p)


def test_load_wrong_row_count(tmp_path):
    p = tmp_path / "iris.csv"
    rows = "\n".join("1,2,3,4,0" for _ in range(10))
    p.write_text("a,b,c,d,class\n" + rows + "\n")
    with pytest.raises(pl.SchemaError):
        pl.load_dataset("iris", p)


def test_load_missing_file():
    with pytest.raises(pl.ParseError):
        pl.load_dataset("iris", "/nonexistent/iris.csv")


def test_checksums_match_vendored_files(dataset_path):
    import hashlib
    from importlib import resources
    text = resources.files("memdpe").joinpath(
        "data/datasets/checksums.txt").read_text()
    for line in text.strip().splitlines():
        digest, fname = line.split()
        data = resources.files("memdpe").joinpath(
            f"data/datasets/{fname}").read_bytes()
        assert hashlib.sha256(data).hexdigest() == digest, fname


def test_encode_iris_width_16(iris):
    enc = pl.encode(iris, bins=4, split_seed=0)
    assert enc.width == 16
    assert enc.spikes.shape == (150, 16)


def test_encode_exact_spike_count(dataset_path):
    for name in pl.DATASET_SPECS:
        ds = pl.load_dataset(name, dataset_path(name))
        enc = pl.encode(ds, bins=4, split_seed=1)
        assert np.all(enc.spikes.sum(axis=1) == ds.features.shape[1])


def test_encode_train_min_in_bin0(iris):
    enc = pl.encode(iris, bins=4, split_seed=0)
    tr = iris.features[enc.train_idx]
    j = 0
    i_min = enc.train_idx[np.argmin(tr[:, j])]
    assert enc.spikes[i_min, 0] == 1  # bin 0 of feature 0


def test_encode_split_sizes(iris):
    enc = pl.encode(iris, split_seed=5)
    assert len(enc.train_idx) == 105
    assert len(enc.test_idx) == 45
    assert not set(enc.train_idx) & set(enc.test_idx)


def test_encode_degenerate_feature_warns():
    feats = np.column_stack([np.ones(150), np.linspace(0, 1, 150),
                             np.linspace(1, 2, 150), np.linspace(0, 3, 150)])
    ds = pl.RawDataset("iris", feats, np.zeros(150, dtype=int) , 3)
    with pytest.warns(pl.DegenerateFeature):
        enc = pl.encode(ds, split_seed=0)
    # constant feature always lands in bin 0
    assert np.all(enc.spikes[:, 0] == 1)
    assert np.all(enc.spikes[:, 1:4] == 0)


def test_encode_requires_two_bins(iris):
    with pytest.raises(ValueError):
        pl.encode(iris, bins=1)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(9)
    for _ in range(5):
        n, d, c = 7, 5, 3
        x = rng.integers(0, 2, size=(n, d)).astype(float)
        y = np.eye(c)[rng.integers(0, c, size=n)]
        w = rng.normal(0, 0.5, size=(d, c))
        b = rng.normal(0, 0.2, size=c)
        loss, dw, db = pl.mse_softmax_loss_grad(w, b, x, y)
        h = 1e-5
        for (arr, grad) in ((w, dw), (b, db)):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in range(min(arr.size, 8)):
                idx = it.multi_index
                old = arr[idx]
                arr[idx] = old + h
                lp = pl.mse_softmax_loss_grad(w, b, x, y)[0]
                arr[idx] = old - h
                lm = pl.mse_softmax_loss_grad(w, b, x, y)[0]
                arr[idx] = old
                fd = (lp - lm) / (2 * h)
                assert grad[idx] == pytest.approx(fd, rel=1e-6, abs=1e-12)
                it.iternext()


def test_zero_epochs_returns_initialization(iris):
    enc = pl.encode(iris, split_seed=0)
    model = pl.train(enc, epochs=0, lr=0.05, seed=3)
    rng = np.random.default_rng(3)
    w0 = rng.uniform(-0.1, 0.1, size=(enc.width, enc.n_classes))
    assert np.allclose(model.weights, w0)
    assert np.all(model.bias == 0.0)


def test_train_deterministic(iris):
    enc = pl.encode(iris, split_seed=0)
    a = pl.train(enc, epochs=50, lr=0.05, seed=4)
    b = pl.train(enc, epochs=50, lr=0.05, seed=4)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.bias, b.bias)


def test_train_nonfinite_raises(iris):
    # an infinite learning rate makes the first update non-finite
    enc = pl.encode(iris, split_seed=0)
    with pytest.raises(pl.NonFinite):
        pl.train(enc, epochs=5, lr=float("inf"), seed=0)


def test_train_validates_hyperparameters(iris):
    enc = pl.encode(iris, split_seed=0)
    with pytest.raises(ValueError):
        pl.train(enc, epochs=10, lr=0.0, seed=0)


def test_mapping_endpoints():
    model = pl.TrainedModel(weights=np.array([[-2.0, 0.5], [1.0, 2.0]]),
                            bias=np.array([0.0, 0.1]), lr=0, epochs=0, seed=0)
    cmap = pl.map_to_conductance(model)
    # min weight -> g_low (20k), max weight -> g_high (5k)
    assert cmap.target_resistances[0, 0] == pytest.approx(20e3, rel=1e-12)
    assert cmap.target_resistances[1, 1] == pytest.approx(5e3, rel=1e-12)
    assert np.all(cmap.conductances >= cmap.g_low - 1e-15)
    assert np.all(cmap.conductances <= cmap.g_high + 1e-15)
    assert np.all(cmap.bias_g >= 0)


def test_mapping_uniform_weights_fall_back_to_bias():
    model = pl.TrainedModel(weights=np.full((4, 3), 0.7),
                            bias=np.array([0.3, 0.0, 0.1]), lr=0, epochs=0, seed=0)
    cmap = pl.map_to_conductance(model)
    # all cells at one resistance; column ordering carried by the bias terms
    assert np.all(cmap.target_resistances == cmap.target_resistances[0, 0])
    bits = np.array([1, 0, 1, 0], dtype=np.uint8)
    cur = pl.ideal_column_currents(cmap, bits)
    assert int(np.argmax(cur)) == 0
    assert cmap.bias_g[1] == 0.0


def test_mapping_degenerate_weights():
    model = pl.TrainedModel(weights=np.array([[np.nan, 1.0]]),
                            bias=np.zeros(2), lr=0, epochs=0, seed=0)
    with pytest.raises(pl.DegenerateWeights):
        pl.map_to_conductance(model)


def test_mapping_argmax_exactness():
    """Affine map plus bias offsets preserves the float argmax under ideal
    currents and a fixed spike count (100 random instances)."""
    rng = np.random.default_rng(77)
    for _ in range(100):
        d, c, bins = rng.integers(2, 6), rng.integers(2, 5), 4
        width = d * bins
        w = rng.normal(0, 1.0, size=(width, c))
        b = rng.normal(0, 0.5, size=c)
        model = pl.TrainedModel(weights=w, bias=b, lr=0, epochs=0, seed=0)
        cmap = pl.map_to_conductance(model)
        for _ in range(10):
            bits = np.zeros(width, dtype=np.uint8)
            bits[np.arange(d) * bins + rng.integers(0, bins, size=d)] = 1
            float_scores = bits @ w + b
            cur = pl.ideal_column_currents(cmap, bits)
            assert int(np.argmax(cur)) == int(np.argmax(float_scores))


def test_evaluate_ideal_equals_float(iris):
    enc = pl.encode(iris, split_seed=0)
    model = pl.train(enc, epochs=100, lr=0.05, seed=0)
    cmap = pl.map_to_conductance(model)
    ideal = pl.evaluate_ideal(cmap, enc)
    float_acc = 100 * pl.model_accuracy(model, enc.spikes[enc.test_idx],
                                        enc.labels[enc.test_idx])
    assert ideal == pytest.approx(float_acc, abs=1e-12)


def test_run_classification_deterministic(cfg, iris):
    a, *_ = pl.run_classification(cfg, iris, "3t1r", seed=12)
    b, *_ = pl.run_classification(cfg, iris, "3t1r", seed=12)
    assert a.accuracy_pct == b.accuracy_pct
    assert a.mean_energy_pj == b.mean_energy_pj
    assert np.array_equal(a.confusion, b.confusion)
