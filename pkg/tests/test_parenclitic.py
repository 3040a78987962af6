import math

import numpy as np
import pytest

from src.baseline import BaselineModel, PairLine
from src.baseline import fit as baseline_fit
from src.data import fit_norm_stats, normalize
from src.parenclitic import (
    BinaryNetwork,
    DensityThreshold,
    WeightedNetwork,
    binarize,
    binarize_tensor,
    build_weight_tensor,
    build_weighted,
    calibrate_alpha,
    format_edge_list,
    load_threshold,
    networks_from_tensor,
    realized_density,
    save_threshold,
    write_edge_list,
)
from src.storage import ArtifactFormatError
from src.synth import SynthConfig, generate


def _identity_model(k=3) -> BaselineModel:
    lines = tuple(PairLine(i, j, 1.0, 0.0) for i in range(k) for j in range(i + 1, k))
    return BaselineModel(lines=lines, norm_stats=None, feature_names=tuple(f'f{n}' for n in range(k)))


def _random_model(k, seed) -> BaselineModel:
    rng = np.random.default_rng(seed)
    lines = tuple(
        PairLine(i, j, float(rng.uniform(-2, 2)), float(rng.uniform(-1, 1)))
        for i in range(k) for j in range(i + 1, k)
    )
    return BaselineModel(lines=lines, norm_stats=None, feature_names=tuple(f'f{n}' for n in range(k)))


def _network_from_upper(values, k) -> WeightedNetwork:
    w = np.zeros((k, k))
    w[np.triu_indices(k, 1)] = values
    return WeightedNetwork(weights=w + w.T)


class TestBuildWeighted:

    def test_on_line_transaction_has_zero_weights(self):
        wn = build_weighted([0.7, 0.7, 0.7], _identity_model())
        np.testing.assert_array_equal(wn.weights, 0.0)

    def test_distance_per_pair(self):
        wn = build_weighted([0.0, 1.0, 0.0], _identity_model())
        assert wn.weights[0, 1] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert wn.weights[0, 2] == 0.0
        assert wn.weights[1, 2] == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_symmetric_with_zero_diagonal(self):
        model = _random_model(8, seed=1)
        rng = np.random.default_rng(2)
        for _ in range(20):
            w = build_weighted(rng.standard_normal(8), model).weights
            np.testing.assert_array_equal(w, w.T)
            np.testing.assert_array_equal(np.diag(w), 0.0)
            assert np.all(w >= 0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_weighted([0.0, 1.0], _identity_model())

    def test_tensor_matches_single_networks(self):
        model = _random_model(8, seed=4)
        x = np.random.default_rng(5).standard_normal((15, 8))
        tensor = build_weight_tensor(x, model)
        for row, w in zip(x, tensor):
            np.testing.assert_allclose(w, build_weighted(row, model).weights, rtol=1e-12, atol=1e-15)
        assert len(networks_from_tensor(tensor)) == 15


class TestCalibrateAlpha:

    def test_sort_and_count(self):
        pool = np.arange(1.0, 11.0)
        networks = [_network_from_upper(pool[:6], 4), _network_from_upper(np.r_[pool[6:], 0.0, 0.0], 4)]
        # Пул из двух сетей: 1..10 и два нуля
        thr = calibrate_alpha(networks, 0.5)
        assert thr.alpha == 5.0
        assert sum(v >= thr.alpha for v in np.r_[pool, 0.0, 0.0]) == 6

    def test_ten_weight_pool(self):
        weights = np.zeros((1, 5, 5))
        weights[0][np.triu_indices(5, 1)] = np.arange(1.0, 11.0)
        weights[0] += weights[0].T
        thr = calibrate_alpha(weights, 0.6)
        assert thr.alpha == 5.0
        assert thr.density == 0.6

    def test_density_one_keeps_every_edge(self):
        weights = np.abs(np.random.default_rng(1).standard_normal((10, 6, 6)))
        weights = (weights + weights.transpose(0, 2, 1)) / 2
        weights[:, np.arange(8), np.arange(8)] = 0.0
        thr = calibrate_alpha(weights, 1.0)
        rows, cols = np.triu_indices(6, 1)
        assert thr.alpha == weights[:, rows, cols].min()
        assert realized_density(weights, thr) == 1.0

    def test_density_zero_gives_no_edges(self):
        weights = np.abs(np.random.default_rng(2).standard_normal((10, 6, 6)))
        thr = calibrate_alpha(weights, 0.0)
        assert thr.alpha == math.inf
        assert not binarize_tensor(weights, thr).any()

    def test_realized_density_within_granularity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(1, 30))
            upper = rng.exponential(size=(n, 28))
            weights = np.zeros((n, 8, 8))
            weights[:, np.triu_indices(8, 1)[0], np.triu_indices(8, 1)[1]] = upper
            weights += weights.transpose(0, 2, 1)
            density = float(rng.uniform(0.05, 0.95))
            realized = realized_density(weights, calibrate_alpha(weights, density))
            assert density - 1e-9 <= realized <= density + 1.0 / upper.size + 1e-12

    def test_rejects_bad_density(self):
        with pytest.raises(ValueError):
            calibrate_alpha(np.zeros((1, 3, 3)), 1.5)

    def test_rejects_empty_pool(self):
        with pytest.raises(ValueError):
            calibrate_alpha([], 0.5)


class TestBinarize:

    def test_zero_weights_give_empty_graph(self):
        g = binarize(WeightedNetwork(weights=np.zeros((8, 8))), DensityThreshold(0.5, 0.1))
        assert g.edge_count() == 0

    def test_boundary_is_inclusive(self):
        wn = _network_from_upper([0.1, 0.5, 0.9], 3)
        g = binarize(wn, DensityThreshold(0.5, 0.5))
        assert g.edge_count() == 2
        assert not g.adjacency[0, 1]
        assert g.adjacency[0, 2] and g.adjacency[1, 2]

    def test_huge_weights_give_complete_graph(self):
        wn = _network_from_upper(np.full(28, 1e6), 8)
        g = binarize(wn, DensityThreshold(0.5, 3.0))
        assert g.edge_count() == 28
        assert g.density() == 1.0
        assert not np.diag(g.adjacency).any()

    def test_monotone_in_alpha(self):
        wn = _network_from_upper(np.random.default_rng(9).exponential(size=28), 8)
        counts = [binarize(wn, DensityThreshold(0.5, a)).edge_count() for a in np.linspace(0, 4, 30)]
        assert all(b <= a for a, b in zip(counts, counts[1:]))

    def test_tensor_matches_single(self):
        weights = np.abs(np.random.default_rng(4).standard_normal((5, 8, 8)))
        weights = (weights + weights.transpose(0, 2, 1)) / 2
        thr = DensityThreshold(0.5, 0.8)
        for w, a in zip(weights, binarize_tensor(weights, thr)):
            np.testing.assert_array_equal(a, binarize(WeightedNetwork(weights=w.copy()), thr).adjacency)


class TestPersistence:

    def test_edge_list_format(self, tmp_path):
        wn = _network_from_upper([0.1, 0.5, 0.9], 3)
        thr = DensityThreshold(0.5, 0.5)
        assert format_edge_list(wn, thr) == "3 0.5 0.5\n0 2 0.5\n1 2 0.9\n"

        path = tmp_path / 'networks.txt'
        write_edge_list(str(path), [wn, wn], thr)
        assert path.read_text(encoding='utf-8').count("3 0.5 0.5") == 2

    def test_threshold_round_trip(self, tmp_path):
        path = str(tmp_path / 'threshold.json')
        thr = DensityThreshold(0.6, 1.2345678901234567)
        save_threshold(thr, path)
        assert load_threshold(path) == thr

    def test_infinite_alpha_round_trip(self, tmp_path):
        path = str(tmp_path / 'threshold.json')
        save_threshold(DensityThreshold(0.0, math.inf), path)
        assert load_threshold(path).alpha == math.inf

    def test_threshold_wrong_kind(self, tmp_path):
        path = tmp_path / 'threshold.json'
        path.write_text('{"schema_version": 1, "kind": "mlp"}', encoding='utf-8')
        with pytest.raises(ArtifactFormatError):
            load_threshold(str(path))

    def test_threshold_bound_to_feature_table(self, tmp_path):
        path = str(tmp_path / 'threshold_combined.json')
        thr = DensityThreshold(0.3, 0.75)
        save_threshold(thr, path, 'combined', 'abc123')
        assert load_threshold(path, 'combined', 'abc123') == thr

        with pytest.raises(ArtifactFormatError, match="parenclitic"):
            load_threshold(path, 'parenclitic', 'abc123')
        with pytest.raises(ArtifactFormatError, match="features --feature-set combined"):
            load_threshold(path, 'combined', 'def456')

    def test_unbound_threshold_rejected_when_table_given(self, tmp_path):
        path = str(tmp_path / 'threshold_raw.json')
        save_threshold(DensityThreshold(0.6, 1.0), path)
        with pytest.raises(ArtifactFormatError):
            load_threshold(path, 'raw', 'abc123')


class TestNetworkInvariants:

    def test_caller_array_stays_writeable(self):
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = 0.4
        wn = WeightedNetwork(weights=w)
        assert w.flags.writeable
        assert not wn.weights.flags.writeable

        w[0, 1] = 9.0
        assert wn.weights[0, 1] == 0.4

    def test_asymmetric_weights_rejected(self):
        w = np.zeros((3, 3))
        w[0, 1] = 0.4
        with pytest.raises(ValueError, match="симметричной"):
            WeightedNetwork(weights=w)

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(ValueError, match="Диагональ"):
            WeightedNetwork(weights=np.eye(3))

    def test_negative_weight_rejected(self):
        w = np.zeros((3, 3))
        w[0, 2] = w[2, 0] = -0.1
        with pytest.raises(ValueError, match="неотрицательными"):
            WeightedNetwork(weights=w)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="квадратной"):
            WeightedNetwork(weights=np.zeros((2, 3)))

    def test_binary_self_loop_rejected(self):
        a = np.zeros((3, 3), dtype=bool)
        a[1, 1] = True
        with pytest.raises(ValueError, match="Петли"):
            BinaryNetwork(adjacency=a)

    def test_binary_asymmetric_rejected(self):
        a = np.zeros((3, 3), dtype=bool)
        a[0, 2] = True
        with pytest.raises(ValueError, match="симметричной"):
            BinaryNetwork(adjacency=a)


class TestSyntheticNetworks:

    def test_fraud_has_more_links_at_density_06(self):
        for seed in range(1, 6):
            ds = generate(SynthConfig(n=1000, seed=seed))
            z = normalize(ds, fit_norm_stats(ds))
            model = baseline_fit(z)
            weights = build_weight_tensor(z.matrix(), model)
            labels = ds.labels()

            thr = calibrate_alpha(weights[labels == 0], 0.6)
            edges = binarize_tensor(weights, thr).sum(axis=(1, 2)) / 2
            assert edges[labels == 1].mean() > edges[labels == 0].mean(), seed
