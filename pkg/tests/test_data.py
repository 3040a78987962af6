import math

import numpy as np
import pytest

from src.data import (
    FEATURE_NAMES,
    DataError,
    balance,
    balance_indices,
    fit_norm_stats,
    normalize,
    normalize_matrix,
    parse_csv,
    split,
    split_indices,
    write_csv,
)
from src.synth import SynthConfig, generate

from tests.helpers import make_dataset, random_dataset

ROW = [100.5, 3600, 90, 110, 7200, 1, 12, 0.01]


class TestParseCsv:

    def test_three_rows_in_file_order(self, write_csv_text, csv_header):
        rows = [ROW + [10, 0],
                [200.0, 10, 20, 30, 40, 0, 3, 0.5, 90, 1],
                [0.0, 0, 0, 0, 0, 1, 24, 1.0, 0, 0]]
        ds = parse_csv(write_csv_text(csv_header, rows))

        assert len(ds) == 3
        assert [r.transaction_size for r in ds.records] == [100.5, 200.0, 0.0]
        assert [r.fraud for r in ds.records] == [0, 1, 0]
        assert [r.fraud_suspectness for r in ds.records] == [10, 90, 0]

    def test_hour_out_of_range_names_row(self, write_csv_text, csv_header):
        rows = [ROW + [10, 0], ROW[:6] + [25, 0.01, 10, 0]]
        with pytest.raises(DataError, match="Строка 2"):
            parse_csv(write_csv_text(csv_header, rows))

    def test_fractional_suspectness_rejected(self, write_csv_text, csv_header):
        rows = [ROW + [10, 0], ROW + [50.5, 1]]
        with pytest.raises(DataError, match="Строка 2: fraud_suspectness"):
            parse_csv(write_csv_text(csv_header, rows))

    def test_optional_suspectness_absent(self, write_csv_text):
        header = list(FEATURE_NAMES) + ['fraud']
        ds = parse_csv(write_csv_text(header, [ROW + [0], ROW + [1]]))
        assert all(r.fraud_suspectness is None for r in ds.records)
        assert not ds.has_suspectness()

    def test_missing_required_column(self, write_csv_text):
        header = list(FEATURE_NAMES[:-1]) + ['fraud']
        with pytest.raises(DataError, match="fraud_rate"):
            parse_csv(write_csv_text(header, [ROW[:-1] + [0]]))

    def test_unparsable_value_names_row(self, write_csv_text, csv_header):
        rows = [ROW + [10, 0], ROW + [10, 0], ['abc'] + ROW[1:] + [10, 0]]
        with pytest.raises(DataError, match="Строка 3"):
            parse_csv(write_csv_text(csv_header, rows))

    def test_negative_size_rejected(self, write_csv_text, csv_header):
        with pytest.raises(DataError, match="transaction_size"):
            parse_csv(write_csv_text(csv_header, [[-1.0] + ROW[1:] + [10, 0]]))

    def test_label_optional_when_not_required(self, write_csv_text):
        ds = parse_csv(write_csv_text(list(FEATURE_NAMES), [ROW]), require_label=False)
        assert ds.records[0].fraud is None
        with pytest.raises(DataError):
            ds.labels()

    def test_header_names_are_normalized(self, write_csv_text):
        header = [name.replace('_', ' ').title() for name in FEATURE_NAMES] + ['Fraud']
        ds = parse_csv(write_csv_text(header, [ROW + [1]]))
        assert ds.records[0].fraud == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="не найден"):
            parse_csv(str(tmp_path / 'nope.csv'))

    def test_parse_serialize_parse_round_trip(self, tmp_path):
        ds = generate(SynthConfig(n=200, seed=4))
        first = tmp_path / 'a.csv'
        write_csv(ds, str(first))
        parsed = parse_csv(str(first))
        second = tmp_path / 'b.csv'
        write_csv(parsed, str(second))

        assert parse_csv(str(second)) == parsed
        assert parsed == ds
        assert first.read_bytes() == second.read_bytes()


class TestNormStats:

    def test_two_point_case(self):
        ds = make_dataset([0, 0], transaction_size=[1.0, 3.0])
        stats = fit_norm_stats(ds)
        assert stats.means[0] == 2.0
        assert stats.sds[0] == 1.0

    def test_constant_feature_is_degenerate(self):
        ds = make_dataset([0, 0, 0], transaction_size=[5.0, 5.0, 5.0])
        stats = fit_norm_stats(ds)
        assert stats.sds[0] == 0.0
        assert stats.degenerate[0]

    def test_population_sd(self):
        ds = make_dataset([0] * 5, transaction_size=[0.0, 1.0, 2.0, 3.0, 4.0])
        stats = fit_norm_stats(ds)
        assert stats.means[0] == pytest.approx(2.0)
        assert stats.sds[0] == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_licit_only_ignores_fraud(self):
        ds = make_dataset([0, 0, 1], transaction_size=[1.0, 3.0, 1000.0])
        assert fit_norm_stats(ds, licit_only=True).means[0] == 2.0
        assert fit_norm_stats(ds, licit_only=False).means[0] > 2.0

    def test_too_few_licit_rows(self):
        ds = make_dataset([0, 1, 1])
        with pytest.raises(DataError):
            fit_norm_stats(ds)


class TestNormalize:

    def test_mean_maps_to_zero(self):
        ds = random_dataset(30, 0, seed=1)
        stats = fit_norm_stats(ds)
        z = normalize_matrix(np.array([stats.means]), stats)
        np.testing.assert_allclose(z, 0.0, atol=1e-12)

    def test_scalar_examples(self):
        ds = make_dataset([0, 0], transaction_size=[1.0, 3.0])
        stats = fit_norm_stats(ds)
        assert normalize_matrix(np.array([[3.0] + [0.0] * 7]), stats)[0, 0] == pytest.approx(1.0)

        ds = make_dataset([0] * 5, transaction_size=[0.0, 1.0, 2.0, 3.0, 4.0])
        stats = fit_norm_stats(ds)
        assert normalize_matrix(np.array([[4.0] + [0.0] * 7]), stats)[0, 0] == pytest.approx(1.41421, abs=1e-5)

    def test_degenerate_feature_only_centered(self):
        ds = make_dataset([0, 0, 0], transaction_size=[1.0, 2.0, 3.0])
        stats = fit_norm_stats(ds)
        z = normalize(ds, stats)
        same_shop = FEATURE_NAMES.index('same_shop')
        np.testing.assert_array_equal(z.matrix()[:, same_shop], 0.0)
        assert z.normalized
        assert z.norm_stats == stats

    def test_fitted_rows_become_standard(self):
        ds = random_dataset(40, 10, seed=2)
        z = normalize(ds, fit_norm_stats(ds, licit_only=False)).matrix()
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-9)

        licit = random_dataset(30, 0, seed=3)
        z = normalize(licit, fit_norm_stats(licit)).matrix()
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-9)

    def test_feature_count_mismatch(self):
        stats = fit_norm_stats(random_dataset(10, 0))
        with pytest.raises(DataError):
            normalize_matrix(np.zeros((2, 5)), stats)


class TestSplit:

    def test_stratified_fractions(self):
        labels = np.array([0, 1] * 50)
        train, test = split_indices(labels, 0.8, seed=7)
        assert len(train) == 80 and len(test) == 20
        assert labels[train].sum() == 40
        assert labels[test].sum() == 10
        assert not set(train) & set(test)

    def test_deterministic(self):
        labels = np.array([0] * 70 + [1] * 30)
        a = split_indices(labels, 0.8, seed=7)
        b = split_indices(labels, 0.8, seed=7)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_single_fraud_cannot_stratify(self):
        labels = np.array([0] * 9 + [1])
        with pytest.raises(DataError):
            split_indices(labels, 0.5, seed=1)

    def test_bad_fraction(self):
        with pytest.raises(DataError):
            split_indices(np.array([0, 0, 1, 1]), 1.0, seed=1)

    def test_split_datasets(self):
        ds = random_dataset(40, 10)
        train, test = split(ds, 0.8, seed=3)
        assert len(train) + len(test) == len(ds)
        assert train.counts() == {0: 32, 1: 8}

    def test_indices_cover_every_row_once(self):
        labels = np.array([0] * 37 + [1] * 13)
        train, test = split_indices(labels, 0.7, seed=11)
        np.testing.assert_array_equal(np.sort(np.concatenate([train, test])), np.arange(50))
        assert 0 < labels[test].sum() < 13

    def test_seed_changes_split(self):
        labels = np.array([0] * 70 + [1] * 30)
        a, _ = split_indices(labels, 0.8, seed=1)
        b, _ = split_indices(labels, 0.8, seed=2)
        assert set(a) != set(b)


class TestBalance:

    def test_downsamples_majority(self):
        labels = np.array([0] * 90 + [1] * 10)
        idx = balance_indices(labels, seed=1)
        assert len(idx) == 20
        assert labels[idx].sum() == 10

    def test_balanced_input_is_fixed_point(self):
        labels = np.array([0, 1] * 10)
        np.testing.assert_array_equal(balance_indices(labels, seed=5), np.arange(20))

    def test_seeds_give_different_licit_subsets(self):
        labels = np.array([0] * 1000 + [1] * 10)
        a = balance_indices(labels, seed=1)
        b = balance_indices(labels, seed=2)
        assert labels[a].sum() == labels[b].sum() == 10
        assert len(a) == len(b) == 20
        assert set(a[labels[a] == 0]) != set(b[labels[b] == 0])

    def test_missing_class(self):
        with pytest.raises(DataError):
            balance_indices(np.zeros(5, dtype=int), seed=1)

    def test_balance_dataset(self):
        ds = random_dataset(90, 10, seed=3)
        balanced = balance(ds, seed=1)
        assert balanced.counts() == {0: 10, 1: 10}
        assert set(balanced.records) <= set(ds.records)
