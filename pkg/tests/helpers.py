import numpy as np

from src.data import Dataset, TransactionRecord

BASE_FEATURES = {
    'transaction_size': 100.0,
    'time_since_last': 3600.0,
    'last_transaction_size': 90.0,
    'avg_transaction_size': 110.0,
    'avg_time_between': 7200.0,
    'same_shop': 1.0,
    'hour_of_day': 12.0,
    'fraud_rate': 0.01,
}


def make_record(fraud=0, suspectness=None, **overrides) -> TransactionRecord:
    values = dict(BASE_FEATURES)
    values.update({k: float(v) for k, v in overrides.items()})
    return TransactionRecord(**values, fraud=fraud, fraud_suspectness=suspectness)


def make_dataset(labels, **columns) -> Dataset:
    """Набор с заданными метками; columns: массивы значений отдельных признаков"""
    records = []
    for n, label in enumerate(labels):
        overrides = {name: values[n] for name, values in columns.items()}
        records.append(make_record(fraud=int(label), **overrides))
    return Dataset(records=tuple(records))


def random_dataset(n_licit: int, n_fraud: int, seed: int = 0) -> Dataset:
    """Валидный набор со случайными значениями признаков"""
    rng = np.random.default_rng(seed)
    n = n_licit + n_fraud
    columns = {
        'transaction_size': np.round(rng.uniform(1, 500, n), 2),
        'time_since_last': np.rint(rng.uniform(0, 90000, n)),
        'last_transaction_size': np.round(rng.uniform(1, 500, n), 2),
        'avg_transaction_size': np.round(rng.uniform(50, 200, n), 2),
        'avg_time_between': np.rint(rng.uniform(1000, 90000, n)),
        'same_shop': rng.integers(0, 2, n).astype(float),
        'hour_of_day': rng.integers(1, 25, n).astype(float),
        'fraud_rate': np.round(rng.uniform(0, 0.1, n), 6),
    }
    return make_dataset([0] * n_licit + [1] * n_fraud, **columns)
