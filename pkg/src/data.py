# src/data.py
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from .utils import atomic_write, is_fraction, normalize_column_name

logger = logging.getLogger(__name__)

# Порядок признаков фиксирован на всех этапах пайплайна
FEATURE_NAMES: Tuple[str, ...] = (
    'transaction_size',
    'time_since_last',
    'last_transaction_size',
    'avg_transaction_size',
    'avg_time_between',
    'same_shop',
    'hour_of_day',
    'fraud_rate',
)
SUSPECTNESS_COLUMN = 'fraud_suspectness'
LABEL_COLUMN = 'fraud'

INTEGER_FEATURES = ('same_shop', 'hour_of_day')
NON_NEGATIVE_FEATURES = (
    'transaction_size', 'time_since_last', 'last_transaction_size',
    'avg_transaction_size', 'avg_time_between',
)

EPS_VAR = 1e-9


class DataError(ValueError):
    """Ошибка схемы, разбора или состава набора транзакций"""


@dataclass(frozen=True)
class TransactionRecord:
    """Одна карточная операция: 8 признаков, метка и оценка коммерческой системы"""

    transaction_size: float
    time_since_last: float
    last_transaction_size: float
    avg_transaction_size: float
    avg_time_between: float
    same_shop: float
    hour_of_day: float
    fraud_rate: float
    fraud: Optional[int] = None
    fraud_suspectness: Optional[int] = None

    def features(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    def with_features(self, values: Sequence[float]) -> 'TransactionRecord':
        return replace(self, **{name: float(v) for name, v in zip(FEATURE_NAMES, values)})


@dataclass(frozen=True)
class NormStats:
    """Средние и стандартные отклонения признаков (по легальным операциям)"""

    feature_names: Tuple[str, ...]
    means: Tuple[float, ...]
    sds: Tuple[float, ...]
    degenerate: Tuple[bool, ...]

    def to_dict(self) -> Dict:
        return {
            'feature_names': list(self.feature_names),
            'means': list(self.means),
            'sds': list(self.sds),
            'degenerate': list(self.degenerate),
        }

    @classmethod
    def from_dict(cls, payload: Dict) -> 'NormStats':
        return cls(
            feature_names=tuple(payload['feature_names']),
            means=tuple(float(v) for v in payload['means']),
            sds=tuple(float(v) for v in payload['sds']),
            degenerate=tuple(bool(v) for v in payload['degenerate']),
        )


@dataclass(frozen=True)
class Dataset:
    """Упорядоченный набор транзакций"""

    records: Tuple[TransactionRecord, ...]
    feature_names: Tuple[str, ...] = FEATURE_NAMES
    normalized: bool = False
    norm_stats: Optional[NormStats] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.records:
            raise DataError("Набор данных пуст")

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def _matrix(self) -> np.ndarray:
        matrix = np.array([r.features() for r in self.records], dtype=float)
        matrix.flags.writeable = False
        return matrix

    def matrix(self) -> np.ndarray:
        """Матрица признаков n×k (только для чтения)"""
        return self._matrix

    def labels(self) -> np.ndarray:
        if any(r.fraud is None for r in self.records):
            raise DataError("В наборе есть записи без метки fraud")
        return np.array([r.fraud for r in self.records], dtype=int)

    def has_suspectness(self) -> bool:
        return all(r.fraud_suspectness is not None for r in self.records)

    def counts(self) -> Dict[int, int]:
        """Число записей в каждом классе"""
        labels = self.labels()
        return {0: int(np.sum(labels == 0)), 1: int(np.sum(labels == 1))}

    def subset(self, indices: Sequence[int]) -> 'Dataset':
        return replace(self, records=tuple(self.records[i] for i in indices))


def _check_range(frame: pd.DataFrame, column: str, ok: pd.Series, rule: str):
    bad = frame.index[~ok]
    if len(bad):
        row = int(bad[0]) + 1
        raise DataError(
            f"Строка {row}: {column} = {frame.at[bad[0], column]} нарушает условие {rule}"
        )


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def _to_numeric(raw: pd.DataFrame, column: str, required: bool) -> pd.Series:
    """Разбор числовой колонки с указанием номера строки при ошибке"""
    text = raw[column].astype(str).str.strip()
    empty = raw[column].isna() | (text == '')
    # CSV → Dataset → CSV без потерь точности
    values = text.where(~empty).map(_parse_float, na_action='ignore').astype(float)

    unparsable = ~np.isfinite(values) & ~empty
    if unparsable.any():
        row = int(raw.index[unparsable][0]) + 1
        raise DataError(f"Строка {row}: не удаётся разобрать {column} = '{raw.at[raw.index[unparsable][0], column]}'")
    if required and empty.any():
        row = int(raw.index[empty][0]) + 1
        raise DataError(f"Строка {row}: пустое значение в обязательной колонке {column}")
    return values


def _validate_frame(frame: pd.DataFrame, has_label: bool):
    """Доменные ограничения схемы транзакций"""
    for column in NON_NEGATIVE_FEATURES:
        _check_range(frame, column, frame[column] >= 0, '>= 0')
    for column in INTEGER_FEATURES + ((LABEL_COLUMN,) if has_label else ()):
        _check_range(frame, column, frame[column] == np.floor(frame[column]), 'целое')
    _check_range(frame, 'same_shop', frame['same_shop'].isin([0, 1]), '∈ {0, 1}')
    _check_range(frame, 'hour_of_day', frame['hour_of_day'].between(1, 24), '∈ [1, 24]')
    _check_range(frame, 'fraud_rate', frame['fraud_rate'].between(0, 1), '∈ [0, 1]')
    if has_label:
        _check_range(frame, LABEL_COLUMN, frame[LABEL_COLUMN].isin([0, 1]), '∈ {0, 1}')
    if SUSPECTNESS_COLUMN in frame:
        present = frame[SUSPECTNESS_COLUMN].isna() | frame[SUSPECTNESS_COLUMN].between(0, 100)
        _check_range(frame, SUSPECTNESS_COLUMN, present, '∈ [0, 100]')
        whole = frame[SUSPECTNESS_COLUMN].isna() | (frame[SUSPECTNESS_COLUMN] == np.floor(frame[SUSPECTNESS_COLUMN]))
        _check_range(frame, SUSPECTNESS_COLUMN, whole, 'целое')


def parse_csv(path: str, require_label: bool = True) -> Dataset:
    """Чтение CSV в схеме транзакций (порядок строк сохраняется)"""
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except FileNotFoundError:
        raise DataError(f"Файл не найден: {path}")
    except pd.errors.EmptyDataError:
        raise DataError(f"Файл пуст: {path}")

    raw.columns = [normalize_column_name(c) for c in raw.columns]
    required = list(FEATURE_NAMES) + ([LABEL_COLUMN] if require_label else [])
    missing = [c for c in required if c not in raw.columns]
    if missing:
        raise DataError(f"{path}: отсутствуют обязательные колонки: {', '.join(missing)}")
    if raw.empty:
        raise DataError(f"{path}: нет ни одной записи")

    has_label = LABEL_COLUMN in raw.columns
    frame = pd.DataFrame(index=raw.index)
    for column in FEATURE_NAMES:
        frame[column] = _to_numeric(raw, column, required=True)
    if has_label:
        frame[LABEL_COLUMN] = _to_numeric(raw, LABEL_COLUMN, required=require_label)
    if SUSPECTNESS_COLUMN in raw.columns:
        frame[SUSPECTNESS_COLUMN] = _to_numeric(raw, SUSPECTNESS_COLUMN, required=False)

    _validate_frame(frame, has_label and require_label)

    records = []
    for row in frame.itertuples(index=False):
        values = row._asdict()
        suspectness = values.get(SUSPECTNESS_COLUMN)
        label = values.get(LABEL_COLUMN)
        records.append(TransactionRecord(
            **{name: float(values[name]) for name in FEATURE_NAMES},
            fraud=None if label is None or math.isnan(label) else int(label),
            fraud_suspectness=None if suspectness is None or math.isnan(suspectness) else int(suspectness),
        ))

    logger.info("Загружено %d транзакций из %s", len(records), path)
    return Dataset(records=tuple(records))


def to_frame(ds: Dataset) -> pd.DataFrame:
    """Табличное представление набора в порядке колонок CSV"""
    frame = pd.DataFrame(ds.matrix(), columns=list(ds.feature_names))
    if not ds.normalized:
        for column in INTEGER_FEATURES:
            frame[column] = frame[column].astype(int)
    if any(r.fraud_suspectness is not None for r in ds.records):
        frame[SUSPECTNESS_COLUMN] = pd.array([r.fraud_suspectness for r in ds.records], dtype='Int64')
    frame[LABEL_COLUMN] = pd.array([r.fraud for r in ds.records], dtype='Int64')
    return frame


def write_csv(ds: Dataset, path: str):
    """Запись набора в CSV (формат, читаемый parse_csv)"""
    with atomic_write(path) as fh:
        to_frame(ds).to_csv(fh, index=False, lineterminator='\n')
    logger.info("Записано %d транзакций в %s", len(ds), path)


def fit_norm_stats(ds: Dataset, licit_only: bool = True) -> NormStats:
    """Среднее и популяционное СКО каждого признака"""
    matrix = ds.matrix()
    if licit_only:
        matrix = matrix[ds.labels() == 0]
    if matrix.shape[0] < 2:
        raise DataError(f"Для статистик нормализации нужно ≥ 2 записей, выбрано {matrix.shape[0]}")

    means = matrix.mean(axis=0)
    sds = matrix.std(axis=0)
    degenerate = sds < EPS_VAR
    for name in np.array(ds.feature_names)[degenerate]:
        logger.warning("Признак %s вырожден (нулевая дисперсия): только центрирование", name)

    return NormStats(
        feature_names=tuple(ds.feature_names),
        means=tuple(float(v) for v in means),
        sds=tuple(float(v) for v in sds),
        degenerate=tuple(bool(v) for v in degenerate),
    )


def normalize_matrix(matrix: np.ndarray, stats: NormStats) -> np.ndarray:
    """z-преобразование; вырожденные признаки только центрируются"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[-1] != len(stats.means):
        raise DataError(
            f"Число признаков {matrix.shape[-1]} не совпадает со статистиками ({len(stats.means)})"
        )
    scale = np.where(stats.degenerate, 1.0, stats.sds)
    return (matrix - np.array(stats.means)) / scale


def normalize(ds: Dataset, stats: NormStats) -> Dataset:
    if len(ds.feature_names) != len(stats.feature_names):
        raise DataError(
            f"Число признаков набора ({len(ds.feature_names)}) не совпадает со статистиками "
            f"({len(stats.feature_names)})"
        )
    z = normalize_matrix(ds.matrix(), stats)
    records = tuple(r.with_features(row) for r, row in zip(ds.records, z))
    return Dataset(records=records, feature_names=ds.feature_names, normalized=True, norm_stats=stats)


def split_indices(labels: np.ndarray, train_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Стратифицированное перемешанное разбиение индексов (train_test_split с stratify)"""
    if not is_fraction(train_fraction, closed=False):
        raise DataError(f"train_fraction должен быть в (0, 1), получено {train_fraction}")

    labels = np.asarray(labels)
    for label in (0, 1):
        count = int(np.sum(labels == label))
        if count == 1:
            raise DataError(f"Класс {label} содержит {count} запись: стратификация невозможна")

    try:
        train, test = train_test_split(
            np.arange(len(labels)), train_size=train_fraction, stratify=labels, random_state=seed,
        )
    except ValueError as e:
        raise DataError(f"Разбиение {len(labels)} записей с долей {train_fraction} невозможно: {e}")
    return train, test


def split(ds: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(ds.labels(), train_fraction, seed)
    return ds.subset(train_idx), ds.subset(test_idx)


def balance_indices(labels: np.ndarray, seed: int) -> np.ndarray:
    """Индексы сбалансированной подвыборки (мажоритарный класс без возвращения)"""
    legal = np.flatnonzero(labels == 0)
    fraud = np.flatnonzero(labels == 1)
    if len(legal) == 0 or len(fraud) == 0:
        raise DataError(f"Балансировка невозможна: легальных {len(legal)}, мошеннических {len(fraud)}")

    rng = np.random.default_rng(seed)
    if len(legal) > len(fraud):
        legal = rng.choice(legal, size=len(fraud), replace=False)
    elif len(fraud) > len(legal):
        fraud = rng.choice(fraud, size=len(legal), replace=False)
    return np.sort(np.concatenate([legal, fraud]))


def balance(ds: Dataset, seed: int) -> Dataset:
    return ds.subset(balance_indices(ds.labels(), seed))


def describe(ds: Dataset) -> List[str]:
    """Краткая сводка по набору для вывода в консоль"""
    counts = ds.counts()
    return [
        f"• Всего транзакций: {len(ds)}",
        f"• Легальных: {counts[0]}",
        f"• Мошеннических: {counts[1]}",
    ]
