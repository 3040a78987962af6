# src/features.py
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from sklearn.preprocessing import StandardScaler

from . import baseline as baseline_io
from . import mlp
from .baseline import BaselineModel
from .data import FEATURE_NAMES, LABEL_COLUMN, Dataset, normalize_matrix
from .parenclitic import DensityThreshold, build_weight_tensor
from .storage import ArtifactFormatError, read_json, require_keys, write_json
from .topo import METRIC_NAMES, topo_matrix

logger = logging.getLogger(__name__)

FEATURE_SETS = ('raw', 'parenclitic', 'combined')
SCORER_KIND = 'scorer'


def columns_for(feature_set: str) -> Tuple[str, ...]:
    """Колонки признаков выбранного набора"""
    if feature_set == 'raw':
        return FEATURE_NAMES
    if feature_set == 'parenclitic':
        return METRIC_NAMES
    if feature_set == 'combined':
        return FEATURE_NAMES + METRIC_NAMES
    raise ValueError(f"Неизвестный набор признаков '{feature_set}', допустимы: {', '.join(FEATURE_SETS)}")


def assemble(raw: Optional[np.ndarray], metrics: Optional[np.ndarray], feature_set: str) -> np.ndarray:
    """Матрица входов MLP: 8 сырых, 7 сетевых или 15 объединённых признаков"""
    columns_for(feature_set)
    if feature_set == 'raw':
        return np.asarray(raw, dtype=float)
    if feature_set == 'parenclitic':
        return np.asarray(metrics, dtype=float)
    return np.hstack([raw, metrics])


@dataclass(frozen=True)
class Standardizer:
    """z-преобразование сетевых метрик по обучающим строкам.

    Параметры StandardScaler хранятся кортежами, чтобы попадать в JSON модели.
    """

    means: Tuple[float, ...]
    sds: Tuple[float, ...]

    @classmethod
    def fit(cls, matrix: np.ndarray) -> 'Standardizer':
        # Постоянная на обучении метрика получает scale_ = 1 и только центрируется
        scaler = StandardScaler().fit(np.asarray(matrix, dtype=float))
        return cls(means=tuple(float(v) for v in scaler.mean_), sds=tuple(float(v) for v in scaler.scale_))

    def scaler(self) -> StandardScaler:
        """StandardScaler, восстановленный из сохранённых параметров"""
        scaler = StandardScaler()
        scaler.mean_ = np.array(self.means, dtype=float)
        scaler.scale_ = np.array(self.sds, dtype=float)
        scaler.var_ = scaler.scale_ ** 2
        scaler.n_features_in_ = len(self.means)
        return scaler

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[0] == 0:
            return matrix.copy()
        return self.scaler().transform(matrix)


def metric_matrix(normalized_raw: np.ndarray, model: BaselineModel, thr: DensityThreshold) -> np.ndarray:
    """Сети транзакций → бинаризация → 7 метрик на транзакцию"""
    return topo_matrix(build_weight_tensor(normalized_raw, model), thr)


def feature_frame(raw: np.ndarray, metrics: np.ndarray, labels: np.ndarray, feature_set: str) -> pd.DataFrame:
    """Таблица признаков для экспорта: колонки набора + метка"""
    columns = list(columns_for(feature_set))
    frame = pd.DataFrame(assemble(raw, metrics, feature_set), columns=columns)
    for column in ('same_shop', 'hour_of_day', 'max_degree'):
        if column in frame:
            frame[column] = frame[column].round().astype(int)
    frame[LABEL_COLUMN] = labels.astype(int)
    return frame


def read_feature_frame(path: str, feature_set: str) -> Tuple[np.ndarray, np.ndarray]:
    """Чтение таблицы признаков с проверкой соответствия набору"""
    frame = pd.read_csv(path, float_precision='round_trip')
    expected = list(columns_for(feature_set))
    found = [c for c in frame.columns if c != LABEL_COLUMN]
    if found != expected or LABEL_COLUMN not in frame.columns:
        raise ValueError(
            f"{path}: {len(found)} колонок признаков, набор '{feature_set}' требует {len(expected)} "
            f"({', '.join(expected)})"
        )
    return frame[expected].to_numpy(dtype=float), frame[LABEL_COLUMN].to_numpy(dtype=int)


@dataclass
class FraudScorer:
    """Сохраняемый пайплайн оценки: нормализация → сети → метрики → MLP"""

    feature_set: str
    baseline: BaselineModel
    threshold: DensityThreshold
    standardizer: Optional[Standardizer]
    model: mlp.MlpModel

    def inputs(self, raw: np.ndarray) -> np.ndarray:
        """Входы MLP для матрицы сырых (ненормализованных) признаков"""
        z = normalize_matrix(raw, self.baseline.norm_stats)
        metrics = None
        if self.feature_set != 'raw':
            metrics = metric_matrix(z, self.baseline, self.threshold)
            metrics = self.standardizer.transform(metrics)
        return assemble(z, metrics, self.feature_set)

    def inputs_from_features(self, features: np.ndarray) -> np.ndarray:
        """Входы MLP из уже посчитанной таблицы признаков набора"""
        features = np.asarray(features, dtype=float)
        n_raw = len(FEATURE_NAMES)
        if self.feature_set == 'raw':
            return normalize_matrix(features, self.baseline.norm_stats)
        if self.feature_set == 'parenclitic':
            return self.standardizer.transform(features)
        z = normalize_matrix(features[:, :n_raw], self.baseline.norm_stats)
        return np.hstack([z, self.standardizer.transform(features[:, n_raw:])])

    def score(self, ds: Dataset) -> np.ndarray:
        return mlp.forward(self.model, self.inputs(ds.matrix()))

    def to_dict(self, cfg: Optional[mlp.TrainConfig] = None) -> Dict:
        return {
            'feature_set': self.feature_set,
            'threshold': self.threshold.to_dict(),
            'standardizer': (
                {'means': list(self.standardizer.means), 'sds': list(self.standardizer.sds)}
                if self.standardizer else None
            ),
            'mlp': mlp.to_dict(self.model, cfg),
        }

    def save(self, path: str, cfg: Optional[mlp.TrainConfig] = None):
        write_json(path, SCORER_KIND, self.to_dict(cfg))

    @classmethod
    def load(cls, path: str, baseline_path: str) -> 'FraudScorer':
        document = read_json(path, SCORER_KIND)
        require_keys(document, ('feature_set', 'threshold', 'standardizer', 'mlp'), path)
        feature_set = document['feature_set']
        columns_for(feature_set)

        model = mlp.from_dict(document['mlp'], path)
        if model.input_dim != len(columns_for(feature_set)):
            raise ArtifactFormatError(
                f"{path}: вход сети {model.input_dim}, набор '{feature_set}' даёт {len(columns_for(feature_set))}"
            )
        std = document['standardizer']
        if feature_set != 'raw' and not std:
            raise ArtifactFormatError(f"{path}: для набора '{feature_set}' нужен standardizer")

        baseline = baseline_io.load(baseline_path, FEATURE_NAMES)
        if baseline.norm_stats is None:
            raise ArtifactFormatError(f"{baseline_path}: в базовой модели нет статистик нормализации")

        return cls(
            feature_set=feature_set,
            baseline=baseline,
            threshold=DensityThreshold.from_dict(document['threshold']),
            standardizer=Standardizer(tuple(std['means']), tuple(std['sds'])) if std else None,
            model=model,
        )
