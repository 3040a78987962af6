# src/baseline.py
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence, Tuple

import numpy as np

from .data import EPS_VAR, DataError, Dataset, NormStats
from .storage import ArtifactFormatError, read_json, require_keys, write_json

logger = logging.getLogger(__name__)

ARTIFACT_KIND = 'baseline'


@dataclass(frozen=True)
class PairLine:
    """Линия регрессии x_j = a·x_i + b для пары признаков i < j"""

    i: int
    j: int
    a: float
    b: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {'i': self.i, 'j': self.j, 'a': self.a, 'b': self.b, 'degenerate': self.degenerate}


@dataclass(frozen=True)
class BaselineModel:
    """Все C(k,2) линий нормального поведения и статистики нормализации"""

    lines: Tuple[PairLine, ...]
    norm_stats: Optional[NormStats]
    feature_names: Tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.feature_names)

    def line(self, i: int, j: int) -> PairLine:
        if i > j:
            i, j = j, i
        for line in self.lines:
            if line.i == i and line.j == j:
                return line
        raise KeyError((i, j))


def fit_pair(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, bool]:
    """МНК для y = a·x + b; при вырожденном предикторе a = 0, b = mean(y)"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mx, my = x.mean(), y.mean()
    dx = x - mx
    sxx = float(np.dot(dx, dx))
    if sxx / len(x) < EPS_VAR:
        return 0.0, float(my), True
    a = float(np.dot(dx, y - my)) / sxx
    return a, float(my - a * mx), False


def fit_lines(matrix: np.ndarray) -> Tuple[PairLine, ...]:
    """Регрессии признака j на признак i для всех пар i < j"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] < 2:
        raise DataError(f"Для регрессий нужно ≥ 2 легальных записей, получено {matrix.shape[0]}")

    lines = []
    for i, j in combinations(range(matrix.shape[1]), 2):
        a, b, degenerate = fit_pair(matrix[:, i], matrix[:, j])
        if degenerate:
            logger.debug("Пара (%d, %d): вырожденный предиктор, горизонтальная линия", i, j)
        lines.append(PairLine(i=i, j=j, a=a, b=b, degenerate=degenerate))
    return tuple(lines)


def fit(training: Dataset, licit_only: bool = True) -> BaselineModel:
    """Линии нормального поведения по легальным операциям обучающей выборки"""
    if not training.normalized:
        raise DataError("Базовая модель строится только по нормализованным данным")
    matrix = training.matrix()
    if licit_only:
        matrix = matrix[training.labels() == 0]

    lines = fit_lines(matrix)
    logger.info("Базовая модель: %d линий по %d записям", len(lines), matrix.shape[0])
    return BaselineModel(lines=lines, norm_stats=training.norm_stats, feature_names=tuple(training.feature_names))


def point_line_distance(point: Sequence[float], line: PairLine) -> float:
    """Евклидово расстояние от точки (x_i, x_j) до линии"""
    xi, xj = float(point[0]), float(point[1])
    if line.degenerate:
        return abs(xj - line.b)
    return abs(line.a * xi - xj + line.b) / math.sqrt(line.a * line.a + 1.0)


def pair_distances(xi: np.ndarray, xj: np.ndarray, line: PairLine) -> np.ndarray:
    """Векторный вариант point_line_distance для многих точек"""
    if line.degenerate:
        return np.abs(xj - line.b)
    return np.abs(line.a * xi - xj + line.b) / np.sqrt(line.a * line.a + 1.0)


def save(model: BaselineModel, path: str):
    write_json(path, ARTIFACT_KIND, {
        'feature_names': list(model.feature_names),
        'norm_stats': model.norm_stats.to_dict() if model.norm_stats else None,
        'lines': [line.to_dict() for line in model.lines],
    })


def load(path: str, feature_names: Optional[Sequence[str]] = None) -> BaselineModel:
    """Чтение модели с проверкой схемы и числа признаков"""
    document = read_json(path, ARTIFACT_KIND)
    require_keys(document, ('feature_names', 'norm_stats', 'lines'), path)

    names = tuple(document['feature_names'])
    if feature_names is not None and len(names) != len(feature_names):
        raise ArtifactFormatError(
            f"{path}: в модели {len(names)} признаков, ожидалось {len(feature_names)}"
        )

    try:
        lines = tuple(
            PairLine(i=int(d['i']), j=int(d['j']), a=float(d['a']), b=float(d['b']),
                     degenerate=bool(d['degenerate']))
            for d in document['lines']
        )
        stats = NormStats.from_dict(document['norm_stats']) if document['norm_stats'] else None
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactFormatError(f"{path}: некорректная запись линии или статистик ({e})")

    k = len(names)
    expected = set(combinations(range(k), 2))
    found = [(line.i, line.j) for line in lines]
    if len(found) != len(expected) or set(found) != expected:
        raise ArtifactFormatError(
            f"{path}: ожидалось {len(expected)} линий (по одной на пару из {k} признаков), найдено {len(found)}"
        )
    if stats is not None and len(stats.means) != k:
        raise ArtifactFormatError(f"{path}: статистики на {len(stats.means)} признаков, модель на {k}")

    return BaselineModel(lines=lines, norm_stats=stats, feature_names=names)
