# src/parenclitic.py
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .baseline import BaselineModel, pair_distances, point_line_distance
from .storage import ArtifactFormatError, read_json, require_keys, write_json, write_text

logger = logging.getLogger(__name__)

THRESHOLD_KIND = 'threshold'


@dataclass(frozen=True)
class WeightedNetwork:
    """Взвешенная сеть транзакции: w[i][j] это отклонение пары от линии нормы"""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"Матрица весов должна быть квадратной, получено {w.shape}")
        if not np.array_equal(w, w.T):
            raise ValueError("Матрица весов должна быть симметричной")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("Диагональ матрицы весов должна быть нулевой")
        if not np.all(w >= 0.0):
            raise ValueError("Веса связей должны быть неотрицательными")
        w.flags.writeable = False
        object.__setattr__(self, 'weights', w)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    def upper(self) -> np.ndarray:
        """Веса строго верхнего треугольника"""
        return self.weights[np.triu_indices(self.k, 1)]


@dataclass(frozen=True)
class BinaryNetwork:
    """Бинаризованная сеть: симметричная матрица смежности без петель"""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"Матрица смежности должна быть квадратной, получено {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("Матрица смежности должна быть симметричной")
        if np.diag(a).any():
            raise ValueError("Петли в матрице смежности недопустимы")
        a.flags.writeable = False
        object.__setattr__(self, 'adjacency', a)

    @property
    def k(self) -> int:
        return self.adjacency.shape[0]

    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def density(self) -> float:
        pairs = self.k * (self.k - 1) // 2
        return self.edge_count() / pairs if pairs else 0.0


@dataclass(frozen=True)
class DensityThreshold:
    """Глобальный порог α, соответствующий целевой плотности связей"""

    density: float
    alpha: float

    def to_dict(self) -> dict:
        return {'density': self.density, 'alpha': self.alpha}

    @classmethod
    def from_dict(cls, payload: dict) -> 'DensityThreshold':
        return cls(density=float(payload['density']), alpha=float(payload['alpha']))


def build_weighted(t: Sequence[float], model: BaselineModel) -> WeightedNetwork:
    """Сеть одной нормализованной транзакции"""
    t = np.asarray(t, dtype=float)
    if t.shape != (model.k,):
        raise ValueError(f"Транзакция с {t.size} признаками, модель ожидает {model.k}")

    w = np.zeros((model.k, model.k))
    for line in model.lines:
        w[line.i, line.j] = w[line.j, line.i] = point_line_distance((t[line.i], t[line.j]), line)
    return WeightedNetwork(weights=w)


def build_weight_tensor(matrix: np.ndarray, model: BaselineModel) -> np.ndarray:
    """Веса сетей для многих транзакций сразу: массив n×k×k"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != model.k:
        raise ValueError(f"Матрица признаков {matrix.shape}, модель ожидает {model.k} признаков")

    weights = np.zeros((matrix.shape[0], model.k, model.k))
    for line in model.lines:
        d = pair_distances(matrix[:, line.i], matrix[:, line.j], line)
        weights[:, line.i, line.j] = d
        weights[:, line.j, line.i] = d
    return weights


def networks_from_tensor(weights: np.ndarray) -> List[WeightedNetwork]:
    return [WeightedNetwork(weights=w) for w in weights]


def _pool(networks) -> np.ndarray:
    """Все веса верхних треугольников обучающих сетей"""
    if isinstance(networks, np.ndarray):
        if networks.ndim != 3 or networks.shape[0] == 0:
            raise ValueError("Для калибровки α нужна хотя бы одна сеть")
        rows, cols = np.triu_indices(networks.shape[1], 1)
        return networks[:, rows, cols].ravel()

    networks = list(networks)
    if not networks:
        raise ValueError("Для калибровки α нужна хотя бы одна сеть")
    return np.concatenate([n.upper() for n in networks])


def calibrate_alpha(training_networks, density: float) -> DensityThreshold:
    """α: такой вес, что доля пуловых весов ≥ α впервые достигает density.

    Принимает коллекцию WeightedNetwork или тензор весов n×k×k.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"Плотность должна быть в [0, 1], получено {density}")
    pool = _pool(training_networks)

    if density == 0.0 or pool.size == 0:
        return DensityThreshold(density=density, alpha=math.inf)

    descending = np.sort(pool)[::-1]
    needed = max(math.ceil(density * pool.size - 1e-9), 1)
    alpha = float(descending[needed - 1])
    logger.debug("Плотность %.3f → α = %.6g (пул %d весов)", density, alpha, pool.size)
    return DensityThreshold(density=density, alpha=alpha)


def binarize(wn: WeightedNetwork, thr: DensityThreshold) -> BinaryNetwork:
    """Связь (i, j) есть тогда и только тогда, когда w[i][j] ≥ α"""
    adjacency = wn.weights >= thr.alpha
    np.fill_diagonal(adjacency, False)
    return BinaryNetwork(adjacency=adjacency)


def binarize_tensor(weights: np.ndarray, thr: DensityThreshold) -> np.ndarray:
    adjacency = weights >= thr.alpha
    k = weights.shape[-1]
    adjacency[:, np.arange(k), np.arange(k)] = False
    return adjacency


def realized_density(weights: np.ndarray, thr: DensityThreshold) -> float:
    """Средняя фактическая плотность связей по набору сетей"""
    k = weights.shape[-1]
    rows, cols = np.triu_indices(k, 1)
    return float(np.mean(weights[:, rows, cols] >= thr.alpha))


def format_edge_list(wn: WeightedNetwork, thr: DensityThreshold) -> str:
    """Дамп сети: строка «k density alpha», затем «i j weight» на каждую связь"""
    g = binarize(wn, thr)
    lines = [f"{wn.k} {thr.density!r} {thr.alpha!r}"]
    for i, j in zip(*np.nonzero(np.triu(g.adjacency, 1))):
        lines.append(f"{i} {j} {float(wn.weights[i, j])!r}")
    return "\n".join(lines) + "\n"


def write_edge_list(path: str, networks: Iterable[WeightedNetwork], thr: DensityThreshold):
    write_text(path, "".join(format_edge_list(wn, thr) for wn in networks))


def save_threshold(thr: DensityThreshold, path: str, feature_set: Optional[str] = None,
                   features_digest: Optional[str] = None):
    """Сохраняет α; для таблицы признаков также её набор и контрольную сумму"""
    payload = thr.to_dict()
    if feature_set is not None:
        payload['feature_set'] = feature_set
    if features_digest is not None:
        payload['features_sha256'] = features_digest
    write_json(path, THRESHOLD_KIND, payload)


def load_threshold(path: str, feature_set: Optional[str] = None,
                   features_digest: Optional[str] = None) -> DensityThreshold:
    """Чтение α; при заданных feature_set / features_digest проверяет, что порог
    построен вместе с этой таблицей признаков"""
    document = read_json(path, THRESHOLD_KIND)
    require_keys(document, ('density', 'alpha'), path)

    if feature_set is not None and document.get('feature_set') != feature_set:
        raise ArtifactFormatError(
            f"{path}: порог построен для набора '{document.get('feature_set')}', ожидался '{feature_set}'"
        )
    if features_digest is not None and document.get('features_sha256') != features_digest:
        raise ArtifactFormatError(
            f"{path}: таблица признаков изменилась после расчёта α, "
            f"перезапустите 'features --feature-set {feature_set or document.get('feature_set')}'"
        )
    return DensityThreshold.from_dict(document)
