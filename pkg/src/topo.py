# src/topo.py
import logging
import math
import warnings
from dataclasses import astuple, dataclass
from functools import lru_cache
from typing import Tuple

import networkx as nx
import numpy as np

from .parenclitic import BinaryNetwork, DensityThreshold, binarize_tensor

logger = logging.getLogger(__name__)

METRIC_NAMES: Tuple[str, ...] = (
    'max_degree',
    'degree_entropy',
    'assortativity',
    'clustering',
    'geodesic',
    'efficiency',
    'information_content',
)


@dataclass(frozen=True)
class TopoFeatures:
    """Семь структурных метрик бинарной сети"""

    max_degree: int
    degree_entropy: float
    assortativity: float
    clustering: float
    geodesic: float
    efficiency: float
    information_content: float

    def as_tuple(self) -> Tuple[float, ...]:
        return astuple(self)


def to_graph(g: BinaryNetwork) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(g.k))
    rows, cols = np.nonzero(np.triu(g.adjacency, 1))
    graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return graph


def _degrees(g: BinaryNetwork) -> np.ndarray:
    return g.adjacency.sum(axis=1).astype(int)


def max_degree(g: BinaryNetwork) -> int:
    degrees = _degrees(g)
    return int(degrees.max()) if degrees.size else 0


def degree_entropy(g: BinaryNetwork) -> float:
    """Энтропия Шеннона распределения степеней (натуральный логарифм)"""
    degrees = _degrees(g)
    if degrees.size == 0:
        return 0.0
    p = np.bincount(degrees) / degrees.size
    p = p[p > 0]
    return float(-np.sum(p * np.log(p))) + 0.0


def assortativity(g: BinaryNetwork) -> float:
    """Корреляция Пирсона степеней концов связей; 0 при нулевой дисперсии"""
    graph = to_graph(g)
    if graph.number_of_edges() == 0:
        return 0.0
    with warnings.catch_warnings():
        # Регулярный граф: pearsonr предупреждает о постоянном входе и даёт nan
        warnings.simplefilter('ignore')
        r = nx.degree_pearson_correlation_coefficient(graph)
    if not math.isfinite(r):
        return 0.0
    return min(1.0, max(-1.0, float(r)))


def clustering(g: BinaryNetwork) -> float:
    """Транзитивность: 3·треугольники / связные тройки"""
    return float(nx.transitivity(to_graph(g)))


def _path_lengths(g: BinaryNetwork):
    return dict(nx.all_pairs_shortest_path_length(to_graph(g)))


def geodesic(g: BinaryNetwork) -> float:
    """Средняя длина кратчайшего пути по достижимым парам"""
    lengths = _path_lengths(g)
    total, pairs = 0, 0
    for u in range(g.k):
        for v, d in lengths[u].items():
            if v > u:
                total += d
                pairs += 1
    return total / pairs if pairs else 0.0


def efficiency(g: BinaryNetwork) -> float:
    """Глобальная эффективность; недостижимые пары дают 0"""
    return float(nx.global_efficiency(to_graph(g)))


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def information_content(g: BinaryNetwork) -> float:
    """Жадное слияние узлов с энтропийной ценой (бит).

    На каждом шаге сливается пара (u, v) с минимальной ценой L·H(p), где
    L: число прочих узлов, p: доля прочих узлов, по которым строки u и v
    расходятся. Строка нового узла равна поэлементному ИЛИ. Ничьи разрешаются
    лексикографически наименьшей парой.
    """
    if g.k < 2:
        raise ValueError(f"Information content определён для k ≥ 2, получено k = {g.k}")

    rows = g.adjacency.astype(bool).copy()
    total = 0.0
    while rows.shape[0] > 1:
        m = rows.shape[0]
        best = None
        for u in range(m):
            for v in range(u + 1, m):
                others = np.ones(m, dtype=bool)
                others[[u, v]] = False
                comparable = int(others.sum())
                if comparable:
                    p = np.count_nonzero(rows[u, others] != rows[v, others]) / comparable
                else:
                    p = 0.0
                cost = comparable * _binary_entropy(p)
                if best is None or cost < best[0]:
                    best = (cost, u, v)

        cost, u, v = best
        total += cost
        merged = rows[u] | rows[v]
        rows[u] = merged
        rows[:, u] = merged
        rows[u, u] = False
        rows = np.delete(np.delete(rows, v, axis=0), v, axis=1)
    return total


def extract_all(g: BinaryNetwork) -> TopoFeatures:
    return TopoFeatures(
        max_degree=max_degree(g),
        degree_entropy=degree_entropy(g),
        assortativity=assortativity(g),
        clustering=clustering(g),
        geodesic=geodesic(g),
        efficiency=efficiency(g),
        information_content=information_content(g),
    )


@lru_cache(maxsize=65536)
def _cached_metrics(k: int, packed: bytes) -> Tuple[float, ...]:
    upper = np.unpackbits(np.frombuffer(packed, dtype=np.uint8))[: k * (k - 1) // 2].astype(bool)
    adjacency = np.zeros((k, k), dtype=bool)
    adjacency[np.triu_indices(k, 1)] = upper
    adjacency |= adjacency.T
    return extract_all(BinaryNetwork(adjacency=adjacency)).as_tuple()


def topo_matrix(weights: np.ndarray, thr: DensityThreshold) -> np.ndarray:
    """Метрики бинаризованных сетей для тензора весов n×k×k → n×7"""
    adjacency = binarize_tensor(weights, thr)
    k = weights.shape[-1]
    rows, cols = np.triu_indices(k, 1)
    out = np.empty((weights.shape[0], len(METRIC_NAMES)))
    for n, a in enumerate(adjacency):
        out[n] = _cached_metrics(k, np.packbits(a[rows, cols]).tobytes())
    logger.debug("Метрики посчитаны для %d сетей (кэш: %s)", weights.shape[0], _cached_metrics.cache_info())
    return out
