# src/synth.py
import logging
import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from .data import FEATURE_NAMES, Dataset, TransactionRecord

logger = logging.getLogger(__name__)

# Направления нагрузок признаков на два общих латентных фактора (в градусах).
# Порядок совпадает с FEATURE_NAMES.
LOADING_ANGLES = (0.0, 125.0, 20.0, 35.0, 150.0, 60.0, 95.0, 170.0)

# Аффинные отображения латентного канала в единицы признака: (центр, масштаб)
FEATURE_SCALES: Dict[str, tuple] = {
    'transaction_size': (150.0, 60.0),
    'time_since_last': (36000.0, 12000.0),
    'last_transaction_size': (150.0, 60.0),
    'avg_transaction_size': (150.0, 40.0),
    'avg_time_between': (43200.0, 10000.0),
    'hour_of_day': (13.0, 5.0),
    'fraud_rate': (0.02, 0.005),
}

SIZE_CHANNEL = FEATURE_NAMES.index('transaction_size')
HOUR_CHANNEL = FEATURE_NAMES.index('hour_of_day')
MIN_BROKEN, MAX_BROKEN = 3, 6


@dataclass(frozen=True)
class SynthConfig:
    """Параметры генератора синтетических транзакций"""

    n: int = 2000
    fraud_fraction: float = 0.1
    noise_sd: float = 0.2
    break_strength: float = 3.0
    seed: int = 1
    marginal_shift: float = 0.0

    def validate(self):
        if self.n < 10:
            raise ValueError(f"n должно быть ≥ 10, получено {self.n}")
        if not 0.0 < self.fraud_fraction < 1.0:
            raise ValueError(f"fraud_fraction должен быть в (0, 1), получено {self.fraud_fraction}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd не может быть отрицательным: {self.noise_sd}")
        if self.break_strength < 0:
            raise ValueError(f"break_strength не может быть отрицательным: {self.break_strength}")
        if self.marginal_shift < 0:
            raise ValueError(f"marginal_shift не может быть отрицательным: {self.marginal_shift}")


def loadings() -> np.ndarray:
    """Единичные векторы нагрузок k×2"""
    angles = np.radians(LOADING_ANGLES)
    return np.column_stack([np.cos(angles), np.sin(angles)])


def fraud_count(cfg: SynthConfig) -> int:
    return min(max(int(round(cfg.n * cfg.fraud_fraction)), 1), cfg.n - 1)


def _break_correlations(u: np.ndarray, cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Разрушает парные корреляции случайного подмножества каналов.

    Выбранный канал заменяется на (±u + s·η) / sqrt(1 + s²): маргинальное
    распределение сохраняется, связь с остальными каналами ослабевает
    (или меняет знак) с ростом s = break_strength.
    """
    n, k = u.shape
    s = cfg.break_strength

    sizes = rng.integers(MIN_BROKEN, MAX_BROKEN + 1, size=n)
    order = rng.random((n, k)).argsort(axis=1).argsort(axis=1)
    mask = order < sizes[:, None]

    flips = np.where(rng.random((n, k)) < 0.5, -1.0, 1.0) if s > 0 else np.ones((n, k))
    eta = rng.standard_normal((n, k))
    broken = (flips * u + s * eta) / math.sqrt(1.0 + s * s)

    shifted = np.where(mask, broken, u)
    # По умолчанию 0; при marginal_shift > 0 размер и час тоже несут слабый сигнал
    shift = cfg.marginal_shift * min(1.0, s)
    shifted[:, SIZE_CHANNEL] += shift
    shifted[:, HOUR_CHANNEL] -= shift
    return shifted


def _channels_to_features(u: np.ndarray) -> np.ndarray:
    """Латентные каналы → признаки в доменных единицах и ограничениях"""
    features = np.empty_like(u)
    for c, name in enumerate(FEATURE_NAMES):
        if name == 'same_shop':
            features[:, c] = (u[:, c] > 0).astype(float)
            continue
        center, scale = FEATURE_SCALES[name]
        values = center + scale * u[:, c]
        if name == 'hour_of_day':
            values = np.clip(np.rint(values), 1, 24)
        elif name == 'fraud_rate':
            values = np.round(np.clip(values, 0.0, 1.0), 6)
        elif name in ('time_since_last', 'avg_time_between'):
            values = np.rint(np.maximum(values, 0.0))
        else:
            values = np.round(np.maximum(values, 0.0), 2)
        features[:, c] = values
    return features


def generate(cfg: SynthConfig) -> Dataset:
    """Синтетический набор: легальные записи следуют заложенным линейным связям"""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    n_fraud = fraud_count(cfg)
    n_licit = cfg.n - n_fraud

    z = rng.standard_normal((cfg.n, 2))
    u = z @ loadings().T
    u[n_licit:] = _break_correlations(u[n_licit:], cfg, rng)
    u += cfg.noise_sd * rng.standard_normal(u.shape)

    features = _channels_to_features(u)
    labels = np.concatenate([np.zeros(n_licit, dtype=int), np.ones(n_fraud, dtype=int)])
    suspectness = np.clip(np.rint(30 + 25 * labels + 15 * rng.standard_normal(cfg.n)), 0, 100)

    order = rng.permutation(cfg.n)
    records = tuple(
        TransactionRecord(
            **{name: float(features[i, c]) for c, name in enumerate(FEATURE_NAMES)},
            fraud=int(labels[i]),
            fraud_suspectness=int(suspectness[i]),
        )
        for i in order
    )

    logger.info("Сгенерировано %d транзакций (%d мошеннических), seed=%d", cfg.n, n_fraud, cfg.seed)
    return Dataset(records=records)
