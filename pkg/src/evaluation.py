# src/evaluation.py
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import baseline
from . import mlp
from .data import Dataset, balance_indices, fit_norm_stats, normalize
from .features import Standardizer, assemble
from .parenclitic import build_weight_tensor, calibrate_alpha
from .topo import topo_matrix

logger = logging.getLogger(__name__)


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def tpr(self) -> float:
        positives = self.tp + self.fn
        return self.tp / positives if positives else 0.0

    @property
    def fpr(self) -> float:
        negatives = self.fp + self.tn
        return self.fp / negatives if negatives else 0.0

    @property
    def error(self) -> float:
        """Доля неверно классифицированных"""
        total = self.tp + self.fp + self.tn + self.fn
        return (self.fp + self.fn) / total if total else 0.0


@dataclass(frozen=True)
class RocCurve:
    """Точки (FPR, TPR) от порога +∞ вниз и площадь под кривой"""

    points: Tuple[Tuple[float, float], ...]
    thresholds: Tuple[float, ...]
    auc: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'threshold': list(self.thresholds),
            'fpr': [p[0] for p in self.points],
            'tpr': [p[1] for p in self.points],
        })


def _check_scores(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape:
        raise ValueError(f"Длины оценок ({scores.size}) и меток ({labels.size}) не совпадают")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("Метки должны быть из {0, 1}")
    return scores, labels


def confusion(scores, labels, threshold: float = 0.5) -> Confusion:
    """Матрица ошибок; положительный ответ при score ≥ threshold"""
    scores, labels = _check_scores(scores, labels)
    positive = scores >= threshold
    return Confusion(
        tp=int(np.sum(positive & (labels == 1))),
        fp=int(np.sum(positive & (labels == 0))),
        tn=int(np.sum(~positive & (labels == 0))),
        fn=int(np.sum(~positive & (labels == 1))),
    )


def roc(scores, labels) -> RocCurve:
    """ROC по всем различным значениям оценки; AUC методом трапеций"""
    scores, labels = _check_scores(scores, labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"Для ROC нужны оба класса: положительных {n_pos}, отрицательных {n_neg}")

    order = np.argsort(-scores, kind='mergesort')
    s = scores[order]
    y = labels[order]
    # Последний индекс каждой группы равных оценок
    group_end = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(y)[group_end]
    fp = (group_end + 1) - tp

    tp = np.r_[0, tp]
    fp = np.r_[0, fp]
    # Удвоенная площадь в целых числах: точное значение до деления
    area2 = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    auc = area2 / (2.0 * n_pos * n_neg)

    points = tuple((int(f) / n_neg, int(t) / n_pos) for f, t in zip(fp, tp))
    thresholds = (math.inf,) + tuple(float(v) for v in s[group_end])
    return RocCurve(points=points, thresholds=thresholds, auc=auc)


def tpr_at_fpr(curve: RocCurve, max_fpr: float) -> float:
    """TPR кривой при заданном FPR (линейная интерполяция)"""
    fpr = np.array([p[0] for p in curve.points])
    tpr = np.array([p[1] for p in curve.points])
    return float(np.interp(max_fpr, fpr, tpr))


def partial_auc(curve: RocCurve, max_fpr: float) -> float:
    """Площадь под ROC на участке FPR ∈ [0, max_fpr]"""
    if not 0.0 < max_fpr <= 1.0:
        raise ValueError(f"max_fpr должен быть в (0, 1], получено {max_fpr}")
    fpr = [p[0] for p in curve.points if p[0] <= max_fpr]
    tpr = [p[1] for p in curve.points if p[0] <= max_fpr]
    if fpr[-1] < max_fpr:
        fpr.append(max_fpr)
        tpr.append(tpr_at_fpr(curve, max_fpr))
    return float(sum((x2 - x1) * (y1 + y2) / 2.0 for x1, x2, y1, y2 in zip(fpr, fpr[1:], tpr, tpr[1:])))


def reference_roc(ds: Dataset) -> Optional[RocCurve]:
    """ROC пассивной оценки коммерческой системы (fraud_suspectness), если она есть"""
    if not ds.has_suspectness():
        return None
    labels = ds.labels()
    if len(set(labels.tolist())) < 2:
        return None
    return roc([r.fraud_suspectness / 100.0 for r in ds.records], labels)


@dataclass(frozen=True)
class StratumRoc:
    cutoff: float
    n: int
    curve: Optional[RocCurve]
    reason: str = ''

    @property
    def defined(self) -> bool:
        return self.curve is not None


def stratify_by_size(test: Dataset, model, cutoffs: Sequence[float]) -> List[StratumRoc]:
    """ROC по подвыборкам с transaction_size ≥ порога.

    model: любой объект с методом score(Dataset); страта с одним классом
    помечается как неопределённая.
    """
    cutoffs = [float(c) for c in cutoffs]
    if any(b < a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError(f"Пороги размера должны быть неубывающими: {cutoffs}")

    sizes = np.array([r.transaction_size for r in test.records])
    labels = test.labels()
    scores = np.asarray(model.score(test))

    strata = []
    for cutoff in cutoffs:
        mask = sizes >= cutoff
        n = int(mask.sum())
        classes = set(labels[mask].tolist())
        if classes != {0, 1}:
            reason = 'нет записей' if n == 0 else 'только один класс'
            logger.warning("Страта ≥ %.0f €: ROC не определена (%s)", cutoff, reason)
            strata.append(StratumRoc(cutoff=cutoff, n=n, curve=None, reason=reason))
            continue
        strata.append(StratumRoc(cutoff=cutoff, n=n, curve=roc(scores[mask], labels[mask])))
    return strata


@dataclass(frozen=True)
class SweepConfig:
    train: mlp.TrainConfig = field(default_factory=mlp.TrainConfig)
    seed: int = 1
    baseline_fit_set: str = 'licit'
    balanced_eval: bool = True


@dataclass(frozen=True)
class SweepResult:
    """Ошибки классификации трёх наборов признаков по сетке плотностей"""

    densities: Tuple[float, ...]
    error_raw: Tuple[float, ...]
    error_parenclitic: Tuple[float, ...]
    error_combined: Tuple[float, ...]
    tpr_raw: Tuple[float, ...]
    tpr_parenclitic: Tuple[float, ...]
    tpr_combined: Tuple[float, ...]
    alphas: Tuple[float, ...]

    @property
    def best_density(self) -> float:
        return self.densities[int(np.argmin(self.error_combined))]

    def _reduction(self, errors: Sequence[float]) -> Tuple[float, ...]:
        return tuple(
            100.0 * (raw - e) / raw if raw > 0 else 0.0
            for raw, e in zip(self.error_raw, errors)
        )

    @property
    def reduction_parenclitic(self) -> Tuple[float, ...]:
        """Снижение ошибки относительно сырых признаков, %"""
        return self._reduction(self.error_parenclitic)

    @property
    def reduction_combined(self) -> Tuple[float, ...]:
        return self._reduction(self.error_combined)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'density': list(self.densities),
            'alpha': list(self.alphas),
            'error_raw': list(self.error_raw),
            'error_parenclitic': list(self.error_parenclitic),
            'error_combined': list(self.error_combined),
            'tpr_raw': list(self.tpr_raw),
            'tpr_parenclitic': list(self.tpr_parenclitic),
            'tpr_combined': list(self.tpr_combined),
            'reduction_parenclitic': list(self.reduction_parenclitic),
            'reduction_combined': list(self.reduction_combined),
        })


def train_and_evaluate(x_train: np.ndarray, y_train: np.ndarray, x_test: np.ndarray, y_test: np.ndarray,
                       cfg: mlp.TrainConfig) -> Tuple[mlp.MlpModel, Confusion]:
    """Обучает MLP и считает матрицу ошибок на тесте при пороге 0.5"""
    result = mlp.train(mlp.init(x_train.shape[1], cfg), x_train, y_train, cfg)
    _, scores = mlp.predict(result.model, x_test, 0.5)
    return result.model, confusion(scores, y_test, 0.5)


def density_sweep(train: Dataset, test: Dataset, densities: Sequence[float], cfg: SweepConfig) -> SweepResult:
    """Ошибка raw / parenclitic / combined для каждой плотности связей"""
    densities = [float(d) for d in densities]
    if not densities:
        raise ValueError("Список плотностей пуст")
    bad = [d for d in densities if not 0.0 <= d <= 1.0]
    if bad:
        raise ValueError(f"Плотности вне [0, 1]: {bad}")

    stats = fit_norm_stats(train, licit_only=True)
    train_n = normalize(train, stats)
    test_n = normalize(test, stats)
    y_train_all = train.labels()
    y_test_all = test.labels()

    train_idx = balance_indices(y_train_all, cfg.seed)
    fit_set = train_n.subset(train_idx) if cfg.baseline_fit_set == 'balanced' else train_n
    model = baseline.fit(fit_set, licit_only=True)

    test_idx = balance_indices(y_test_all, cfg.seed) if cfg.balanced_eval else np.arange(len(test))
    raw_train = train_n.matrix()[train_idx]
    raw_test = test_n.matrix()[test_idx]
    y_train = y_train_all[train_idx]
    y_test = y_test_all[test_idx]

    licit_weights = build_weight_tensor(train_n.matrix()[y_train_all == 0], model)
    w_train = build_weight_tensor(raw_train, model)
    w_test = build_weight_tensor(raw_test, model)

    # Сырые признаки не зависят от бинаризации: одна модель на всю сетку
    _, raw_cm = train_and_evaluate(raw_train, y_train, raw_test, y_test, cfg.train)
    logger.info("Сырые признаки: ошибка %.4f, TPR %.4f", raw_cm.error, raw_cm.tpr)

    rows: Dict[str, List[float]] = {name: [] for name in ('err_p', 'err_c', 'tpr_p', 'tpr_c', 'alpha')}
    for density in densities:
        thr = calibrate_alpha(licit_weights, density)
        m_train = topo_matrix(w_train, thr)
        m_test = topo_matrix(w_test, thr)
        std = Standardizer.fit(m_train)

        results = {}
        for name in ('parenclitic', 'combined'):
            x_tr = assemble(raw_train, std.transform(m_train), name)
            x_te = assemble(raw_test, std.transform(m_test), name)
            _, results[name] = train_and_evaluate(x_tr, y_train, x_te, y_test, cfg.train)

        rows['alpha'].append(thr.alpha)
        rows['err_p'].append(results['parenclitic'].error)
        rows['err_c'].append(results['combined'].error)
        rows['tpr_p'].append(results['parenclitic'].tpr)
        rows['tpr_c'].append(results['combined'].tpr)
        logger.info(
            "Плотность %.2f (α = %.4g): ошибка parenclitic %.4f, combined %.4f; TPR %.4f / %.4f",
            density, thr.alpha, results['parenclitic'].error, results['combined'].error,
            results['parenclitic'].tpr, results['combined'].tpr,
        )

    n = len(densities)
    return SweepResult(
        densities=tuple(densities),
        error_raw=(raw_cm.error,) * n,
        error_parenclitic=tuple(rows['err_p']),
        error_combined=tuple(rows['err_c']),
        tpr_raw=(raw_cm.tpr,) * n,
        tpr_parenclitic=tuple(rows['tpr_p']),
        tpr_combined=tuple(rows['tpr_c']),
        alphas=tuple(rows['alpha']),
    )
