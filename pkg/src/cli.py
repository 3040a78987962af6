# src/cli.py
import argparse
import logging
import os
import sys
import traceback
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import baseline
from . import mlp
from . import synth
from .config import BASELINE_FIT_SETS, PipelineConfig, config
from .data import FEATURE_NAMES, LABEL_COLUMN, Dataset, balance_indices, describe, fit_norm_stats, normalize
from .data import normalize_matrix, parse_csv, split_indices, to_frame, write_csv
from .evaluation import SweepConfig, confusion, density_sweep, partial_auc, reference_roc, roc, stratify_by_size
from .evaluation import tpr_at_fpr
from .features import FEATURE_SETS, FraudScorer, Standardizer, feature_frame, read_feature_frame
from .mlp import TrainingError
from .parenclitic import build_weight_tensor, calibrate_alpha, load_threshold, networks_from_tensor
from .parenclitic import realized_density, save_threshold, write_edge_list
from .storage import ArtifactStore, write_frame
from .topo import topo_matrix
from .utils import file_digest, format_percent

logger = logging.getLogger(__name__)

# Рабочая точка ROC с дорогими ложными срабатываниями
LOW_FPR = 0.1


def _fraction(flag: str, closed: bool = False) -> Callable[[str], float]:
    """Тип argparse для доли; сообщение об ошибке называет флаг"""

    def parse(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag}: '{text}' не является числом")
        ok = 0.0 <= value <= 1.0 if closed else 0.0 < value < 1.0
        if not ok:
            interval = '[0, 1]' if closed else '(0, 1)'
            raise argparse.ArgumentTypeError(f"{flag} должен быть в {interval}, получено {text}")
        return value

    return parse


def _non_negative(flag: str, kind=float) -> Callable[[str], float]:
    def parse(text: str):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag}: '{text}' не является числом")
        if value < 0:
            raise argparse.ArgumentTypeError(f"{flag} не может быть отрицательным, получено {text}")
        return value

    return parse


class FraudPipelineCli:
    """Консольный драйвер пайплайна: generate → fit → features → train → sweep / roc / score"""

    def __init__(self):
        self.commands: Dict[str, Callable[[PipelineConfig, ArtifactStore], None]] = {
            'generate': self.generate_command,
            'fit': self.fit_command,
            'features': self.features_command,
            'train': self.train_command,
            'sweep': self.sweep_command,
            'roc': self.roc_command,
            'score': self.score_command,
        }

    # ------------------------------------------------------------------
    # Общие шаги

    def _load_split(self, cfg: PipelineConfig) -> Tuple[Dataset, np.ndarray, np.ndarray]:
        ds = parse_csv(cfg.dataset_path)
        train_idx, test_idx = split_indices(ds.labels(), cfg.train_fraction, cfg.seed)
        return ds, train_idx, test_idx

    def _eval_indices(self, cfg: PipelineConfig, labels: np.ndarray, test_idx: np.ndarray) -> np.ndarray:
        if not cfg.balanced_eval:
            return test_idx
        return test_idx[balance_indices(labels[test_idx], cfg.seed)]

    def _load_baseline(self, store: ArtifactStore) -> baseline.BaselineModel:
        model = baseline.load(store.require(store.baseline, 'fit'), FEATURE_NAMES)
        if model.norm_stats is None:
            raise ValueError(f"{store.baseline}: нет статистик нормализации, перезапустите 'fit'")
        return model

    # ------------------------------------------------------------------
    # Команды

    def generate_command(self, cfg: PipelineConfig, store: ArtifactStore):
        """Синтетический набор транзакций"""
        ds = synth.generate(cfg.synth_config())
        write_csv(ds, cfg.dataset_path)
        print(f"✅ Набор данных сохранён: {cfg.dataset_path}")
        for line in describe(ds):
            print(line)

    def fit_command(self, cfg: PipelineConfig, store: ArtifactStore):
        """Статистики нормализации и 28 линий нормы по легальным обучающим операциям"""
        ds, train_idx, _ = self._load_split(cfg)
        train = ds.subset(train_idx)
        train_n = normalize(train, fit_norm_stats(train, licit_only=True))
        if cfg.baseline_fit_set == 'balanced':
            train_n = train_n.subset(balance_indices(train_n.labels(), cfg.seed))

        model = baseline.fit(train_n, licit_only=True)
        baseline.save(model, store.baseline)
        degenerate = sum(line.degenerate for line in model.lines)
        print(f"✅ Базовая модель: {len(model.lines)} линий (вырожденных: {degenerate})")

    def features_command(self, cfg: PipelineConfig, store: ArtifactStore):
        """Порог α, сетевые метрики и таблица признаков выбранного набора"""
        model = self._load_baseline(store)
        ds, train_idx, _ = self._load_split(cfg)
        labels = ds.labels()

        weights = build_weight_tensor(normalize_matrix(ds.matrix(), model.norm_stats), model)
        licit_train = train_idx[labels[train_idx] == 0]
        thr = calibrate_alpha(weights[licit_train], cfg.density)
        print(
            f"📊 Плотность {cfg.density:g}: α = {thr.alpha:.6g}, "
            f"фактическая плотность {realized_density(weights[licit_train], thr):.4f}"
        )

        metrics = topo_matrix(weights, thr) if cfg.feature_set != 'raw' else None
        frame = feature_frame(ds.matrix(), metrics, labels, cfg.feature_set)
        features_path = store.features(cfg.feature_set)
        write_frame(features_path, frame)
        # α привязан к своей таблице: train сверяет контрольную сумму
        save_threshold(thr, store.threshold(cfg.feature_set), cfg.feature_set, file_digest(features_path))

        if cfg.dump_networks:
            count = min(cfg.dump_networks, len(ds))
            write_edge_list(store.networks, networks_from_tensor(weights[:count]), thr)

        print(f"✅ Признаки '{cfg.feature_set}': {frame.shape[1] - 1} колонок, {len(frame)} записей")

    def train_command(self, cfg: PipelineConfig, store: ArtifactStore):
        """Обучение MLP на сбалансированной обучающей выборке"""
        base = self._load_baseline(store)
        hint = f'features --feature-set {cfg.feature_set}'
        path = store.require(store.features(cfg.feature_set), hint)
        features, labels = read_feature_frame(path, cfg.feature_set)
        thr = load_threshold(store.require(store.threshold(cfg.feature_set), hint), cfg.feature_set, file_digest(path))

        train_idx, test_idx = split_indices(labels, cfg.train_fraction, cfg.seed)
        train_idx = train_idx[balance_indices(labels[train_idx], cfg.seed)]
        eval_idx = self._eval_indices(cfg, labels, test_idx)

        standardizer = None
        if cfg.feature_set != 'raw':
            n_raw = len(FEATURE_NAMES) if cfg.feature_set == 'combined' else 0
            standardizer = Standardizer.fit(features[train_idx, n_raw:])

        tc = cfg.train_config()
        scorer = FraudScorer(cfg.feature_set, base, thr, standardizer, model=None)
        x_train = scorer.inputs_from_features(features[train_idx])
        result = mlp.train(mlp.init(x_train.shape[1], tc), x_train, labels[train_idx], tc)
        scorer.model = result.model
        scorer.save(store.model(cfg.feature_set), tc)

        scores = mlp.forward(result.model, scorer.inputs_from_features(features[eval_idx]))
        cm = confusion(scores, labels[eval_idx], 0.5)
        mode = 'сбалансированной' if cfg.balanced_eval else 'полной'
        print(f"✅ Модель '{cfg.feature_set}' обучена на {len(train_idx)} записях, MSE = {result.final_loss:.6f}")
        print(f"📊 Ошибка на {mode} тестовой выборке ({len(eval_idx)} записей): {format_percent(cm.error)}")
        print(f"• TPR: {format_percent(cm.tpr)}")
        print(f"• FPR: {format_percent(cm.fpr)}")

    def sweep_command(self, cfg: PipelineConfig, store: ArtifactStore):
        """Ошибка трёх наборов признаков по сетке плотностей"""
        ds, train_idx, test_idx = self._load_split(cfg)
        sweep_cfg = SweepConfig(
            train=cfg.train_config(),
            seed=cfg.seed,
            baseline_fit_set=cfg.baseline_fit_set,
            balanced_eval=cfg.balanced_eval,
        )
        result = density_sweep(ds.subset(train_idx), ds.subset(test_idx), cfg.densities, sweep_cfg)
        write_frame(store.sweep, result.to_frame())

        best = result.densities.index(result.best_density)
        print(f"📊 Ошибка raw: {format_percent(result.error_raw[0])}")
        print(
            f"✅ Лучшая плотность combined: {result.best_density:g} "
            f"(ошибка {format_percent(result.error_combined[best])}, "
            f"снижение {result.reduction_combined[best]:.1f}%)"
        )

    def roc_command(self, cfg: PipelineConfig, store: ArtifactStore):
        """ROC обученных моделей, страты по размеру и эталонная оценка"""
        ds, _, test_idx = self._load_split(cfg)
        test = ds.subset(self._eval_indices(cfg, ds.labels(), test_idx))
        labels = test.labels()

        available = [name for name in FEATURE_SETS if os.path.exists(store.model(name))]
        if not available:
            raise FileNotFoundError(f"В {store.workdir} нет обученных моделей: сначала выполните 'train'")

        for name in available:
            scorer = FraudScorer.load(store.model(name), store.baseline)
            curve = roc(scorer.score(test), labels)
            write_frame(store.roc(name), curve.to_frame())
            print(
                f"📊 {name}: AUC = {curve.auc:.4f}, TPR при FPR {LOW_FPR:g} = {tpr_at_fpr(curve, LOW_FPR):.4f}, "
                f"частичная AUC = {partial_auc(curve, LOW_FPR):.4f}"
            )

        if cfg.feature_set in available:
            self._write_strata(cfg, store, test)
        else:
            print(f"⚠️ Нет модели '{cfg.feature_set}': ROC по размеру транзакции пропущена")

        reference = reference_roc(test)
        if reference is not None:
            write_frame(store.roc('reference'), reference.to_frame())
            print(f"📊 Оценка fraud_suspectness: AUC = {reference.auc:.4f}")

    def _write_strata(self, cfg: PipelineConfig, store: ArtifactStore, test: Dataset):
        scorer = FraudScorer.load(store.model(cfg.feature_set), store.baseline)
        rows = []
        for stratum in stratify_by_size(test, scorer, cfg.size_cutoffs):
            if stratum.defined:
                write_frame(store.roc(f'{cfg.feature_set}_size_{stratum.cutoff:g}'), stratum.curve.to_frame())
                print(f"📊 Размер ≥ {stratum.cutoff:g} €: {stratum.n} записей, AUC = {stratum.curve.auc:.4f}")
            else:
                print(f"⚠️ Размер ≥ {stratum.cutoff:g} €: ROC не определена ({stratum.reason})")
            rows.append({
                'cutoff': stratum.cutoff,
                'n': stratum.n,
                'auc': stratum.curve.auc if stratum.defined else np.nan,
                'status': 'ok' if stratum.defined else 'undefined',
            })
        write_frame(store.path('roc_strata.csv'), pd.DataFrame(rows))

    def score_command(self, cfg: PipelineConfig, store: ArtifactStore):
        """Оценка мошенничества для произвольного CSV"""
        scorer = FraudScorer.load(
            store.require(store.model(cfg.feature_set), f'train --feature-set {cfg.feature_set}'),
            store.require(store.baseline, 'fit'),
        )
        source = cfg.score_input or cfg.dataset_path
        ds = parse_csv(source, require_label=False)

        frame = to_frame(ds)
        if frame[LABEL_COLUMN].isna().all():
            frame = frame.drop(columns=[LABEL_COLUMN])
        frame['score'] = scorer.score(ds)

        target = cfg.score_output or store.path('scored.csv')
        write_frame(target, frame)
        print(f"✅ Оценено {len(ds)} транзакций моделью '{cfg.feature_set}'")

    # ------------------------------------------------------------------
    # Разбор аргументов

    def build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
        common.add_argument('--config', help='JSON-файл с параметрами (флаги имеют приоритет)')
        common.add_argument('--seed', type=int)
        common.add_argument('--workdir')
        common.add_argument('--dataset', help='путь к CSV вместо <workdir>/dataset.csv')

        split = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
        split.add_argument('--train-fraction', type=_fraction('--train-fraction'))
        split.add_argument('--baseline-fit-set', choices=BASELINE_FIT_SETS)

        model = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
        model.add_argument('--feature-set', choices=FEATURE_SETS)
        model.add_argument('--epochs', type=int)
        model.add_argument('--learning-rate', type=_non_negative('--learning-rate'))
        model.add_argument('--batch-size', type=int)
        model.add_argument('--init-range', type=_non_negative('--init-range'))
        model.add_argument('--unbalanced-eval', dest='balanced_eval', action='store_const', const=False,
                           help='оценивать на полной (несбалансированной) тестовой выборке')

        parser = argparse.ArgumentParser(
            prog='main.py',
            description=f"{config.APP_NAME} v{config.APP_VERSION}",
            parents=[common],
        )
        sub = parser.add_subparsers(dest='command', metavar='COMMAND')

        gen = sub.add_parser('generate', parents=[common], help='синтетический набор транзакций')
        gen.add_argument('--n', type=int, default=argparse.SUPPRESS)
        gen.add_argument('--fraud-fraction', type=_fraction('--fraud-fraction'), default=argparse.SUPPRESS)
        gen.add_argument('--noise-sd', type=_non_negative('--noise-sd'), default=argparse.SUPPRESS)
        gen.add_argument('--break-strength', type=_non_negative('--break-strength'), default=argparse.SUPPRESS)
        gen.add_argument('--marginal-shift', type=_non_negative('--marginal-shift'), default=argparse.SUPPRESS)

        sub.add_parser('fit', parents=[common, split], help='базовая модель нормальных связей')

        feat = sub.add_parser('features', parents=[common, split], help='порог α и таблица признаков')
        feat.add_argument('--density', type=_fraction('--density', closed=True), default=argparse.SUPPRESS)
        feat.add_argument('--feature-set', choices=FEATURE_SETS, default=argparse.SUPPRESS)
        feat.add_argument('--dump-networks', type=_non_negative('--dump-networks', int), default=argparse.SUPPRESS,
                          help='сохранить первые N сетей в networks.txt')

        sub.add_parser('train', parents=[common, split, model], help='обучение MLP')

        sweep = sub.add_parser('sweep', parents=[common, split, model], help='ошибка по сетке плотностей')
        sweep.add_argument('--densities', type=_fraction('--densities', closed=True), nargs='+',
                           default=argparse.SUPPRESS)

        roc_parser = sub.add_parser('roc', parents=[common, split, model], help='ROC-кривые')
        roc_parser.add_argument('--size-cutoffs', type=_non_negative('--size-cutoffs'), nargs='+',
                                default=argparse.SUPPRESS)

        score = sub.add_parser('score', parents=[common, model], help='оценка произвольного CSV')
        score.add_argument('--input', dest='score_input', default=argparse.SUPPRESS)
        score.add_argument('--output', dest='score_output', default=argparse.SUPPRESS)
        return parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Разбор аргументов и запуск команды; возвращает код выхода"""
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return int(e.code or 0)

        options = vars(args)
        command = options.pop('command', None)
        if command is None:
            parser.print_help(sys.stderr)
            return 2
        config_path = options.pop('config', None)

        try:
            config.validate()
            cfg = PipelineConfig.from_sources(config_path, options)
            store = ArtifactStore(cfg.workdir)
            logger.info("Команда %s, рабочий каталог %s, seed=%d", command, cfg.workdir, cfg.seed)
            self.commands[command](cfg, store)
        except (ValueError, FileNotFoundError, TrainingError) as e:
            print(f"❌ {e}", file=sys.stderr)
            return 1
        except Exception as e:
            print(f"💥 Критическая ошибка: {e}", file=sys.stderr)
            traceback.print_exc()
            return 1
        return 0
