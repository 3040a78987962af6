# src/config.py
import json
import os
from dataclasses import dataclass, field, fields, asdict
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from .features import FEATURE_SETS
from .mlp import TrainConfig
from .synth import SynthConfig

load_dotenv()

BASELINE_FIT_SETS = ('licit', 'balanced')
DEFAULT_DENSITIES = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
DEFAULT_SIZE_CUTOFFS = [0.0, 100.0, 400.0, 1600.0]


class Config:
    """Конфигурация приложения (значения по умолчанию из окружения)"""

    # Рабочий каталог и воспроизводимость
    WORKDIR = os.getenv('FRAUD_WORKDIR', 'work')
    SEED = int(os.getenv('FRAUD_SEED', 1))
    TRAIN_FRACTION = float(os.getenv('FRAUD_TRAIN_FRACTION', 0.8))

    # Плотность связей паренклитических сетей
    DENSITY = float(os.getenv('FRAUD_DENSITY', 0.6))

    # Обучение перцептрона
    LEARNING_RATE = float(os.getenv('FRAUD_LEARNING_RATE', 0.1))
    EPOCHS = int(os.getenv('FRAUD_EPOCHS', 200))
    BATCH_SIZE = int(os.getenv('FRAUD_BATCH_SIZE', 32))
    INIT_RANGE = float(os.getenv('FRAUD_INIT_RANGE', 0.5))
    FEATURE_SET = os.getenv('FRAUD_FEATURE_SET', 'combined')

    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

    APP_NAME = "🕸️ Parenclitic fraud detector"
    APP_VERSION = "1.0"

    @classmethod
    def validate(cls):
        """Проверка конфигурации"""
        invalid = []
        if not 0.0 < cls.TRAIN_FRACTION < 1.0:
            invalid.append('FRAUD_TRAIN_FRACTION')
        if not 0.0 <= cls.DENSITY <= 1.0:
            invalid.append('FRAUD_DENSITY')
        if cls.LEARNING_RATE < 0:
            invalid.append('FRAUD_LEARNING_RATE')
        if cls.EPOCHS < 1:
            invalid.append('FRAUD_EPOCHS')
        if cls.BATCH_SIZE < 1:
            invalid.append('FRAUD_BATCH_SIZE')
        if cls.INIT_RANGE < 0:
            invalid.append('FRAUD_INIT_RANGE')
        if cls.FEATURE_SET not in FEATURE_SETS:
            invalid.append('FRAUD_FEATURE_SET')

        if invalid:
            raise ValueError(f"Некорректные переменные окружения: {', '.join(invalid)}")


config = Config()


@dataclass
class PipelineConfig:
    """Параметры запуска пайплайна: окружение < JSON-файл < флаги"""

    workdir: str = config.WORKDIR
    dataset: Optional[str] = None
    seed: int = config.SEED
    train_fraction: float = config.TRAIN_FRACTION
    density: float = config.DENSITY
    densities: List[float] = field(default_factory=lambda: list(DEFAULT_DENSITIES))
    learning_rate: float = config.LEARNING_RATE
    epochs: int = config.EPOCHS
    batch_size: int = config.BATCH_SIZE
    init_range: float = config.INIT_RANGE
    feature_set: str = config.FEATURE_SET
    size_cutoffs: List[float] = field(default_factory=lambda: list(DEFAULT_SIZE_CUTOFFS))
    baseline_fit_set: str = 'licit'
    balanced_eval: bool = True
    dump_networks: int = 0

    # generate
    n: int = 2000
    fraud_fraction: float = 0.1
    noise_sd: float = 0.2
    break_strength: float = 3.0
    marginal_shift: float = 0.0

    # score
    score_input: Optional[str] = None
    score_output: Optional[str] = None

    @classmethod
    def from_sources(cls, config_path: Optional[str] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> 'PipelineConfig':
        """Собирает конфигурацию: JSON-файл поверх окружения, флаги поверх всего"""
        values: Dict[str, Any] = {}
        known = {f.name for f in fields(cls)}

        if config_path:
            try:
                with open(config_path, encoding='utf-8') as fh:
                    payload = json.load(fh)
            except FileNotFoundError:
                raise ValueError(f"Файл конфигурации не найден: {config_path}")
            except json.JSONDecodeError as e:
                raise ValueError(f"Файл конфигурации {config_path} не является JSON: {e}")
            if not isinstance(payload, dict):
                raise ValueError(f"Файл конфигурации {config_path} должен содержать JSON-объект")

            unknown = sorted(set(payload) - known)
            if unknown:
                raise ValueError(f"Неизвестные ключи в {config_path}: {', '.join(unknown)}")
            values.update(payload)

        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key not in known:
                raise ValueError(f"Неизвестный параметр: {key}")
            values[key] = value

        cfg = cls(**values)
        cfg.validate()
        return cfg

    @property
    def dataset_path(self) -> str:
        return self.dataset or os.path.join(self.workdir, 'dataset.csv')

    def validate(self):
        """Проверка согласованности параметров"""
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction должен быть в (0, 1), получено {self.train_fraction}")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density должен быть в [0, 1], получено {self.density}")
        if not self.densities:
            raise ValueError("densities не может быть пустым")
        bad = [d for d in self.densities if not 0.0 <= d <= 1.0]
        if bad:
            raise ValueError(f"densities вне [0, 1]: {bad}")
        if self.feature_set not in FEATURE_SETS:
            raise ValueError(
                f"feature_set должен быть одним из {', '.join(FEATURE_SETS)}, получено '{self.feature_set}'"
            )
        if self.baseline_fit_set not in BASELINE_FIT_SETS:
            raise ValueError(
                f"baseline_fit_set должен быть одним из {', '.join(BASELINE_FIT_SETS)}"
            )
        if any(b < a for a, b in zip(self.size_cutoffs, self.size_cutoffs[1:])):
            raise ValueError(f"size_cutoffs должны быть неубывающими: {self.size_cutoffs}")
        if self.dump_networks < 0:
            raise ValueError("dump_networks не может быть отрицательным")
        self.train_config().validate()

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            init_range=self.init_range,
        )

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n=self.n,
            fraud_fraction=self.fraud_fraction,
            noise_sd=self.noise_sd,
            break_strength=self.break_strength,
            seed=self.seed,
            marginal_shift=self.marginal_shift,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
