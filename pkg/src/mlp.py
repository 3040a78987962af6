# src/mlp.py
import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .storage import ArtifactFormatError, read_json, require_keys, write_json

logger = logging.getLogger(__name__)

HIDDEN_UNITS = 10
ARTIFACT_KIND = 'mlp'


class TrainingError(RuntimeError):
    """Обучение разошлось (нечисловая функция потерь)"""


@dataclass(frozen=True)
class TrainConfig:
    """Гиперпараметры обратного распространения ошибки"""

    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    init_range: float = 0.5

    def validate(self):
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate не может быть отрицательным: {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs должно быть ≥ 1, получено {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size должно быть ≥ 1, получено {self.batch_size}")
        if self.init_range < 0:
            raise ValueError(f"init_range не может быть отрицательным: {self.init_range}")


@dataclass
class MlpModel:
    """Трёхслойный перцептрон: вход → 10 сигмоидных нейронов → 1 сигмоидный выход"""

    w_hidden: np.ndarray  # hidden × input
    b_hidden: np.ndarray  # hidden
    w_out: np.ndarray     # hidden
    b_out: float

    @property
    def input_dim(self) -> int:
        return self.w_hidden.shape[1]

    @property
    def hidden(self) -> int:
        return self.w_hidden.shape[0]

    def n_parameters(self) -> int:
        return self.w_hidden.size + self.b_hidden.size + self.w_out.size + 1

    def copy(self) -> 'MlpModel':
        return MlpModel(self.w_hidden.copy(), self.b_hidden.copy(), self.w_out.copy(), float(self.b_out))

    def parameters(self) -> Tuple[np.ndarray, ...]:
        return self.w_hidden, self.b_hidden, self.w_out, np.array([self.b_out])


@dataclass
class Gradient:
    w_hidden: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: float


@dataclass
class TrainResult:
    model: MlpModel
    final_loss: float
    losses: List[float] = field(default_factory=list)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def init(input_dim: int, cfg: TrainConfig, hidden: int = HIDDEN_UNITS) -> MlpModel:
    """Равномерная инициализация на [−init_range, init_range]"""
    if input_dim < 1 or hidden < 1:
        raise ValueError(f"Некорректная размерность сети: вход {input_dim}, скрытый слой {hidden}")
    cfg.validate()

    rng = np.random.default_rng([cfg.seed, 0])
    r = cfg.init_range
    return MlpModel(
        w_hidden=rng.uniform(-r, r, size=(hidden, input_dim)),
        b_hidden=rng.uniform(-r, r, size=hidden),
        w_out=rng.uniform(-r, r, size=hidden),
        b_out=float(rng.uniform(-r, r)),
    )


def _check_input(m: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.input_dim:
        raise ValueError(f"Размерность входа {x.shape[-1]}, сеть ожидает {m.input_dim}")
    return x


def _forward(m: MlpModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    h = sigmoid(x @ m.w_hidden.T + m.b_hidden)
    return h, sigmoid(h @ m.w_out + m.b_out)


def forward(m: MlpModel, x) -> np.ndarray:
    """Оценка σ(w_out·σ(W_h·x + b_h) + b_out) для вектора или матрицы"""
    x = _check_input(m, x)
    return _forward(m, x)[1]


def _batch_gradient(m: MlpModel, x: np.ndarray, y: np.ndarray) -> Tuple[Gradient, float]:
    """Средний градиент квадратичной ошибки по пакету"""
    h, s = _forward(m, x)
    err = s - y
    n = x.shape[0]

    delta_out = 2.0 * err * s * (1.0 - s)                       # n
    delta_hidden = np.outer(delta_out, m.w_out) * h * (1.0 - h)  # n × hidden

    grad = Gradient(
        w_hidden=delta_hidden.T @ x / n,
        b_hidden=delta_hidden.mean(axis=0),
        w_out=h.T @ delta_out / n,
        b_out=float(delta_out.mean()),
    )
    return grad, float(np.mean(err * err))


def gradient(m: MlpModel, x, y: float) -> Gradient:
    """Аналитический градиент (s − y)² по всем параметрам для одного примера"""
    x = _check_input(m, x)
    grad, _ = _batch_gradient(m, x.reshape(1, -1), np.array([float(y)]))
    return grad


def loss(m: MlpModel, x, y) -> float:
    """Средняя квадратичная ошибка"""
    s = forward(m, x)
    return float(np.mean((s - np.asarray(y, dtype=float)) ** 2))


def train(m: MlpModel, x, y, cfg: TrainConfig) -> TrainResult:
    """Мини-пакетный градиентный спуск; детерминирован при фиксированном seed"""
    cfg.validate()
    x = _check_input(m, x)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("Обучающая выборка пуста")
    if y.shape != (x.shape[0],):
        raise ValueError(f"Меток {y.shape[0] if y.ndim else 0}, примеров {x.shape[0]}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("Метки должны быть из {0, 1}")

    model = m.copy()
    rng = np.random.default_rng([cfg.seed, 1])
    lr = cfg.learning_rate
    n = x.shape[0]
    losses = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grad, _ = _batch_gradient(model, x[batch], y[batch])
            model.w_hidden -= lr * grad.w_hidden
            model.b_hidden -= lr * grad.b_hidden
            model.w_out -= lr * grad.w_out
            model.b_out -= lr * grad.b_out

        epoch_loss = loss(model, x, y)
        if not np.isfinite(epoch_loss):
            raise TrainingError(f"Функция потерь не является числом на эпохе {epoch}")
        losses.append(epoch_loss)
        if epoch % 50 == 0:
            logger.debug("Эпоха %d: MSE = %.6f", epoch, epoch_loss)

    logger.info("Обучение завершено: %d эпох, MSE = %.6f", cfg.epochs, losses[-1])
    return TrainResult(model=model, final_loss=losses[-1], losses=losses)


def predict(m: MlpModel, x, threshold: float = 0.5) -> Tuple[np.ndarray, np.ndarray]:
    """Метка 1 тогда и только тогда, когда оценка ≥ порога"""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"Порог должен быть в [0, 1], получено {threshold}")
    scores = forward(m, x)
    return (scores >= threshold).astype(int), scores


def to_dict(m: MlpModel, cfg: Optional[TrainConfig] = None) -> dict:
    return {
        'input_dim': m.input_dim,
        'hidden': m.hidden,
        'w_hidden': m.w_hidden.tolist(),
        'b_hidden': m.b_hidden.tolist(),
        'w_out': m.w_out.tolist(),
        'b_out': float(m.b_out),
        'train_config': asdict(cfg) if cfg else None,
    }


def from_dict(payload: dict, path: str = '<memory>') -> MlpModel:
    require_keys(payload, ('input_dim', 'hidden', 'w_hidden', 'b_hidden', 'w_out', 'b_out'), path)
    model = MlpModel(
        w_hidden=np.array(payload['w_hidden'], dtype=float),
        b_hidden=np.array(payload['b_hidden'], dtype=float),
        w_out=np.array(payload['w_out'], dtype=float),
        b_out=float(payload['b_out']),
    )
    shape = (payload['hidden'], payload['input_dim'])
    if model.w_hidden.shape != shape or model.b_hidden.shape != shape[:1] or model.w_out.shape != shape[:1]:
        raise ArtifactFormatError(f"{path}: размеры слоёв не совпадают с заявленными {shape}")
    if not all(np.all(np.isfinite(p)) for p in model.parameters()):
        raise ArtifactFormatError(f"{path}: параметры сети содержат нечисловые значения")
    return model


def save(m: MlpModel, path: str, cfg: Optional[TrainConfig] = None):
    write_json(path, ARTIFACT_KIND, to_dict(m, cfg))


def load(path: str) -> MlpModel:
    return from_dict(read_json(path, ARTIFACT_KIND), path)
