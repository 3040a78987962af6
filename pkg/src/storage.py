# src/storage.py
import json
import logging
import os
from typing import Any, Dict

import pandas as pd

from .utils import atomic_write

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ArtifactFormatError(ValueError):
    """Повреждённый или несовместимый файл артефакта"""


class ArtifactStore:
    """Фиксированная раскладка рабочего каталога пайплайна"""

    def __init__(self, workdir: str):
        self.workdir = workdir
        os.makedirs(self.workdir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.workdir, name)

    @property
    def dataset(self) -> str:
        return self.path('dataset.csv')

    @property
    def baseline(self) -> str:
        return self.path('baseline.json')

    def threshold(self, feature_set: str) -> str:
        return self.path(f'threshold_{feature_set}.json')

    def features(self, feature_set: str) -> str:
        return self.path(f'features_{feature_set}.csv')

    def model(self, feature_set: str) -> str:
        return self.path(f'model_{feature_set}.json')

    def roc(self, name: str) -> str:
        return self.path(f'roc_{name}.csv')

    @property
    def sweep(self) -> str:
        return self.path('sweep.csv')

    @property
    def networks(self) -> str:
        return self.path('networks.txt')

    def require(self, path: str, hint: str) -> str:
        """Проверяет, что артефакт уже построен предыдущей командой"""
        if not os.path.exists(path):
            raise FileNotFoundError(f"Не найден {path}: сначала выполните '{hint}'")
        return path


def write_json(path: str, kind: str, payload: Dict[str, Any]):
    """Сохранение JSON-артефакта с версией схемы"""
    document = {'schema_version': SCHEMA_VERSION, 'kind': kind}
    document.update(payload)
    with atomic_write(path) as fh:
        json.dump(document, fh, indent=2, ensure_ascii=False, allow_nan=True)
        fh.write('\n')
    print(f"📊 Сохранено: {path}")


def read_json(path: str, kind: str) -> Dict[str, Any]:
    """Чтение JSON-артефакта с проверкой схемы"""
    try:
        with open(path, encoding='utf-8') as fh:
            document = json.load(fh)
    except json.JSONDecodeError as e:
        raise ArtifactFormatError(f"{path}: файл повреждён или обрезан ({e})")

    if not isinstance(document, dict):
        raise ArtifactFormatError(f"{path}: ожидался JSON-объект")

    version = document.get('schema_version')
    if version != SCHEMA_VERSION:
        raise ArtifactFormatError(
            f"{path}: версия схемы {version}, поддерживается {SCHEMA_VERSION}"
        )
    if document.get('kind') != kind:
        raise ArtifactFormatError(f"{path}: ожидался артефакт '{kind}', найден '{document.get('kind')}'")
    return document


def require_keys(document: Dict[str, Any], keys, path: str):
    missing = [k for k in keys if k not in document]
    if missing:
        raise ArtifactFormatError(f"{path}: отсутствуют поля {', '.join(missing)}")


def write_frame(path: str, frame: pd.DataFrame):
    """Атомарная запись таблицы в CSV"""
    with atomic_write(path) as fh:
        frame.to_csv(fh, index=False, lineterminator='\n')
    logger.debug("CSV %s: %d строк", path, len(frame))
    print(f"📊 Сохранено: {path} ({len(frame)} строк)")


def write_text(path: str, text: str):
    with atomic_write(path) as fh:
        fh.write(text)
    print(f"📊 Сохранено: {path}")
