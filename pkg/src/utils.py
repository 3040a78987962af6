# src/utils.py
import hashlib
import os
import re
import tempfile
from contextlib import contextmanager
from typing import Iterator, TextIO


def normalize_column_name(name: str) -> str:
    """Приведение заголовка CSV к виду snake_case"""
    name = name.strip().lower()
    # Пробелы и дефисы считаем разделителями слов
    name = re.sub(r'[\s\-]+', '_', name)
    return name


def is_fraction(value: float, closed: bool = True) -> bool:
    """Проверка, что значение является долей"""
    if closed:
        return 0.0 <= value <= 1.0
    return 0.0 < value < 1.0


def format_percent(value: float) -> str:
    """Форматирование доли в проценты"""
    return f"{value * 100:.2f}%"


@contextmanager
def atomic_write(path: str) -> Iterator[TextIO]:
    """Атомарная запись: временный файл в том же каталоге + os.replace"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as fh:
            yield fh
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def file_digest(path: str) -> str:
    """SHA-256 содержимого файла"""
    digest = hashlib.sha256()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()
