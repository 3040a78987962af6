import pytest

from src.data import FEATURE_NAMES


@pytest.fixture
def write_csv_text(tmp_path):
    """Записывает CSV из заголовка и строк, возвращает путь"""

    def write(header, rows, name='input.csv'):
        path = tmp_path / name
        lines = [','.join(header)] + [','.join(str(v) for v in row) for row in rows]
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
        return str(path)

    return write


@pytest.fixture
def csv_header():
    return list(FEATURE_NAMES) + ['fraud_suspectness', 'fraud']
