#!/usr/bin/env python3
"""
🕸️ Parenclitic fraud detector: сети отклонений от нормы для карточных операций
Версия: 1.0
"""

import logging
import sys

from src.cli import FraudPipelineCli
from src.config import config


def main():
    """Основная функция запуска"""
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )

    try:
        code = FraudPipelineCli().run(sys.argv[1:])
    except KeyboardInterrupt:
        print("\n👋 Остановлено пользователем")
        sys.exit(0)
    except Exception as e:
        print(f"💥 Критическая ошибка: {e}", file=sys.stderr)
        sys.exit(1)
    sys.exit(code)


if __name__ == "__main__":
    main()
