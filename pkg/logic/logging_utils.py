"""Application-wide logging configuration helpers."""

from __future__ import annotations

import logging
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from tempfile import gettempdir
from typing import Optional, Union

LOG_DIR_NAME = "logs"
LAST_RUN_LOG_NAME = "last_run.md"
ROTATING_LOG_NAME = "history.md"
ROTATING_MAX_BYTES = 5 * 1024 * 1024  # 5 MB
ROTATING_BACKUP_COUNT = 5

_configured = False
_last_run_log_path: Optional[Path] = None
_console_handler: Optional[logging.Handler] = None


def _candidate_log_directories(preferred: Optional[Path] = None) -> list[Path]:
    candidates = [
        Path.cwd() / LOG_DIR_NAME,
        Path.home() / ".rasolver" / LOG_DIR_NAME,
        Path(gettempdir()) / "rasolver_logs",
    ]
    if preferred is not None:
        candidates.insert(0, preferred)
    return candidates


def _ensure_log_directory(preferred: Optional[Path] = None) -> Path:
    for directory in _candidate_log_directories(preferred):
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError:
            continue
        else:
            return directory
    return Path.cwd()


class _MarkdownFormatter(logging.Formatter):
    """Render log records as Markdown blocks."""

    def format(self, record: logging.LogRecord) -> str:  # pragma: no cover - formatting
        timestamp = datetime.fromtimestamp(record.created).strftime("%Y-%m-%d %H:%M:%S")
        message = super().format(record).rstrip()
        if message:
            message = f"{message}\n"
        return f"---\n### {timestamp} · {record.levelname} · {record.name}\n\n{message}"


def _initialise_markdown_file(path: Path, title: str, fresh: bool) -> None:
    """Ensure *path* starts with a Markdown heading."""

    header = f"# {title}\n\n"
    if fresh or not path.exists() or path.stat().st_size == 0:
        path.write_text(header, encoding="utf-8")


def set_console_level(level: int) -> None:
    """Change the verbosity of the stderr handler after setup."""

    if _console_handler is not None:
        _console_handler.setLevel(level)


def setup_logging(
    log_dir: Optional[Union[str, Path]] = None,
    console_level: int = logging.WARNING,
) -> Path:
    """Configure the Markdown file handlers and the console handler.

    Returns
    -------
    Path
        Path to the ``last_run.md`` file. Repeated calls keep the existing
        handlers and only adjust the console level.
    """

    global _configured, _last_run_log_path, _console_handler

    if _configured and _last_run_log_path is not None:
        set_console_level(console_level)
        return _last_run_log_path

    directory = _ensure_log_directory(Path(log_dir) if log_dir is not None else None)
    last_run_log = directory / LAST_RUN_LOG_NAME
    rotating_log = directory / ROTATING_LOG_NAME

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)

    formatter = _MarkdownFormatter("%(message)s")

    _initialise_markdown_file(last_run_log, "RASolver last run", fresh=True)
    last_run_handler = logging.FileHandler(last_run_log, mode="a", encoding="utf-8")
    last_run_handler.setLevel(logging.DEBUG)
    last_run_handler.setFormatter(formatter)

    _initialise_markdown_file(rotating_log, "RASolver run history", fresh=not rotating_log.exists())
    rotating_handler = RotatingFileHandler(
        rotating_log,
        maxBytes=ROTATING_MAX_BYTES,
        backupCount=ROTATING_BACKUP_COUNT,
        encoding="utf-8",
    )
    rotating_handler.setLevel(logging.INFO)
    rotating_handler.setFormatter(formatter)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))

    root_logger.addHandler(last_run_handler)
    root_logger.addHandler(rotating_handler)
    root_logger.addHandler(console_handler)

    _configured = True
    _last_run_log_path = last_run_log
    _console_handler = console_handler

    root_logger.debug("Logging configured. Logs directory: %s", directory)
    return last_run_log


def reset_logging() -> None:
    """Detach the handlers installed by :func:`setup_logging`."""

    global _configured, _last_run_log_path, _console_handler

    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()
    _configured = False
    _last_run_log_path = None
    _console_handler = None


def get_last_run_log_path() -> Path:
    """Return the path to ``last_run.md`` ensuring logging is configured."""

    if not _configured or _last_run_log_path is None:
        return setup_logging()
    return _last_run_log_path
