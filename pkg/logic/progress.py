import logging
from typing import Optional

logger = logging.getLogger(__name__)


class Progress:
    """Reports benchmark progress through logging."""

    def __init__(self, title: str = "Running...", total: int = 0, step_percent: int = 10) -> None:
        self.title = title
        self.total = total
        self.step_percent = max(1, step_percent)
        self.done = 0
        self._last_percent: Optional[int] = None
        logger.info("%s (%s items)", title, total)

    def on_progress(self, percent: int, message: str) -> None:
        percent = max(0, min(100, percent))
        if self._last_percent is not None and percent < 100 and percent - self._last_percent < self.step_percent:
            return
        self._last_percent = percent
        logger.info("%s %3d%% %s", self.title, percent, message)

    def advance(self, message: str = "") -> None:
        self.done += 1
        percent = 100 if self.total <= 0 else (100 * self.done) // self.total
        self.on_progress(percent, message)

    def close(self) -> None:
        logger.info("%s finished (%s/%s)", self.title, self.done, self.total)

    def __enter__(self):
        return self

    def __exit__(self, _exc_type, _exc, _tb) -> None:
        self.close()
