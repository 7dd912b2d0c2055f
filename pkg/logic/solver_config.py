"""Solver settings read from the environment (and an optional ``.env`` file)."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)
load_dotenv()

DEFAULT_EVENT_CAP = 10_000_000
DEFAULT_COLGEN_CAP = 10_000
DEFAULT_REDUCED_COST_TOL = 1e-9
DEFAULT_RESIDUAL_TOL = 1e-7

_TRUE_VALUES = {"1", "true", "yes", "on"}
_FALSE_VALUES = {"0", "false", "no", "off", ""}


@dataclass(frozen=True)
class SolverConfig:
    """Caps and tolerances shared by the LP and the local search."""

    event_cap: int = DEFAULT_EVENT_CAP
    colgen_iteration_cap: int = DEFAULT_COLGEN_CAP
    reduced_cost_tol: float = DEFAULT_REDUCED_COST_TOL
    residual_tol: float = DEFAULT_RESIDUAL_TOL
    debug_checks: bool = False
    log_dir: Optional[Path] = None

    def __post_init__(self) -> None:
        if self.event_cap < 1:
            raise ValueError("event_cap must be positive")
        if self.colgen_iteration_cap < 1:
            raise ValueError("colgen_iteration_cap must be positive")
        if self.reduced_cost_tol < 0 or self.residual_tol < 0:
            raise ValueError("tolerances must be non-negative")

    def with_overrides(self, **overrides: Any) -> "SolverConfig":
        """Return a copy with every non-``None`` override applied."""

        changes = {key: value for key, value in overrides.items() if value is not None}
        if not changes:
            return self
        return replace(self, **changes)


def _read_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw.strip())
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from exc


def _read_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw.strip())
    except ValueError as exc:
        raise ValueError(f"{name} must be a number, got {raw!r}") from exc


def _read_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    value = raw.strip().lower()
    if value in _TRUE_VALUES:
        return True
    if value in _FALSE_VALUES:
        return False
    raise ValueError(f"{name} must be a boolean flag, got {raw!r}")


@lru_cache()
def load_solver_config() -> SolverConfig:
    """Build the configuration from ``RASOLVER_*`` environment variables."""

    log_dir = os.getenv("RASOLVER_LOG_DIR")
    config = SolverConfig(
        event_cap=_read_int("RASOLVER_EVENT_CAP", DEFAULT_EVENT_CAP),
        colgen_iteration_cap=_read_int("RASOLVER_COLGEN_CAP", DEFAULT_COLGEN_CAP),
        reduced_cost_tol=_read_float("RASOLVER_REDUCED_COST_TOL", DEFAULT_REDUCED_COST_TOL),
        residual_tol=_read_float("RASOLVER_RESIDUAL_TOL", DEFAULT_RESIDUAL_TOL),
        debug_checks=_read_bool("RASOLVER_DEBUG_CHECKS", False),
        log_dir=Path(log_dir) if log_dir else None,
    )
    logger.debug("Solver configuration loaded: %s", config)
    return config


def refresh_config_cache() -> None:
    """Forget the cached configuration so the environment is read again."""

    load_solver_config.cache_clear()
