from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from logic.core import Instance  # noqa: E402
from logic.solver_config import refresh_config_cache  # noqa: E402


def corpus_size(base: int) -> int:
    """Scale a property-suite corpus size by ``RASOLVER_CORPUS_SCALE``."""

    try:
        scale = float(os.getenv("RASOLVER_CORPUS_SCALE", "1"))
    except ValueError:
        scale = 1.0
    return max(1, int(base * scale))


@pytest.fixture(autouse=True)
def pristine_solver_config(monkeypatch):
    for key in list(os.environ):
        if key.startswith("RASOLVER_") and key != "RASOLVER_CORPUS_SCALE":
            monkeypatch.delenv(key, raising=False)
    refresh_config_cache()
    yield
    refresh_config_cache()


@pytest.fixture
def e1() -> Instance:
    return Instance.build(2, [(2, [0, 1]), (2, [0]), (2, [1])])


@pytest.fixture
def e2() -> Instance:
    return Instance.build(2, [(6, [0, 1]), (2, [0]), (2, [0]), (2, [0])])
