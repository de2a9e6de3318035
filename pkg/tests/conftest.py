from __future__ import annotations
import pytest

from knotstrata.scenarios import fixture_knots
from knotstrata.schema import RunConfig


@pytest.fixture(scope="session")
def knots():
    return fixture_knots()


@pytest.fixture
def fast_cfg() -> RunConfig:
    """Reduced seeding and frame counts; enough for the shipped 3-cycles."""
    return RunConfig(max_seeds=48, seed_density=4, frames=32)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("KNOTSTRATA_THREADS", "KNOTSTRATA_FRAMES", "KNOTSTRATA_NEWTON_TOL",
                 "KNOTSTRATA_MARGIN_TOL", "KNOTSTRATA_OUT_DIR"):
        monkeypatch.delenv(name, raising=False)
