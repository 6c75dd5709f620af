from __future__ import annotations

from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture(scope="session")
def corpus_paths() -> list[Path]:
    paths = sorted(SCENARIO_DIR.glob("*.vgl"))
    assert len(paths) >= 6
    return paths


def load_script(name: str):
    from vigil import parse_scenario

    return parse_scenario((SCENARIO_DIR / name).read_text(encoding="utf-8"))
