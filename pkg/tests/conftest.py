from pathlib import Path

import pytest

from freqshare import load_scenario

REPO_ROOT = Path(__file__).resolve().parents[1]
GB_SCENARIO_PATH = REPO_ROOT / "scenarios" / "gb_example.yaml"


@pytest.fixture(scope="session")
def gb_scenario():
    return load_scenario(GB_SCENARIO_PATH)
