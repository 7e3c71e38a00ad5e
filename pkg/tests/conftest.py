import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from evident_fuse.classifier import TrainConfig, train  # noqa: E402
from evident_fuse.data import SyntheticSpec, make_synthetic  # noqa: E402

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def standard_data():
    return make_synthetic(SyntheticSpec(), 0)


@pytest.fixture(scope="session")
def evidential_run(standard_data):
    return train(standard_data, TrainConfig(seed=0))


@pytest.fixture(scope="session")
def softmax_run(standard_data):
    return train(standard_data, TrainConfig(seed=0, head="softmax"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
