import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sscc.dataset import Dataset, load_csv  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "data"


def make_blobs(n_per=50, seed=0, sep=8.0, n_noise_features=1, n_blobs=2):
    """Well separated gaussian blobs; label = blob index."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    for b in range(n_blobs):
        center = np.zeros(2 + n_noise_features)
        center[0] = sep * b
        center[1] = sep * (b % 2) * 0.5
        pts = rng.normal(size=(n_per, 2 + n_noise_features))
        pts[:, :2] += center[:2]
        X.append(pts)
        y.append(np.full(n_per, b))
    X = np.vstack(X)
    names = [f"x{i}" for i in range(X.shape[1])]
    return Dataset(X, np.concatenate(y), names, [f"blob{b}" for b in range(n_blobs)])


@pytest.fixture
def blobs():
    return make_blobs()


@pytest.fixture(scope="session")
def wine():
    return load_csv(DATA_DIR / "wine.csv", "class")


@pytest.fixture(scope="session")
def ecoli():
    return load_csv(DATA_DIR / "ecoli.csv", "class")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
