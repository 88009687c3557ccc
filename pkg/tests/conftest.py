import numpy as np
import pytest

from mddf.dataset import Dataset

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def criterion(num: int, description: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    line = f"criterion {num:02d} {status}: {description}" + (f" [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def criterion_skip(num: int, description: str, reason: str):
    line = f"criterion {num:02d} SKIP: {description} [{reason}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    pytest.skip(reason)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_blobs(m=30, n=3, s=2, seed=0, spread=0.4):
    """Well-separated Gaussian blobs, one per class."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=3.0, size=(s, n))
    y = rng.integers(0, s, size=m)
    X = centers[y] + spread * rng.normal(size=(m, n))
    # guarantee every class appears
    y[:s] = np.arange(s)
    X[:s] = centers[np.arange(s)] + spread * rng.normal(size=(s, n))
    return X, y.astype(np.int64)


def blob_dataset(m=30, n=3, s=2, seed=0, spread=0.4) -> Dataset:
    X, y = make_blobs(m, n, s, seed, spread)
    return Dataset(
        features=X, labels=y, n_classes=s,
        label_names=[str(c) for c in range(s)],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
