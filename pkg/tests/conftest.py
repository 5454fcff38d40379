import numpy as np
import pytest

from wmbench.corpus import natural_crops, synthetic_scenes


@pytest.fixture(scope="session")
def photos():
    return natural_crops(8, 64, seed=11)


@pytest.fixture(scope="session")
def scenes():
    return synthetic_scenes(8, 64, seed=5)


@pytest.fixture
def gen():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
