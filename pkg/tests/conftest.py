import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from geoperm import BinaryProfile, GenotypeMatrix, TraitVector

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def profile(bits):
    return BinaryProfile.from_bits(bits)


def matrix(rows):
    return GenotypeMatrix.from_array(np.asarray(rows, dtype=np.uint8))


def binary_trait(bits):
    return TraitVector(np.asarray(bits, dtype=float), "binary")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
