import pytest

from kldesign import benchmarks


@pytest.fixture(scope="session")
def ctx():
    """Shared cache of the expensive end-to-end runs."""
    return benchmarks.BenchmarkContext()
