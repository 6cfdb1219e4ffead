import pytest

from sparseuq import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # jit compilation happens once here instead of inside timed tests
    kernels.warmup()
