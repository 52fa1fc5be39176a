import numpy as np
import pytest

import wpcontent as w


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile/warm the jacobi kernel so timed tests measure the work itself
    w.sym_eigen(w.SymMatrix([[2.0, 1.0], [1.0, 2.0]]))
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)


@pytest.fixture
def numpy_backend():
    prev = w.get_backend()
    w.set_backend("numpy")
    yield
    w.set_backend(prev)
