import numpy as np
import pytest

from hilbert_ops.function_space import SampledFunction


def random_function(rng, n, complex_=False):
    s = rng.standard_normal(n)
    if complex_:
        s = s + 1j * rng.standard_normal(n)
    return SampledFunction(s)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
