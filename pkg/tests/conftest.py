import numpy as np
import pytest

from nlsparse import Dataset, builtin_link


@pytest.fixture(scope="session")
def paper():
    return builtin_link("paper")


@pytest.fixture(scope="session")
def identity():
    return builtin_link("identity")


def random_instance(rng, n, d, link, noise=0.5):
    """A small random regression instance with nontrivial residuals."""
    X = rng.standard_normal((n, d))
    signal = rng.standard_normal(d)
    y = np.asarray(link.eval(X @ signal)) + noise * rng.standard_normal(n)
    return Dataset(design=X, response=y)
