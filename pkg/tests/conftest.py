import pytest

from aptkit.vsm import filter_store, sppmi
from toydata import build_raw


@pytest.fixture(scope="session")
def typed_unfiltered():
    return build_raw("typed", 3)


@pytest.fixture(scope="session")
def typed_raw(typed_unfiltered):
    return filter_store(typed_unfiltered, 10, 50, 1)


@pytest.fixture(scope="session")
def typed_store(typed_raw):
    return sppmi(typed_raw, 40)


@pytest.fixture(scope="session")
def untyped_store():
    return sppmi(filter_store(build_raw("untyped", 5), 1, 1, 50), 1)


@pytest.fixture(scope="session")
def typed_k1(typed_raw):
    """Shift 1 keeps far more cells on the toy corpus than the default 40."""
    return sppmi(typed_raw, 1)
