import pytest

from udncache.catalog import ZipfCatalog, pcs_vector, ucs_vector
from udncache.channel import make_tu_model, make_uav_model, urban_config


@pytest.fixture(scope="session")
def urban():
    return urban_config()


@pytest.fixture(scope="session")
def tu_model(urban):
    return make_tu_model(urban)


@pytest.fixture(scope="session")
def uav_model(urban):
    return make_uav_model(urban)


@pytest.fixture(scope="session")
def catalog100():
    return ZipfCatalog(n_files=100, beta=1.0)


@pytest.fixture(scope="session")
def ucs10():
    return ucs_vector(100, 10)


@pytest.fixture(scope="session")
def pcs10():
    return pcs_vector(100, 10)
