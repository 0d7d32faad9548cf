import numpy as np
import pytest

from services.deloc_service import get_deloc_service
from services.ensemble_service import get_ensemble_service
from services.graph_service import get_graph_service
from services.linalg_service import get_linalg_service
from services.small_ball_service import get_small_ball_service


@pytest.fixture
def ensembles():
    return get_ensemble_service()


@pytest.fixture
def linalg_service():
    return get_linalg_service()


@pytest.fixture
def deloc():
    return get_deloc_service()


@pytest.fixture
def small_ball():
    return get_small_ball_service()


@pytest.fixture
def graphs():
    return get_graph_service()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
