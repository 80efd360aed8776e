import os
import pytest
from src.data import read_sequence_file
from src.models import ConstraintParams, SimilarityParams
from src.thermo import load_model

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
METHODS = ("svs", "hswoa", "nacst", "dmea")


def data_path(name):
    return os.path.join(DATA_DIR, name)


def load_set(method):
    return [sequence for _, sequence in read_sequence_file(data_path(f"{method}.txt"))]


@pytest.fixture(scope="session")
def data_file():
    return data_path


@pytest.fixture(scope="session")
def table_sets():
    """Published sequence sets, S1..S7 per method."""
    return {method: load_set(method) for method in METHODS}


@pytest.fixture(scope="session")
def svs_set(table_sets):
    return table_sets["svs"]


@pytest.fixture(scope="session")
def tm_model():
    return load_model()


@pytest.fixture
def constraint_params():
    return ConstraintParams()


@pytest.fixture
def similarity_params():
    return SimilarityParams()
