import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from orex.model import load_model
from orex.text import load_embedding

ROOT = pathlib.Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"


@pytest.fixture(scope="session")
def sum_net():
    return load_model(MODELS / "sum.json")


@pytest.fixture(scope="session")
def firstword_net():
    return load_model(MODELS / "firstword.json")


@pytest.fixture(scope="session")
def toyrelu_net():
    return load_model(MODELS / "toyrelu.json")


@pytest.fixture(scope="session")
def toy_embedding():
    return load_embedding(MODELS / "toy_embedding.json")


@pytest.fixture(scope="session")
def toy_vocab(toy_embedding):
    return toy_embedding[0]


@pytest.fixture(scope="session")
def toy_table(toy_embedding):
    return toy_embedding[1]
