import numpy as np
import pytest

from hob.datagen import GeneratorConfig, generate
from hob.landscape import TrainConfig, train_param_model


@pytest.fixture(scope="session")
def small_dataset():
    # shared across modules; keep it big enough that win rates are stable
    return generate(GeneratorConfig(n=4000, seed=3))


@pytest.fixture(scope="session")
def small_model(small_dataset):
    return train_param_model(small_dataset, TrainConfig(epochs=8, seed=0))


@pytest.fixture
def rng():
    return np.random.default_rng(0)
