import numpy as np
import pytest

from focustime.embedding import EmbeddingModel
from focustime.synth import FIXTURE_CONFIG, generate


@pytest.fixture(scope="session")
def random_model():
    """A 30-label model with random vectors, no training involved."""
    rng = np.random.default_rng(2024)
    vocab = tuple(f"tool{i // 5}:act{i % 5}" for i in range(30))
    return EmbeddingModel(vocab, rng.normal(size=(30, 20)))


@pytest.fixture(scope="session")
def fixture_data():
    return generate(FIXTURE_CONFIG)
