"""Shared fixtures: trained-once models reused across test modules."""

from __future__ import annotations

import pytest

from delaycast.delaynet import ModelConfig, train
from delaycast.generator import generate_dataset
from delaycast.physics import LabelGrid, batch_labels
from delaycast.surrogate import SurrogateConfig, train_surrogate


@pytest.fixture(scope="session")
def label_rows():
    return batch_labels(LabelGrid())


@pytest.fixture(scope="session")
def surrogate_pair(label_rows):
    return train_surrogate(label_rows, SurrogateConfig(seed=0))


@pytest.fixture(scope="session")
def small_ds():
    return generate_dataset(seed=42, n=300)


@pytest.fixture(scope="session")
def small_model(small_ds):
    return train(small_ds, ModelConfig(epochs=12, seed=0)).model
