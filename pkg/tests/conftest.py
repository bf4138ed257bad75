"""Shared fixtures: domain objects and a small trained model for reuse."""

from __future__ import annotations

import numpy as np
import pytest

from neuraldm.baseline import BaselineConfig
from neuraldm.corpus import generate_corpus
from neuraldm.database import generate_database
from neuraldm.ontology import default_ontology
from neuraldm.policy import init_params
from neuraldm.sl import SLConfig, train_sl


@pytest.fixture(scope="session")
def ontology():
    return default_ontology()


@pytest.fixture(scope="session")
def db(ontology):
    return generate_database(ontology, seed=42, n_venues=150)


@pytest.fixture(scope="session")
def small_corpus(db):
    return generate_corpus(db, n_dialogues=60, ser=0.1, seed=5)


@pytest.fixture(scope="session")
def tiny_model(small_corpus):
    """A quickly trained policy with sensible behavior, for engine/service tests."""
    cfg = SLConfig(learning_rate=0.1, max_epochs=60, patience=60, seed=1)
    params, _ = train_sl(small_corpus, cfg, init_params(1))
    return params


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
