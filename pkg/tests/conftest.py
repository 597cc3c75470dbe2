"""Shared fixtures: sources, seeded generators and default configs."""

from pathlib import Path

import numpy as np
import pytest

from random_binning.config import Config
from random_binning.models.source import JointSource, MismatchModel

SOURCES_DIR = Path(__file__).resolve().parent.parent / 'sources'


def random_source(rng: np.random.Generator, size_x: int = 2, size_y: int = 2,
                  floor: float = 0.02) -> JointSource:
    """A full-support source with every cell at least ``floor`` before normalization."""
    p = rng.dirichlet(np.ones(size_x * size_y)) + floor
    return JointSource((p / p.sum()).reshape(size_x, size_y))


@pytest.fixture
def config() -> Config:
    return Config()


@pytest.fixture
def dsbs() -> JointSource:
    return JointSource.dsbs(0.1)


@pytest.fixture
def mismatch(dsbs) -> MismatchModel:
    return MismatchModel.from_conditional(dsbs, [[0.8, 0.2], [0.2, 0.8]])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def random_sources(rng) -> list[JointSource]:
    return [random_source(rng) for _ in range(20)]


@pytest.fixture
def dsbs_file() -> Path:
    return SOURCES_DIR / 'dsbs01.json'
