"""Shared fixtures: the sample problem files and seeded random configurations."""

from pathlib import Path

import numpy as np
import pytest

from src.rw_integrals.config import load_problem_file, random_config

PROBLEMS_DIR = Path(__file__).resolve().parent.parent / "config" / "problems"


@pytest.fixture
def sample_1x1_path():
    return PROBLEMS_DIR / "sample_1x1.json"


@pytest.fixture
def sample_2x2_path():
    return PROBLEMS_DIR / "sample_2x2.json"


@pytest.fixture
def cfg_1x1(sample_1x1_path):
    cfg, _ = load_problem_file(sample_1x1_path)
    return cfg


@pytest.fixture
def cfg_2x2(sample_2x2_path):
    cfg, _ = load_problem_file(sample_2x2_path)
    return cfg


@pytest.fixture
def random_2x2():
    """A generic 2x2 configuration drawn from a fixed seed."""
    return random_config(np.random.default_rng(20240611), 2, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
