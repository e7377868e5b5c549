import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from quadprop import MODEL_NAMES, get_model  # noqa: E402


@pytest.fixture(params=MODEL_NAMES)
def model(request):
    return get_model(request.param)


@pytest.fixture
def free():
    return get_model("free_particle")


@pytest.fixture
def oscillator():
    return get_model("forced_oscillator")


@pytest.fixture
def modified():
    return get_model("modified_oscillator")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
