import numpy as np
import pytest

from pillarmix.backbone3d import ConvDotMixParams
from pillarmix.rng import SplitMix64
from pillarmix.weights import random_mixer_layer


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


def small_mixer_layer(d: int, k: int, seed: int = 3) -> ConvDotMixParams:
    # realistic magnitudes (+-1/sqrt(fan_in)) keep float32-vs-oracle drift tiny
    return random_mixer_layer(SplitMix64(seed), d, k)


def f32(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float32)
