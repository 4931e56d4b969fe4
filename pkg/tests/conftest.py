import os
from pathlib import Path

import numpy as np
import pytest

#: Handmade word vectors with known geometry: dog/horse nearly parallel,
#: house/person in a different plane, clock and alarm for compounds.
TINY_GLOVE = """\
dog 1.0 0.9 0.0 0.1
horse 0.9 1.0 0.0 0.1
house 0.0 0.1 1.0 0.8
person 0.1 0.0 0.8 1.0
alarm 0.5 -0.2 0.3 0.0
clock -0.1 0.4 0.2 0.6
soccer 0.3 0.3 -0.5 0.2
slipper 0.0 0.2 0.4 -0.3
"""

GLOVE_CANDIDATES = (
    os.environ.get("VLCA_GLOVE"),
    "glove.6B.50d.txt",
    "data/glove.6B.50d.txt",
)


def find_real_glove() -> Path | None:
    for candidate in GLOVE_CANDIDATES:
        if candidate and Path(candidate).is_file():
            return Path(candidate)
    return None


@pytest.fixture
def real_glove() -> Path | None:
    return find_real_glove()


@pytest.fixture
def tiny_glove_text() -> str:
    return TINY_GLOVE


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
