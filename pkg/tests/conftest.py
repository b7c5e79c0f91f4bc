import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gibbspress.interaction import (
    Alphabet,
    Interaction,
    build_checkerboard,
    build_full_shift,
    build_hard_square,
    build_ising,
)


def model_gallery():
    """The built-in models exercised by the cross-cutting suites."""
    return [
        build_hard_square(0.5),
        build_hard_square(1.0),
        build_hard_square(2.0),
        build_checkerboard(2),
        build_checkerboard(3),
        build_checkerboard(5),
        build_ising(0.0),
        build_ising(0.3),
        build_full_shift(2),
        build_full_shift(3),
    ]


def random_interaction(q: int, rng: np.random.Generator, scale: float = 2.0) -> Interaction:
    h = rng.uniform(-scale, scale, size=(q, q))
    v = rng.uniform(-scale, scale, size=(q, q))
    return Interaction(Alphabet(q), h, v, name=f"random(q={q})")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
