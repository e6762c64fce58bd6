from pathlib import Path

import numpy as np
import pytest

import svnltv as sv

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def crop64():
    """64x64 natural-image crop used by the quality criteria."""
    return sv.load_image(DATA_DIR / "crop64.png")


@pytest.fixture(scope="session")
def block32():
    """32x32 flat color quadrants, the energy-behavior fixture."""
    img = np.zeros((32, 32, 3))
    img[:16, :16] = [0.9, 0.2, 0.2]
    img[:16, 16:] = [0.2, 0.8, 0.3]
    img[16:, :16] = [0.2, 0.3, 0.9]
    img[16:, 16:] = [0.85, 0.85, 0.2]
    return img


def random_graph(rng, shape, max_extra=12):
    """Random symmetric graph over an H x W raster with random weights."""
    n = shape[0] * shape[1]
    pairs = set()
    # a spanning chain keeps every pixel incident to at least one edge
    for i in range(n - 1):
        pairs.add((i, i + 1))
    for _ in range(rng.integers(1, max_extra + 1)):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            pairs.add((min(i, j), max(i, j)))
    pairs = sorted(pairs)
    ws = rng.uniform(0.05, 1.0, size=len(pairs))
    wv = rng.uniform(0.05, 1.0, size=len(pairs))
    return sv.NonlocalGraph.from_undirected_edges(shape, pairs, ws, wv)
