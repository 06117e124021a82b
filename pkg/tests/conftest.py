import pytest

from irisid.imaging import EyeParams, generate_synthetic_eye
from irisid.matching import GaConfig
from irisid.pipeline import sample_population, tune


@pytest.fixture(scope="session")
def default_eye():
    return generate_synthetic_eye(EyeParams(texture_seed=11))


@pytest.fixture(scope="session")
def small_population():
    """4 subjects x 4 images, low noise; cheap enough for unit tests."""
    pop = sample_population(4, 4, seed=99, noise_sigma=2.0)
    return [
        (f"subject{i:03d}", [generate_synthetic_eye(p) for p in eyes])
        for i, eyes in enumerate(pop)
    ]


@pytest.fixture(scope="session")
def small_bundle(small_population):
    cfg = GaConfig(population=16, generations=10, seed=5)
    return tune(small_population, cfg).bundle
