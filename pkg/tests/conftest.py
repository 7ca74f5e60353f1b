import numpy as np
import pytest

from hiltta.bench import prepare_run
from hiltta.stream import StreamSpec

TINY_SPEC = StreamSpec(
    num_classes=3,
    input_dim=6,
    class_separation=6.0,
    num_domains=2,
    batches_per_domain=2,
    batch_size=24,
    corruption_strength=1.0,
    seed=7,
)


@pytest.fixture(scope="session")
def tiny_spec():
    return TINY_SPEC


@pytest.fixture(scope="session")
def tiny_run():
    """Pretrained source model + 4-batch stream, shared across test modules."""
    source, stream = prepare_run(TINY_SPEC, hidden_dim=8, n_per_class=60)
    return source, stream


@pytest.fixture(scope="session")
def default_run():
    """One full-size prepared run (seed 0) for tests that need realism."""
    source, stream = prepare_run(StreamSpec(seed=0))
    return source, stream


def random_params(rng, d=5, h=7, c=4, scale=0.8):
    from hiltta.net import ModelParams

    return ModelParams(
        w1=scale * rng.standard_normal((d, h)),
        b1=scale * rng.standard_normal(h),
        gamma=1.0 + 0.3 * rng.standard_normal(h),
        beta_n=0.3 * rng.standard_normal(h),
        w_out=scale * rng.standard_normal((h, c)),
        b_out=0.2 * rng.standard_normal(c),
    )


@pytest.fixture
def make_random_params():
    return random_params
