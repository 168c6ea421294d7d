import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def posteriors(draw, k=None, min_k=2, max_k=12):
    """Posteriors with a mix of dense, sparse and exactly tied entries."""
    k = draw(st.integers(min_k, max_k)) if k is None else k
    raw = draw(arrays(float, k, elements=st.floats(0.0, 10.0, allow_nan=False)))
    if draw(st.booleans()):
        raw = np.round(raw)
    if raw.sum() <= 0:
        raw = np.ones(k)
    return raw / raw.sum()


@st.composite
def posterior_pairs(draw, min_k=2, max_k=12):
    k = draw(st.integers(min_k, max_k))
    return draw(posteriors(k=k)), draw(posteriors(k=k))


seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
