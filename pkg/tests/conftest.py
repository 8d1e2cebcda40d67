import numpy as np
import pytest
from hypothesis import strategies as st

from balducci import InterestEnvironment, from_weibull, load_table


def example1_table():
    # l_k = 100 - k for k = 0..10, so k p_0 = (100 - k)/100
    return load_table([(k, 100 - k) for k in range(11)])


def table_from_qs(qs, l0=1000.0, base_age=0):
    lx = [l0]
    for q in qs:
        lx.append(lx[-1] * (1.0 - q))
    return load_table(list(enumerate(lx, start=base_age)))


def random_table(rng, min_years=5, max_years=15, q_low=1e-6, q_high=0.5):
    """Table whose one-year q are log-uniform on (q_low, q_high)."""
    years = int(rng.integers(min_years, max_years + 1))
    qs = np.exp(rng.uniform(np.log(q_low), np.log(q_high), years))
    return table_from_qs(qs)


@pytest.fixture
def example1():
    return example1_table()


@pytest.fixture
def weibull():
    return from_weibull(50.0, 3.0)


@pytest.fixture
def env5():
    return InterestEnvironment(0.05)


q_values = st.floats(min_value=1e-6, max_value=0.5)
tables = st.lists(q_values, min_size=3, max_size=12).map(table_from_qs)
rates = st.sampled_from([-0.02, 0.0, 0.01, 0.05, 0.25])
