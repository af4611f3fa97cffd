import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from rmpc.generators import random_computation, random_standard_term
from rmpc.syntax import NIL, Choice, Parallel, Prefix

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACTIONS = ("a", "b", "c")
RATES = st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0])


def _leaf():
    return st.just(NIL) | st.builds(Prefix, st.sampled_from(ACTIONS), RATES, st.none(), st.just(NIL))


def _extend(children):
    sync = st.frozensets(st.sampled_from(ACTIONS), max_size=2)
    return (st.builds(Prefix, st.sampled_from(ACTIONS), RATES, st.none(), children)
            | st.builds(Choice, children, children)
            | st.builds(Parallel, children, children, sync))


# key-free terms
standard_terms = st.recursive(_leaf(), _extend, max_leaves=6)


def _sequential_extend(children):
    return (st.builds(Prefix, st.sampled_from(ACTIONS), RATES, st.none(), children)
            | st.builds(Choice, children, children))


sequential_terms = st.recursive(_leaf(), _sequential_extend, max_leaves=6)


@st.composite
def reachable_terms(draw, max_steps=5):
    """A state reached from a standard term by a random forward/backward walk."""
    t = draw(standard_terms)
    seed = draw(st.integers(0, 2**16))
    return random_computation(random.Random(seed), t, draw(st.integers(0, max_steps))).end


@st.composite
def computations(draw, max_steps=5):
    t = draw(standard_terms)
    seed = draw(st.integers(0, 2**16))
    return random_computation(random.Random(seed), t, draw(st.integers(0, max_steps)))


@pytest.fixture
def rng():
    return random.Random(20240611)


def seeded_terms(n, seed=0, **kw):
    r = random.Random(seed)
    return [random_standard_term(r, **kw) for _ in range(n)]
