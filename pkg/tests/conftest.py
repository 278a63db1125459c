import pytest

from loopsplit import generators as gen


@pytest.fixture
def rng():
    return gen.rng_for(1234)


def random_loop(rng, n=4, radius=2, scale=0.5):
    terms = {}
    for d in range(-radius, radius + 1):
        terms[d] = scale * (rng.standard_normal((n, n))
                            + 1j * rng.standard_normal((n, n))) / (2 * radius + 1)
    from loopsplit import from_terms
    return from_terms(terms)
