import pytest

from crispec.generators import GeneratorSpec, generate
from crispec.spectrum import compute_spectrum


def gen(kind, **params):
    return generate(GeneratorSpec(kind, params))


_cache: dict = {}


def cached(key, make):
    if key not in _cache:
        _cache[key] = make()
    return _cache[key]


@pytest.fixture(scope="session")
def circle200():
    return cached("circle200", lambda: gen("circle", circumference=1.0, n=200))


@pytest.fixture(scope="session")
def circle12():
    return cached("circle12", lambda: gen("circle", circumference=1.0, n=12))


@pytest.fixture(scope="session")
def gap200():
    return cached("gap200", lambda: gen("circle-with-gap", circumference=1.0, gap=0.25, n=200))


@pytest.fixture(scope="session")
def square():
    return cached("square", lambda: gen("square-boundary", side=1.0, mesh=0.01))


@pytest.fixture(scope="session")
def comb0():
    return cached("comb0", lambda: gen("rapunzel-comb-v0", teeth=6))


@pytest.fixture(scope="session")
def comb3():
    return cached("comb3", lambda: gen("rapunzel-comb-v3", teeth=6))


@pytest.fixture(scope="session")
def trapezoid():
    return cached("trapezoid", lambda: gen("trapezoid"))


def spectrum_of(name, X):
    return cached(("spectrum", name), lambda: compute_spectrum(X))


@pytest.fixture(scope="session")
def circle_spectrum(circle200):
    return spectrum_of("circle200", circle200)


@pytest.fixture(scope="session")
def gap_spectrum(gap200):
    return spectrum_of("gap200", gap200)


@pytest.fixture(scope="session")
def square_spectrum(square):
    return spectrum_of("square", square)


@pytest.fixture(scope="session")
def comb0_spectrum(comb0):
    return spectrum_of("comb0", comb0)
