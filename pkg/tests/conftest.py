import pytest
from hypothesis import settings

from finprep.fixtures import load_income, load_price
from finprep.preprocess import PreprocessSpec, Technique, run_preprocess

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def income():
    return load_income()


@pytest.fixture(scope="session")
def price():
    return load_price()


@pytest.fixture(scope="session")
def datasets(income, price):
    return {t: run_preprocess(PreprocessSpec(t), income, price) for t in Technique}
