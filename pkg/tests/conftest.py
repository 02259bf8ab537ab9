import pytest

from retroplan.corpusgen import generate_corpus, generate_search_fixtures
from retroplan.reactions import TemplateLibrary


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus(200, seed=7)


@pytest.fixture(scope="session")
def library(corpus):
    lib, report = TemplateLibrary.from_reactions(corpus, radius=1)
    assert not report
    return lib


@pytest.fixture(scope="session")
def search_setup(corpus):
    fixtures, stock = generate_search_fixtures(corpus, count=8, seed=11)
    return fixtures, stock
