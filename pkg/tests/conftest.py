import pytest

from src import corpus
from src.models.recursion import BackendDescriptor
from src.utils.settings import EngineSettings


@pytest.fixture(scope="session")
def settings():
    return EngineSettings(jobs=2)


@pytest.fixture(scope="session")
def small_settings():
    """Budgets small enough that undecidable searches give up quickly"""
    return EngineSettings(jobs=2, nucleus_budget=200, nucleus_rounds=5, n_max=6, arrow_cap=500)


@pytest.fixture
def basilica():
    return corpus.load("basilica")


@pytest.fixture
def basilica_tree():
    return corpus.load("basilica").with_backend(BackendDescriptor.tree())


@pytest.fixture
def hanoi():
    return corpus.load("hanoi")


@pytest.fixture
def adding_machine():
    return corpus.load("adding-machine")


@pytest.fixture
def gupta_sidki():
    return corpus.load("gupta-sidki")


@pytest.fixture
def long_range():
    return corpus.load("long-range")


# bundled systems known to be contracting
CONTRACTING = ["adding-machine", "basilica", "finitary", "finite-s3-diagonal", "gupta-sidki", "hanoi",
               "img-chebyshev-minus-t3", "img-chebyshev-t3", "img-chebyshev-t4", "img-z3", "img-z3-inverse",
               "sierpinski-carpet", "trivial", "universal-grigorchuk", "z-3to2"]

# contracting systems on the tree backend whose nucleus is small enough to feed back in
TREE_CONTRACTING = ["adding-machine", "finite-s3-diagonal", "hanoi", "img-chebyshev-minus-t3",
                    "img-chebyshev-t3", "img-chebyshev-t4", "img-z3", "img-z3-inverse", "z-3to2"]


@pytest.fixture(params=CONTRACTING)
def contracting_name(request):
    return request.param
