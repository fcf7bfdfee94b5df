import networkx as nx
import pytest

from src import corpus
from src.parser.dsl import parse_word
from src.processor.contraction import (
    certify_contraction,
    closed_generators,
    compute_nucleus,
    dim_zero_test,
    nucleus_subgroup,
    persistent_keys,
    verify_nucleus,
)
from src.processor.equality_backends import backend_for
from tests.oracles import deep_sections

BASILICA_NUCLEUS = ["1", "a", "a^-1", "b", "b^-1", "ab^-1", "ba^-1"]


def words(sys, names):
    return [parse_word(sys, name) for name in names]


def test_basilica_nucleus(basilica, settings):
    status = compute_nucleus(basilica, settings=settings)
    assert status.is_contracting
    assert status.source == "nucleus"
    assert status.nucleus.names() == BASILICA_NUCLEUS
    assert status.nucleus.to_dict()['backend'] == "free"


@pytest.mark.parametrize("name, expected", [
    ("hanoi", ["1", "a", "b", "c"]),
    ("adding-machine", ["1", "a", "a^-1"]),
    ("img-z3", ["1", "a", "a^-1"]),
    ("gupta-sidki", ["1", "a", "a^-1", "b", "b^-1"]),
    ("img-chebyshev-t3", ["1", "a", "b"]),
    ("img-chebyshev-minus-t3", ["1", "a", "b"]),
    ("img-chebyshev-t4", ["1", "a", "b"]),
    ("universal-grigorchuk", ["1", "a", "b", "c", "d"]),
    ("z-3to2", ["1", "a^2", "a^-2", "a^4", "a^-4"]),
    ("finitary", ["1"]),
    ("trivial", ["1"]),
])
def test_known_nuclei(name, expected, settings):
    status = compute_nucleus(corpus.load(name), settings=settings)
    assert status.status == "contracting"
    assert status.nucleus.names() == expected


def test_gupta_sidki_nucleus_matches_deep_sections(gupta_sidki, settings):
    status = compute_nucleus(gupta_sidki, settings=settings)
    assert status.nucleus.keys == frozenset(deep_sections(gupta_sidki, (3, 3), radius=4, depth=4))


@pytest.mark.parametrize("name", [
    "basilica", "hanoi", "adding-machine", "img-z3", "gupta-sidki", "finite-s3-diagonal", "finitary",
])
def test_nucleus_is_stable_and_closed(name, settings):
    sys = corpus.load(name)
    nucleus = compute_nucleus(sys, settings=settings).nucleus
    backend = nucleus.backend
    assert verify_nucleus(sys, nucleus.elements, settings=settings).holds
    for e in nucleus:
        assert backend.inverse(e) in nucleus
        for s in backend.sections(e):
            assert s in nucleus
    assert nucleus.elements[0] == backend.identity()


def test_basilica_nucleus_is_minimal(basilica, settings):
    nucleus = compute_nucleus(basilica, settings=settings).nucleus
    backend = nucleus.backend
    for removed in nucleus.non_trivial():
        rest = [e for e in nucleus if e != removed]
        closed = all(s in rest for e in rest for s in backend.sections(e))
        assert not (closed and verify_nucleus(basilica, rest, settings=settings).holds)


def test_verify_nucleus(basilica, hanoi, settings):
    check = verify_nucleus(basilica, words(basilica, BASILICA_NUCLEUS), settings=settings)
    assert check.holds
    assert check.depth >= 1
    assert verify_nucleus(basilica, words(basilica, BASILICA_NUCLEUS), symmetric=True, settings=settings).holds
    assert verify_nucleus(hanoi, words(hanoi, ["1", "a", "b", "c"]), settings=settings).holds


def test_verify_nucleus_failures(basilica, settings):
    check = verify_nucleus(basilica, words(basilica, ["1"]), n_max=4, settings=settings)
    assert not check.holds
    assert check.offenders == ["a", "a^-1", "b", "b^-1"]
    missing_identity = verify_nucleus(basilica, words(basilica, ["a", "b"]), settings=settings)
    assert not missing_identity.holds
    assert "identity" in missing_identity.reason


def test_verify_nucleus_rejects_sets_not_closed_under_sections(basilica, settings):
    check = verify_nucleus(basilica, words(basilica, ["1", "a", "a^-1"]), settings=settings)
    assert not check.holds
    assert check.reason == "set is not closed under sections"
    assert check.offenders == ["a", "a^-1"]


def test_stability_uses_generators_closed_under_sections(settings):
    z = corpus.load("z-3to2")
    backend = backend_for(z, settings)
    generators = closed_generators(backend, settings.nucleus_budget)
    assert {backend.format(e) for e in generators} == {"a", "a^-1", "a^2", "a^-2"}
    # stable against a and a^-1 alone, but a^2 a^2 escapes
    check = verify_nucleus(z, words(z, ["1", "a^2", "a^-2"]), settings=settings)
    assert not check.holds
    assert check.offenders == ["a^-4", "a^4"]


def test_z3to2_nucleus_holds_its_self_reproducing_power(settings):
    z = corpus.load("z-3to2")
    nucleus = compute_nucleus(z, settings=settings).nucleus
    backend = nucleus.backend
    a4 = backend.element(parse_word(z, "a^4"))
    assert backend.section_at(a4, (2,) * 10) == a4
    assert a4 in nucleus


def test_long_range_generic_search_gives_up(long_range, small_settings):
    status = compute_nucleus(long_range, settings=small_settings)
    assert status.status == "unknown"
    assert status.report['reason']


def test_long_range_is_not_contracting(long_range, small_settings):
    status = certify_contraction(long_range, small_settings)
    assert status.status == "not_contracting"
    assert status.source == "pold"
    assert status.witness == {'element': "b", 'path': "1", 'growth': [1, 2, 3]}
    assert status.report['generic']['reason']


def test_persistent_keys():
    graph = nx.DiGraph([("g", "h"), ("h", "h"), ("h", "k"), ("g", "m")])
    assert persistent_keys(graph) == {"h", "k"}


def test_dim_zero(settings):
    s3 = corpus.load("finite-s3-diagonal")
    result = dim_zero_test(s3, settings=settings)
    assert result.status == "yes"
    assert result.subgroup_order == 6
    assert dim_zero_test(corpus.load("finitary"), settings=settings).to_dict()['subgroup_order'] == 1

    machine = dim_zero_test(corpus.load("adding-machine"), cap=50, settings=settings)
    assert machine.status == "no"
    assert machine.infinite_element == "a"


def test_diagonal_s3_nucleus_is_the_whole_group(settings):
    s3 = corpus.load("finite-s3-diagonal")
    nucleus = compute_nucleus(s3, settings=settings).nucleus
    backend = nucleus.backend
    assert len(nucleus) == 6
    for e in nucleus:
        assert all(s == e for s in backend.sections(e))


def test_nucleus_subgroup(hanoi, settings):
    nucleus = compute_nucleus(hanoi, settings=settings).nucleus
    assert nucleus_subgroup(hanoi, nucleus, cap=20, settings=settings).status == "exceeds_cap"


def test_dim_zero_without_nucleus(long_range, small_settings):
    assert dim_zero_test(long_range, settings=small_settings).status == "unknown"


def test_backend_is_shared_per_settings(hanoi, settings):
    assert backend_for(hanoi, settings) is backend_for(hanoi, settings)
