import json

import pytest

from src import corpus
from src.models.errors import CertificateError, ValidationError
from src.parser.dsl import parse_word
from src.processor.dimension import (
    NOT_FOUND_NOTE,
    certificate_to_json,
    dimension_report,
    groupoid_closure,
    induce_partition,
    parse_parts,
    search_partition,
    verify_certificate,
    verify_partition,
)
from src.processor.equality_backends import faithful_backend
from src.utils.settings import EngineSettings

HANOI_PARTS = "00 11 22 | 01 02 10 12 20 21"


@pytest.fixture(scope="module")
def dim_settings():
    return EngineSettings(jobs=2, arrow_cap=2000)


def test_hanoi_partition_certifies(hanoi, dim_settings):
    result = verify_partition(hanoi, parse_parts(hanoi, HANOI_PARTS), settings=dim_settings)
    assert result.certified
    certificate = result.certificate
    assert certificate.d == 1
    assert certificate.level == 2
    # identities at 00, 11, 22 plus the loops carrying c, b, a
    assert certificate.arrows_per_part[0] == 6
    data = certificate.to_dict()
    assert data['generating-set'] == ["1", "a", "b", "c"]
    assert data['parts'][0] == ["00", "11", "22"]
    assert data['convention'] == "prefix"


def test_closures_are_groupoids(hanoi, dim_settings):
    backend = faithful_backend(hanoi, dim_settings)
    result = verify_partition(hanoi, parse_parts(hanoi, HANOI_PARTS), settings=dim_settings)
    for arrows in result.certificate.closures:
        keys = {arrow.key for arrow in arrows}
        for arrow in arrows:
            assert (arrow.dst, arrow.src, backend.inverse(arrow.elem).key) in keys
            assert (arrow.src, arrow.src, backend.identity().key) in keys
            for other in arrows:
                if other.src == arrow.dst:
                    assert arrow.then(other, backend).key in keys


def test_singletons_certify_at_the_first_level(hanoi, dim_settings):
    result = verify_partition(hanoi, [[(0,)], [(1,)], [(2,)]], settings=dim_settings)
    assert result.certified
    assert result.certificate.d == 2


def test_trivial_generating_set(hanoi, dim_settings):
    parts = [[v] for part in parse_parts(hanoi, HANOI_PARTS) for v in part]
    result = verify_partition(hanoi, parts, [parse_word(hanoi, "1")], settings=dim_settings)
    assert result.certified
    assert result.certificate.arrows_per_part == [1] * 9


def test_adding_machine_loop_is_infinite(adding_machine, dim_settings):
    closure = groupoid_closure(adding_machine, [(0,), (1,)], [parse_word(adding_machine, "a")],
                               settings=dim_settings)
    assert closure.status == "infinite"
    assert closure.witness.src == closure.witness.dst


def test_empty_part(hanoi, dim_settings):
    closure = groupoid_closure(hanoi, [], [parse_word(hanoi, "a")], settings=dim_settings)
    assert closure.is_finite
    assert closure.arrows == []


@pytest.mark.parametrize("parts", [
    [[(0,), (1,)]],
    [[(0,), (1,)], [(1,), (2,)]],
    [[(0,), (1,)], [(2, 0)]],
])
def test_invalid_partitions(hanoi, dim_settings, parts):
    with pytest.raises(ValidationError):
        verify_partition(hanoi, parts, [parse_word(hanoi, "a")], settings=dim_settings)


@pytest.mark.parametrize("convention", ["prefix", "suffix"])
def test_induced_partition_still_certifies(hanoi, dim_settings, convention):
    induced = induce_partition(parse_parts(hanoi, HANOI_PARTS), hanoi.degree, convention)
    assert sorted(len(part) for part in induced) == [9, 18]
    assert verify_partition(hanoi, induced, settings=dim_settings).certified


def test_greedy_search_finds_the_carrying_split(hanoi, dim_settings):
    result = search_partition(hanoi, 2, 1, strategy="greedy", settings=dim_settings)
    assert result.certified
    assert result.certificate.to_dict()['parts'] == [p.split() for p in HANOI_PARTS.split("|")]


def test_exhaustive_search(hanoi, dim_settings):
    result = search_partition(hanoi, 2, 1, strategy="exhaustive", settings=dim_settings)
    assert result.certified
    assert verify_partition(hanoi, result.certificate.parts, settings=dim_settings, fresh=True).certified


def test_search_not_found(adding_machine, dim_settings):
    result = search_partition(adding_machine, 1, 0, settings=dim_settings)
    assert result.status == "not_found"
    assert result.candidates == 1
    assert result.log[-1] == NOT_FOUND_NOTE


def test_exhaustive_budget(hanoi, dim_settings):
    result = search_partition(hanoi, 3, 2, budget=100, settings=dim_settings)
    assert result.status == "not_found"
    assert any("exceeds budget" in line for line in result.log)


def test_random_search_is_reproducible(hanoi, dim_settings):
    first = search_partition(hanoi, 2, 1, strategy="random", settings=dim_settings, seed=3)
    second = search_partition(hanoi, 2, 1, strategy="random", settings=dim_settings, seed=3)
    assert first.status == second.status
    assert first.candidates == second.candidates
    if first.certified:
        assert first.certificate.parts == second.certificate.parts


def test_unknown_strategy(hanoi, dim_settings):
    with pytest.raises(ValueError):
        search_partition(hanoi, 1, 1, strategy="annealing", settings=dim_settings)


def test_carpet_first_level_bipartition(dim_settings):
    carpet = corpus.load("sierpinski-carpet")
    result = search_partition(carpet, 1, 1, strategy="exhaustive", settings=dim_settings)
    assert result.certified
    assert result.candidates <= 128
    assert len(result.certificate.parts) == 2


def test_dimension_report(hanoi, dim_settings):
    report = dimension_report(hanoi, (1, 2), (0, 1), settings=dim_settings)
    assert report.best_per_level() == {1: None, 2: 1}
    assert report.best_bound == 1
    assert report.to_dict()['note'] == NOT_FOUND_NOTE


def test_finite_group_has_a_one_part_certificate(dim_settings):
    s3 = corpus.load("finite-s3-diagonal")
    report = dimension_report(s3, (1,), (0, 1), settings=dim_settings, stop_when_certified=True)
    assert report.rows == [{'n': 1, 'd': 0, 'status': 'certified', 'candidates': 1}]


def test_certificate_round_trip(hanoi, dim_settings):
    result = verify_partition(hanoi, parse_parts(hanoi, HANOI_PARTS), settings=dim_settings)
    text = certificate_to_json(result.certificate)
    data = json.loads(text)
    assert set(data) == {'system-hash', 'system', 'level', 'parts', 'generating-set',
                         'arrows-per-part', 'd', 'convention'}
    assert verify_certificate(text, dim_settings).certified

    data['d'] = 3
    assert not verify_certificate(json.dumps(data), dim_settings).certified


def test_tampered_certificates(hanoi, dim_settings):
    result = verify_partition(hanoi, parse_parts(hanoi, HANOI_PARTS), settings=dim_settings)
    data = json.loads(certificate_to_json(result.certificate))
    data['system'] = data['system'].replace("a = (01)(1, 1, a)", "a = (01)(1, a, 1)")
    with pytest.raises(CertificateError):
        verify_certificate(json.dumps(data), dim_settings)
    with pytest.raises(CertificateError):
        verify_certificate("{not json", dim_settings)
    with pytest.raises(CertificateError):
        verify_certificate(json.dumps({'system': "alphabet: 0 1\n"}), dim_settings)
