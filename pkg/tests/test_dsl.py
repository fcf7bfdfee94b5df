import pytest

from src import corpus
from src.models.errors import ParseError, UnknownGenerator, ValidationError
from src.models.recursion import GroupWord
from src.parser.dsl import SourceDoc, parse, parse_word, serialize

BASILICA = """\
# Basilica group
alphabet: 0 1
a = (0 1)(1, b)
b = (1, a)   # fixes the first letter
"""


def doc(text: str) -> SourceDoc:
    return SourceDoc(text, "test.ssg")


def test_parse_basilica():
    sys = parse(doc(BASILICA))
    assert sys.names == ("a", "b")
    assert sys.alphabet.letters == ("0", "1")
    assert sys.backend.kind == "tree"
    a, b = sys.generators
    assert a.root_perm.images == (1, 0)
    assert a.sections == (GroupWord.empty(), GroupWord.generator(1))
    assert b.root_perm.is_identity()
    assert b.sections == (GroupWord.empty(), GroupWord.generator(0))


def test_compact_and_spaced_cycles_agree():
    spaced = parse(doc("alphabet: 0 1 2\na = (0 1 2)(1, 1, a)\n"))
    compact = parse(doc("alphabet: 0 1 2\na = (012)(1, 1, a)\n"))
    assert spaced == compact


def test_gupta_sidki_sections():
    sys = parse(doc("alphabet: 0 1 2\na = (012)\nb = (a, a^-1, b)\n"))
    b = sys.generators[1]
    assert b.sections == (GroupWord.generator(0), GroupWord.generator(0, -1), GroupWord.generator(1))


@pytest.mark.parametrize("name", corpus.names())
def test_serialize_round_trip(name):
    sys = corpus.load(name)
    text = serialize(sys).text
    assert parse(doc(text)) == sys
    assert serialize(parse(doc(text))).text == text


def test_canonical_text():
    text = serialize(corpus.load("hanoi")).text
    assert "a = (01)(1, 1, a)\n" in text
    assert "backend" not in text
    assert serialize(corpus.load("finitary")).text == "alphabet: 0 1\na = (01)\n"
    assert serialize(corpus.load("trivial")).text.endswith("e = (1, 1)\n")
    assert "backend: free-product(orders: 3 3)" in serialize(corpus.load("gupta-sidki")).text
    assert "backend: free-product(factors: a | b c d)" in serialize(corpus.load("universal-grigorchuk")).text


def test_universal_grigorchuk_factor_tables():
    sys = corpus.load("universal-grigorchuk")
    orders = [factor.order for factor in sys.backend.factors]
    assert orders == [2, 4]


def test_source_doc_from_path(tmp_path):
    path = tmp_path / "basilica.ssg"
    path.write_text(BASILICA)
    source = SourceDoc.from_path(str(path))
    assert source.origin == str(path)
    assert parse(source).names == ("a", "b")


@pytest.mark.parametrize("text", [
    "alphabet: 0 1\n",
    "alphabet: 0 1\n# only a comment\n",
])
def test_no_generators(text):
    with pytest.raises(ValidationError):
        parse(doc(text))


def test_missing_alphabet():
    with pytest.raises(ParseError):
        parse(doc("a = (0 1)\n"))


def test_duplicate_generator_reports_line():
    with pytest.raises(ValidationError) as err:
        parse(doc("alphabet: 0 1\na = (0 1)\na = (1, a)\n"))
    assert err.value.line == 3
    assert "duplicate generator" in str(err.value)


def test_unknown_symbol_in_section():
    with pytest.raises(ValidationError) as err:
        parse(doc("alphabet: 0 1\na = (0 1)(1, z)\n"))
    assert "unknown symbol in section of a: z" in str(err.value)


def test_cycle_symbol_outside_alphabet():
    with pytest.raises(ValidationError):
        parse(doc("alphabet: 0 1\na = (0 2)\n"))


def test_wrong_section_count():
    with pytest.raises(ValidationError):
        parse(doc("alphabet: 0 1 2\na = (0 1)(1, a)\n"))


def test_prefix_names_are_ambiguous():
    with pytest.raises(ValidationError):
        parse(doc("alphabet: 0 1\na = (0 1)\nab = (a, 1)\n"))


def test_malformed_line():
    with pytest.raises(ParseError) as err:
        parse(doc("alphabet: 0 1\na (0 1)\n"))
    assert err.value.line == 2


def test_bad_exponent_location():
    with pytest.raises(ParseError) as err:
        parse(doc("alphabet: 0 1\na = (0 1)(1, a^x)\n"))
    assert err.value.line == 2
    assert err.value.origin == "test.ssg"
    assert str(err.value).startswith("test.ssg:2:")


def test_free_product_relations_are_checked():
    with pytest.raises(ValidationError):
        parse(doc("alphabet: 0 1\nbackend: free-product(orders: 3)\na = (0 1)\n"))
    with pytest.raises(ValidationError):
        parse(doc("alphabet: 0 1 2\nbackend: free-product(orders: 3 2)\na = (012)\nb = (a, a, b)\n"))


def test_unknown_backend():
    with pytest.raises(ParseError):
        parse(doc("alphabet: 0 1\nbackend: amalgam\na = (0 1)\n"))


@pytest.mark.parametrize("text, expected", [
    ("1", ""),
    ("a^0", ""),
    ("a a^-1", ""),
    ("a'", "a^-1"),
    ("(ab)^2", "abab"),
    ("a * b · a", "aba"),
    ("[a, b]", "a^-1b^-1ab"),
    ("(ab)^-1", "b^-1a^-1"),
])
def test_parse_word(basilica, text, expected):
    assert parse_word(basilica, text) == (parse_word(basilica, expected) if expected else GroupWord.empty())


def test_parse_word_unknown_generator(basilica):
    with pytest.raises(UnknownGenerator):
        parse_word(basilica, "ac")
