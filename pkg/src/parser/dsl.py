"""Reader and writer for ``.ssg`` wreath-recursion files.

    # comments run to the end of the line
    alphabet: 0 1
    backend: free                      # tree (default) | free | free-product(...)
    a = (0 1)(1, b)                    # cycles, then one section word per letter
    b = (1, a)

Words act right-to-left: in ``ab`` the generator ``b`` acts first.
"""
import logging
import os
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from src.models.errors import ParseError, UnknownGenerator, ValidationError
from src.models.recursion import (
    Alphabet,
    BackendDescriptor,
    GeneratorDef,
    GroupWord,
    Permutation,
    RecursionSystem,
    format_word as _format_word,
)
from src.processor.equality_backends import (
    FreeProductBackend,
    cyclic_factor,
    factor_table_from_action,
)

logger = logging.getLogger(__name__)

NAME_PATTERN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
INT_PATTERN = re.compile(r"-?\d+")
BACKEND_PATTERN = re.compile(r"free-product\s*\(\s*(orders|factors)\s*:(.*)\)\s*$")


@dataclass(frozen=True)
class SourceDoc:
    text: str
    origin: str = "<inline>"

    @classmethod
    def from_path(cls, path: str) -> "SourceDoc":
        with open(path, "r", encoding="utf-8") as handle:
            return cls(handle.read(), os.fspath(path))


class _WordParser:
    """Recursive descent over one word; columns are reported 1-based"""

    def __init__(self, text: str, names: Sequence[str], line: int = 0, column: int = 1,
                 origin: str = "<inline>"):
        self.text = text
        self.names = sorted(names, key=len, reverse=True)
        self.index = {name: i for i, name in enumerate(names)}
        self.line = line
        self.column = column
        self.origin = origin
        self.pos = 0

    def parse(self) -> GroupWord:
        word = self._word()
        self._skip_separators()
        if self.pos < len(self.text):
            self._fail(f"unexpected '{self.text[self.pos]}'")
        return word

    def _fail(self, message: str):
        raise ParseError(message, self.line, self.column + self.pos, self.origin)

    def _peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _skip_whitespace(self):
        while self._peek().isspace():
            self.pos += 1

    def _skip_separators(self):
        while self._peek() and (self._peek().isspace() or self._peek() in "*·"):
            self.pos += 1

    def _expect(self, ch: str):
        self._skip_whitespace()
        if self._peek() != ch:
            self._fail(f"expected '{ch}'")
        self.pos += 1

    def _word(self) -> GroupWord:
        result = GroupWord.empty()
        while True:
            self._skip_separators()
            if not self._peek() or self._peek() in ")],":
                return result
            result = result * self._factor()

    def _factor(self) -> GroupWord:
        base = self._atom()
        while True:
            self._skip_whitespace()
            if self._peek() == "^":
                self.pos += 1
                self._skip_whitespace()
                match = INT_PATTERN.match(self.text, self.pos)
                if not match:
                    self._fail("expected an integer exponent after '^'")
                self.pos = match.end()
                base = base.power(int(match.group()))
            elif self._peek() == "'":
                self.pos += 1
                base = base.inverse()
            else:
                return base

    def _atom(self) -> GroupWord:
        ch = self._peek()
        if ch == "1":
            self.pos += 1
            return GroupWord.empty()
        if ch == "(":
            self.pos += 1
            inner = self._word()
            self._expect(")")
            return inner
        if ch == "[":
            self.pos += 1
            x = self._word()
            self._expect(",")
            y = self._word()
            self._expect("]")
            return x.inverse() * y.inverse() * x * y
        for name in self.names:
            if self.text.startswith(name, self.pos):
                self.pos += len(name)
                return GroupWord.generator(self.index[name])
        match = NAME_PATTERN.match(self.text, self.pos)
        if match:
            raise UnknownGenerator(match.group())
        self._fail(f"unexpected '{ch}'")


def parse_word(sys: RecursionSystem, text: str) -> GroupWord:
    return _WordParser(text.strip(), sys.names).parse()


def format_word(sys: RecursionSystem, w: GroupWord) -> str:
    return _format_word(sys, w)


def _split_groups(body: str, line: int, column: int, origin: str) -> List[Tuple[str, int]]:
    """Top-level parenthesized groups of a generator body with their columns"""
    groups = []
    pos = 0
    while pos < len(body):
        ch = body[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch != "(":
            raise ParseError(f"expected '(' but found '{ch}'", line, column + pos, origin)
        depth = 0
        end = pos
        while end < len(body):
            if body[end] in "([":
                depth += 1
            elif body[end] in ")]":
                depth -= 1
                if depth == 0:
                    break
            end += 1
        if end >= len(body):
            raise ParseError("unbalanced parentheses", line, column + pos, origin)
        groups.append((body[pos + 1:end], column + pos + 1))
        pos = end + 1
    return groups


def _split_top_level(text: str) -> List[Tuple[str, int]]:
    parts = []
    depth = 0
    start = 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((text[start:i], start))
            start = i + 1
    parts.append((text[start:], start))
    return parts


def _parse_cycle(content: str, alphabet: Alphabet, line: int) -> List[int]:
    stripped = content.strip()
    if alphabet.compact and not any(ch.isspace() for ch in stripped):
        symbols = list(stripped)
    else:
        symbols = stripped.split()
    letters = []
    for symbol in symbols:
        if symbol not in alphabet.letters:
            raise ValidationError(f"cycle symbol not in alphabet: {symbol}", line)
        letters.append(alphabet.index(symbol))
    if len(set(letters)) != len(letters):
        raise ValidationError(f"repeated letter in cycle ({content.strip()})", line)
    return letters


def _strip_comment(raw: str) -> str:
    return raw.split("#", 1)[0].rstrip()


def parse(doc: SourceDoc) -> RecursionSystem:
    origin = doc.origin
    alphabet: Optional[Alphabet] = None
    backend_spec: Optional[Tuple[str, str, int]] = None
    bodies: List[Tuple[str, str, int, int]] = []  # name, body, line, body column
    for number, raw in enumerate(doc.text.splitlines(), start=1):
        text = _strip_comment(raw)
        if not text.strip():
            continue
        if alphabet is None:
            if not text.strip().startswith("alphabet:"):
                raise ParseError("expected 'alphabet:' line first", number, 1, origin)
            symbols = text.split(":", 1)[1].split()
            if not symbols:
                raise ParseError("empty alphabet", number, len(text) + 1, origin)
            try:
                alphabet = Alphabet(tuple(symbols))
            except ValidationError as exc:
                raise ValidationError(exc.message, number) from None
            continue
        stripped = text.strip()
        if stripped.startswith("backend:"):
            if backend_spec is not None or bodies:
                raise ParseError("backend line must follow the alphabet line once", number, 1, origin)
            backend_spec = (stripped.split(":", 1)[1].strip(), text, number)
            continue
        if "=" not in text:
            raise ParseError("expected 'name = ...'", number, 1, origin)
        head, body = text.split("=", 1)
        name = head.strip()
        if not NAME_PATTERN.fullmatch(name):
            raise ParseError(f"invalid generator name '{name}'", number, 1, origin)
        if any(name == other for other, _, _, _ in bodies):
            raise ValidationError(f"duplicate generator: {name}", number)
        bodies.append((name, body, number, len(head) + 2))

    if alphabet is None:
        raise ParseError("missing 'alphabet:' line", 1, 1, origin)
    if not bodies:
        raise ValidationError("no generators")
    names = [name for name, _, _, _ in bodies]
    for name in names:
        for other in names:
            if name != other and other.startswith(name):
                raise ValidationError(f"generator name {name} is a prefix of {other}")

    generators = []
    for name, body, number, column in bodies:
        generators.append(_parse_generator(name, body, number, column, alphabet, names, origin))

    tree_system = RecursionSystem(alphabet, tuple(generators))
    if backend_spec is None:
        return tree_system
    descriptor = _parse_backend(backend_spec, tree_system, origin)
    system = tree_system.with_backend(descriptor)
    if descriptor.kind == "free-product":
        try:
            FreeProductBackend(system).validate_relations()
        except ValidationError as exc:
            raise ValidationError(exc.message, backend_spec[2]) from None
    logger.debug(f"Parsed {origin}: {len(generators)} generators over {alphabet.size} letters")
    return system


def _parse_generator(name: str, body: str, number: int, column: int, alphabet: Alphabet,
                     names: Sequence[str], origin: str) -> GeneratorDef:
    groups = _split_groups(body, number, column, origin)
    section_group = None
    cycles = []
    for i, (content, group_column) in enumerate(groups):
        if "," in content:
            if i != len(groups) - 1:
                raise ParseError("section list must come last", number, group_column, origin)
            section_group = (content, group_column)
        else:
            cycles.append(_parse_cycle(content, alphabet, number))
    perm = Permutation.from_cycles(cycles, alphabet.size)
    if section_group is None:
        sections = tuple(GroupWord.empty() for _ in range(alphabet.size))
    else:
        content, group_column = section_group
        entries = _split_top_level(content)
        if len(entries) != alphabet.size:
            raise ValidationError(
                f"generator {name} needs {alphabet.size} sections, got {len(entries)}", number
            )
        words = []
        for text, offset in entries:
            try:
                words.append(_WordParser(text, names, number, group_column + offset, origin).parse())
            except UnknownGenerator as exc:
                raise ValidationError(f"unknown symbol in section of {name}: {exc.name}", number) from None
        sections = tuple(words)
    return GeneratorDef(name, perm, sections)


def _parse_backend(spec: Tuple[str, str, int], system: RecursionSystem, origin: str) -> BackendDescriptor:
    value, _, number = spec
    if value in ("tree", "free"):
        return BackendDescriptor(value)
    match = BACKEND_PATTERN.match(value)
    if not match:
        raise ParseError(f"unknown backend '{value}'", number, 1, origin)
    form, arguments = match.group(1), match.group(2)
    if form == "orders":
        orders = arguments.split()
        if len(orders) != len(system.generators) or not all(o.isdigit() for o in orders):
            raise ValidationError("orders: needs one positive integer per generator", number)
        factors = tuple(cyclic_factor(g.name, int(o)) for g, o in zip(system.generators, orders))
        return BackendDescriptor("free-product", factors)
    clusters = [cluster.split() for cluster in arguments.split("|")]
    if any(not cluster for cluster in clusters):
        raise ValidationError("empty factor cluster", number)
    for cluster in clusters:
        for name in cluster:
            if name not in system.names:
                raise ValidationError(f"unknown generator in factor: {name}", number)
    factors = []
    for cluster in clusters:
        try:
            factors.append(factor_table_from_action(system, cluster))
        except ValidationError as exc:
            raise ValidationError(exc.message, number) from None
    return BackendDescriptor("free-product", tuple(factors))


def _format_cycle(alphabet: Alphabet, cycle: Sequence[int]) -> str:
    separator = "" if alphabet.compact else " "
    return "(" + separator.join(alphabet.symbol(x) for x in cycle) + ")"


def _format_backend(backend: BackendDescriptor) -> Optional[str]:
    if backend.kind != "free-product":
        return None if backend.kind == "tree" else backend.kind
    if all(f.source == "orders" and len(f.generators) == 1 for f in backend.factors):
        return "free-product(orders: " + " ".join(str(f.order) for f in backend.factors) + ")"
    return "free-product(factors: " + " | ".join(" ".join(f.generators) for f in backend.factors) + ")"


def serialize(sys: RecursionSystem, origin: str = "<inline>") -> SourceDoc:
    lines = ["alphabet: " + " ".join(sys.alphabet.letters)]
    backend_line = _format_backend(sys.backend)
    if backend_line:
        lines.append("backend: " + backend_line)
    for gen in sys.generators:
        cycles = "".join(_format_cycle(sys.alphabet, c) for c in gen.root_perm.cycles())
        trivial = all(w.is_empty() for w in gen.sections)
        if trivial and cycles:
            body = cycles
        else:
            body = cycles + "(" + ", ".join(_format_word(sys, w) for w in gen.sections) + ")"
        lines.append(f"{gen.name} = {body}")
    return SourceDoc("\n".join(lines) + "\n", origin)
