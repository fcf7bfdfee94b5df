"""Alphabets, permutations, group words and the section/action calculus.

Words act right-to-left, as functions: in ``ab`` the letter ``b`` acts first.
Letters are indices 0..d-1 internally; symbols only appear at the parse/print
boundary (see ``Alphabet``).
"""
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Iterable, List, Sequence, Tuple

from src.models.errors import UnknownGenerator, UnknownLetter, ValidationError

# (generator index, +1 or -1)
Syllable = Tuple[int, int]


@dataclass(frozen=True)
class Alphabet:
    letters: Tuple[str, ...]
    allow_unary: bool = False

    def __post_init__(self):
        if len(set(self.letters)) != len(self.letters):
            raise ValidationError(f"Alphabet letters must be distinct: {' '.join(self.letters)}")
        minimum = 1 if self.allow_unary else 2
        if len(self.letters) < minimum:
            raise ValidationError(f"Alphabet needs at least {minimum} letters")

    @property
    def size(self) -> int:
        return len(self.letters)

    @cached_property
    def _positions(self) -> Dict[str, int]:
        return {symbol: i for i, symbol in enumerate(self.letters)}

    def index(self, symbol: str) -> int:
        try:
            return self._positions[symbol]
        except KeyError:
            raise UnknownLetter(symbol) from None

    def symbol(self, index: int) -> str:
        if not 0 <= index < len(self.letters):
            raise UnknownLetter(index)
        return self.letters[index]

    @property
    def compact(self) -> bool:
        """True when every letter is a single character, so words print without separators"""
        return all(len(symbol) == 1 for symbol in self.letters)

    def format_word(self, indices: Sequence[int]) -> str:
        separator = "" if self.compact else "."
        return separator.join(self.symbol(i) for i in indices)

    def parse_word(self, text: str) -> Tuple[int, ...]:
        if not text:
            return ()
        if self.compact:
            return tuple(self.index(ch) for ch in text)
        return tuple(self.index(part) for part in text.split("."))


@dataclass(frozen=True)
class Permutation:
    images: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(len(self.images))):
            raise ValidationError(f"Not a permutation: {self.images}")

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return cls(tuple(range(size)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], size: int) -> "Permutation":
        """Compose cycles right-to-left (the rightmost cycle acts first)"""
        images = list(range(size))
        for cycle in reversed(list(cycles)):
            if len(set(cycle)) != len(cycle):
                raise ValidationError(f"Repeated letter in cycle {tuple(cycle)}")
            step = {cycle[i]: cycle[(i + 1) % len(cycle)] for i in range(len(cycle))}
            images = [step.get(y, y) for y in images]
        return cls(tuple(images))

    @property
    def size(self) -> int:
        return len(self.images)

    def apply(self, x: int) -> int:
        return self.images[x]

    def inverse(self) -> "Permutation":
        inverse = [0] * len(self.images)
        for x, y in enumerate(self.images):
            inverse[y] = x
        return Permutation(tuple(inverse))

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other"""
        return Permutation(tuple(self.images[y] for y in other.images))

    def is_identity(self) -> bool:
        return all(x == y for x, y in enumerate(self.images))

    def orbits(self) -> List[Tuple[int, ...]]:
        seen = set()
        orbits = []
        for start in range(len(self.images)):
            if start in seen:
                continue
            orbit = [start]
            seen.add(start)
            y = self.images[start]
            while y != start:
                orbit.append(y)
                seen.add(y)
                y = self.images[y]
            orbits.append(tuple(orbit))
        return orbits

    def cycles(self) -> List[Tuple[int, ...]]:
        """Canonical cycle notation: smallest letter first, fixed points omitted"""
        return [orbit for orbit in self.orbits() if len(orbit) > 1]


@dataclass(frozen=True)
class GroupWord:
    syllables: Tuple[Syllable, ...] = ()

    def __post_init__(self):
        reduced = free_reduce(self.syllables)
        if reduced != self.syllables:
            object.__setattr__(self, "syllables", reduced)

    @classmethod
    def empty(cls) -> "GroupWord":
        return cls(())

    @classmethod
    def generator(cls, index: int, sign: int = 1) -> "GroupWord":
        return cls(((index, sign),))

    def __len__(self) -> int:
        return len(self.syllables)

    def __iter__(self):
        return iter(self.syllables)

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(self.syllables + other.syllables)

    def is_empty(self) -> bool:
        return not self.syllables

    def inverse(self) -> "GroupWord":
        return GroupWord(tuple((g, -e) for g, e in reversed(self.syllables)))

    def power(self, k: int) -> "GroupWord":
        base = self if k >= 0 else self.inverse()
        return GroupWord(base.syllables * abs(k))

    def sort_key(self) -> Tuple[int, Tuple[Tuple[int, int], ...]]:
        """Shortest first, then lexicographic with a generator before its inverse"""
        return (len(self.syllables), tuple((g, -e) for g, e in self.syllables))


def free_reduce(syllables: Sequence[Syllable]) -> Tuple[Syllable, ...]:
    stack: List[Syllable] = []
    for g, e in syllables:
        if stack and stack[-1][0] == g and stack[-1][1] == -e:
            stack.pop()
        else:
            stack.append((g, e))
    return tuple(stack)


@dataclass(frozen=True)
class GeneratorDef:
    name: str
    root_perm: Permutation
    sections: Tuple[GroupWord, ...]


@dataclass(frozen=True)
class FactorTable:
    generators: Tuple[str, ...]  # names in the cluster
    table: Tuple[Tuple[int, ...], ...]  # Cayley table, element 0 is the identity
    generator_elements: Tuple[int, ...]  # table element of each cluster generator
    source: str = "orders"  # 'orders' or 'action'

    def __post_init__(self):
        n = len(self.table)
        if n == 0 or any(len(row) != n for row in self.table):
            raise ValidationError(f"Cayley table of {' '.join(self.generators)} is not square")
        for row in self.table:
            if sorted(row) != list(range(n)):
                raise ValidationError(f"Cayley table of {' '.join(self.generators)} is not a group table")
        if list(self.table[0]) != list(range(n)):
            raise ValidationError("Element 0 of a Cayley table must be the identity")

    @property
    def order(self) -> int:
        return len(self.table)

    def multiply(self, i: int, j: int) -> int:
        return self.table[i][j]

    def inverse(self, i: int) -> int:
        return self.table[i].index(0)


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str = "tree"  # 'tree', 'free' or 'free-product'
    factors: Tuple[FactorTable, ...] = ()

    def __post_init__(self):
        if self.kind not in ("tree", "free", "free-product"):
            raise ValidationError(f"Unknown backend: {self.kind}")
        if self.kind != "free-product" and self.factors:
            raise ValidationError(f"Backend {self.kind} takes no factors")
        if self.kind == "free-product" and not self.factors:
            raise ValidationError("free-product backend needs at least one factor")

    @classmethod
    def tree(cls) -> "BackendDescriptor":
        return cls("tree")

    @classmethod
    def free(cls) -> "BackendDescriptor":
        return cls("free")


@dataclass(frozen=True)
class RecursionSystem:
    alphabet: Alphabet
    generators: Tuple[GeneratorDef, ...]
    backend: BackendDescriptor = field(default_factory=BackendDescriptor.tree)

    def __post_init__(self):
        if not self.generators:
            raise ValidationError("no generators")
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            duplicates = sorted({n for n in names if names.count(n) > 1})
            raise ValidationError(f"duplicate generator: {', '.join(duplicates)}")
        for gen in self.generators:
            if gen.root_perm.size != self.alphabet.size:
                raise ValidationError(f"Permutation of {gen.name} has wrong degree")
            if len(gen.sections) != self.alphabet.size:
                raise ValidationError(f"Generator {gen.name} needs {self.alphabet.size} sections")
            for word in gen.sections:
                for g, _ in word:
                    if not 0 <= g < len(self.generators):
                        raise ValidationError(f"unknown symbol in section of {gen.name}")
        if self.backend.kind == "free-product":
            covered = [n for factor in self.backend.factors for n in factor.generators]
            if sorted(covered) != sorted(names):
                raise ValidationError("free-product factors must partition the generator set")

    @property
    def degree(self) -> int:
        return self.alphabet.size

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def generator_index(self, name: str) -> int:
        for i, gen in enumerate(self.generators):
            if gen.name == name:
                return i
        raise UnknownGenerator(name)

    def with_backend(self, backend: BackendDescriptor) -> "RecursionSystem":
        return replace(self, backend=backend)

    @cached_property
    def _inverse_perms(self) -> Tuple[Permutation, ...]:
        return tuple(g.root_perm.inverse() for g in self.generators)

    @cached_property
    def _inverse_sections(self) -> Tuple[Tuple[GroupWord, ...], ...]:
        return tuple(tuple(word.inverse() for word in g.sections) for g in self.generators)

    def letter_image(self, syllable: Syllable, x: int) -> int:
        g, e = syllable
        if e > 0:
            return self.generators[g].root_perm.images[x]
        return self._inverse_perms[g].images[x]

    def syllable_section(self, syllable: Syllable, x: int) -> Tuple[Syllable, ...]:
        """(g^-1)|_x = (g|_{g^-1(x)})^-1, computed on the fly"""
        g, e = syllable
        if e > 0:
            return self.generators[g].sections[x].syllables
        y = self._inverse_perms[g].images[x]
        return self._inverse_sections[g][y].syllables


def _check(sys: RecursionSystem, w: GroupWord, x: int = None):
    count = len(sys.generators)
    for g, _ in w:
        if not 0 <= g < count:
            raise UnknownGenerator(g)
    if x is not None and not 0 <= x < sys.degree:
        raise UnknownLetter(x)


def act_letter(sys: RecursionSystem, w: GroupWord, x: int) -> int:
    _check(sys, w, x)
    for syllable in reversed(w.syllables):
        x = sys.letter_image(syllable, x)
    return x


def section_letter(sys: RecursionSystem, w: GroupWord, x: int) -> GroupWord:
    """(g_1 g_2)|_x = g_1|_{g_2(x)} g_2|_x, freely reduced"""
    _check(sys, w, x)
    pieces: List[Tuple[Syllable, ...]] = []
    for syllable in reversed(w.syllables):
        pieces.append(sys.syllable_section(syllable, x))
        x = sys.letter_image(syllable, x)
    result: List[Syllable] = []
    for piece in reversed(pieces):
        result.extend(piece)
    return GroupWord(tuple(result))


def act_and_section(sys: RecursionSystem, w: GroupWord, x: int) -> Tuple[int, GroupWord]:
    return act_letter(sys, w, x), section_letter(sys, w, x)


def act_word(sys: RecursionSystem, w: GroupWord, v: Sequence[int]) -> Tuple[int, ...]:
    image = []
    for x in v:
        image.append(act_letter(sys, w, x))
        w = section_letter(sys, w, x)
    return tuple(image)


def section_word(sys: RecursionSystem, w: GroupWord, v: Sequence[int]) -> GroupWord:
    for x in v:
        w = section_letter(sys, w, x)
    return w


def root_permutation(sys: RecursionSystem, w: GroupWord) -> Permutation:
    return Permutation(tuple(act_letter(sys, w, x) for x in range(sys.degree)))


def format_word(sys: RecursionSystem, w: GroupWord) -> str:
    """Run-length powers, inverses as ^-1 and '1' for the empty word"""
    if w.is_empty():
        return "1"
    pieces = []
    syllables = list(w.syllables)
    i = 0
    while i < len(syllables):
        g, e = syllables[i]
        run = 1
        while i + run < len(syllables) and syllables[i + run] == (g, e):
            run += 1
        exponent = run * e
        name = sys.generators[g].name
        pieces.append(name if exponent == 1 else f"{name}^{exponent}")
        i += run
    return "".join(pieces)
