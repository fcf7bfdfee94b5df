"""Triviality, equality and normal forms under three regimes.

* tree: the faithful action on X*. Elements are keyed by their minimized
  section transducer, so equality after the first decision is a table lookup.
* free: freely reduced words.
* free-product: syllable normal form over finite factors given by Cayley tables.
"""
import logging
import threading
from collections import deque
from dataclasses import dataclass, field
from math import lcm
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

from src.models.errors import BudgetExceeded, ValidationError
from src.models.recursion import (
    BackendDescriptor,
    FactorTable,
    GroupWord,
    Permutation,
    RecursionSystem,
    act_word,
    format_word,
    root_permutation,
    section_letter,
)
from src.utils.cache_layer import CacheLayer
from src.utils.settings import DEFAULT_SETTINGS, EngineSettings

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Element:
    key: Hashable
    nf: GroupWord
    home: RecursionSystem = field(repr=False)

    def __eq__(self, other):
        return isinstance(other, Element) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self):
        return format_word(self.home, self.nf)


@dataclass
class SectionClosure:
    start: Hashable
    states: List[Hashable]  # BFS order, start first
    words: Dict[Hashable, GroupWord]
    trans: Dict[Hashable, Tuple[Hashable, ...]]  # one target per letter
    out: Dict[Hashable, Permutation]
    depths: Dict[Hashable, int]

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def depth(self) -> int:
        return max(self.depths.values())

    def acts_trivially(self) -> bool:
        return all(perm.is_identity() for perm in self.out.values())


@dataclass
class OrderResult:
    status: str  # 'finite', 'infinite', 'unknown'
    value: Optional[int] = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {'status': self.status, 'order': self.value, 'reason': self.reason}


@dataclass
class SubgroupResult:
    status: str  # 'finite', 'exceeds_cap'
    elements: List[Element]

    @property
    def order(self) -> Optional[int]:
        return len(self.elements) if self.status == 'finite' else None


class _InfiniteOrder(Exception):
    pass


class _OrderUnknown(Exception):
    pass


def minimize(closure: SectionClosure) -> Tuple[Dict[Hashable, int], List[Permutation], List[Tuple[int, ...]]]:
    """Partition refinement on (out, trans); classes numbered by first appearance"""
    signature = {s: closure.out[s].images for s in closure.states}
    classes = _renumber(closure.states, signature)
    while True:
        refined_signature = {
            s: (classes[s], tuple(classes[t] for t in closure.trans[s])) for s in closure.states
        }
        refined = _renumber(closure.states, refined_signature)
        if len(set(refined.values())) == len(set(classes.values())):
            classes = refined
            break
        classes = refined
    count = len(set(classes.values()))
    class_out: List[Optional[Permutation]] = [None] * count
    class_trans: List[Optional[Tuple[int, ...]]] = [None] * count
    for s in closure.states:
        c = classes[s]
        if class_out[c] is None:
            class_out[c] = closure.out[s]
            class_trans[c] = tuple(classes[t] for t in closure.trans[s])
    return classes, class_out, class_trans


def _renumber(states: Sequence[Hashable], signature: Dict[Hashable, Hashable]) -> Dict[Hashable, int]:
    numbering: Dict[Hashable, int] = {}
    classes = {}
    for s in states:
        sig = signature[s]
        if sig not in numbering:
            numbering[sig] = len(numbering)
        classes[s] = numbering[sig]
    return classes


def canonical_key(start: int, out: Sequence[Permutation], trans: Sequence[Tuple[int, ...]]) -> Tuple:
    """BFS-numbered serialization of the machine reachable from ``start``"""
    numbering = {start: 0}
    order = [start]
    i = 0
    while i < len(order):
        for t in trans[order[i]]:
            if t not in numbering:
                numbering[t] = len(order)
                order.append(t)
        i += 1
    return tuple((out[s].images, tuple(numbering[t] for t in trans[s])) for s in order)


class EqualityBackend:
    kind = "abstract"
    keeps_representatives = False  # element table holds chosen words and is never evicted

    def __init__(self, system: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS):
        """Initialize backend memo tables for one recursion system"""
        self.system = system
        self.settings = settings
        memo_cap = settings.memo_cap
        element_cap = None if self.keeps_representatives else memo_cap
        self.elements = CacheLayer(f"{self.kind}-elements", element_cap)  # key -> Element
        self.word_keys = CacheLayer(f"{self.kind}-words", memo_cap)  # syllables -> key
        self.section_table = CacheLayer(f"{self.kind}-sections", memo_cap)  # (key, x) -> Element
        self.stats = {
            'closures': 0,
            'closure_states': 0
        }
        self.stats_lock = threading.Lock()

    # -- regime specific -------------------------------------------------

    def normal_word(self, word: GroupWord) -> Tuple[Hashable, GroupWord]:
        """Key and normal-form word used to identify closure states"""
        raise NotImplementedError

    def normalize(self, word: GroupWord) -> Element:
        raise NotImplementedError

    def is_trivial(self, word: GroupWord) -> bool:
        raise NotImplementedError

    # -- shared ------------------------------------------------------------

    def closure(self, word: GroupWord, budget: Optional[int] = None) -> SectionClosure:
        budget = self.settings.closure_cap if budget is None else budget
        if budget < 1:
            raise ValueError("closure budget must be at least 1")
        sys = self.system
        start, start_word = self.normal_word(word)
        words = {start: start_word}
        depths = {start: 0}
        states = [start]
        trans = {}
        out = {}
        queue = deque([start])
        while queue:
            k = queue.popleft()
            w = words[k]
            out[k] = root_permutation(sys, w)
            children = []
            for x in range(sys.degree):
                child, child_word = self.normal_word(section_letter(sys, w, x))
                if child not in words:
                    if len(words) >= budget:
                        raise BudgetExceeded(f"Section closure exceeded {budget} states", len(words))
                    words[child] = child_word
                    depths[child] = depths[k] + 1
                    states.append(child)
                    queue.append(child)
                children.append(child)
            trans[k] = tuple(children)
        with self.stats_lock:
            self.stats['closures'] += 1
            self.stats['closure_states'] += len(states)
        return SectionClosure(start, states, words, trans, out, depths)

    def element(self, word) -> Element:
        if isinstance(word, Element):
            return self.normalize(word.nf)
        return self.normalize(word)

    def identity(self) -> Element:
        return self.normalize(GroupWord.empty())

    def generators(self, with_inverses: bool = True) -> List[Element]:
        """Backend-normalized S ∪ S^-1, deduplicated in declaration order"""
        found = []
        for i in range(len(self.system.generators)):
            signs = (1, -1) if with_inverses else (1,)
            for sign in signs:
                e = self.normalize(GroupWord.generator(i, sign))
                if e not in found and not self.is_identity(e):
                    found.append(e)
        return found

    def is_identity(self, element: Element) -> bool:
        return element.key == self.identity().key

    def multiply(self, a: Element, b: Element) -> Element:
        return self.normalize(a.nf * b.nf)

    def inverse(self, a: Element) -> Element:
        return self.normalize(a.nf.inverse())

    def power(self, a: Element, k: int) -> Element:
        return self.normalize(a.nf.power(k))

    def perm(self, a: Element) -> Permutation:
        return root_permutation(self.system, a.nf)

    def section(self, a: Element, x: int) -> Element:
        return self.section_table.get_or_compute(
            (a.key, x), lambda: self.normalize(section_letter(self.system, a.nf, x))
        )

    def sections(self, a: Element) -> Tuple[Element, ...]:
        return tuple(self.section(a, x) for x in range(self.system.degree))

    def section_at(self, a: Element, v: Sequence[int]) -> Element:
        for x in v:
            a = self.section(a, x)
        return a

    def act(self, a: Element, v: Sequence[int]) -> Tuple[int, ...]:
        return act_word(self.system, a.nf, v)

    def equal(self, w1: GroupWord, w2: GroupWord) -> bool:
        return self.is_trivial(w1 * w2.inverse())

    def format(self, a: Element) -> str:
        return format_word(self.system, a.nf)

    def get_stats(self) -> dict:
        with self.stats_lock:
            stats = dict(self.stats)
        stats['kind'] = self.kind
        stats['elements'] = self.elements.get_stats()
        stats['words'] = self.word_keys.get_stats()
        return stats


class FreeBackend(EqualityBackend):
    kind = "free"

    def normal_word(self, word: GroupWord) -> Tuple[Hashable, GroupWord]:
        return word.syllables, word

    def normalize(self, word: GroupWord) -> Element:
        return self.elements.get_or_compute(word.syllables, lambda: Element(word.syllables, word, self.system))

    def is_trivial(self, word: GroupWord) -> bool:
        return word.is_empty()


class FreeProductBackend(EqualityBackend):
    kind = "free-product"

    def __init__(self, system: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS):
        super().__init__(system, settings)
        self.factors = system.backend.factors
        self.placement = {}  # generator index -> (factor index, table element)
        for f, factor in enumerate(self.factors):
            for name, element in zip(factor.generators, factor.generator_elements):
                self.placement[system.generator_index(name)] = (f, element)
        self.factor_words = [self._shortest_words(f) for f in range(len(self.factors))]

    def _shortest_words(self, f: int) -> List[Tuple[Tuple[int, int], ...]]:
        """Shortest word over the cluster generators for every table element"""
        factor = self.factors[f]
        moves = []
        for name, element in zip(factor.generators, factor.generator_elements):
            g = self.system.generator_index(name)
            moves.append(((g, 1), element))
            moves.append(((g, -1), factor.inverse(element)))
        words = {0: ()}
        queue = deque([0])
        while queue:
            current = queue.popleft()
            for syllable, element in moves:
                target = factor.multiply(current, element)
                if target not in words:
                    words[target] = words[current] + (syllable,)
                    queue.append(target)
        if len(words) != factor.order:
            raise ValidationError(f"Factor {' '.join(factor.generators)} is not generated by its cluster")
        return [words[i] for i in range(factor.order)]

    def syllable_form(self, word: GroupWord) -> Tuple[Tuple[int, int], ...]:
        stack: List[Tuple[int, int]] = []
        for g, e in word:
            f, element = self.placement[g]
            if e < 0:
                element = self.factors[f].inverse(element)
            if element == 0:
                continue
            if stack and stack[-1][0] == f:
                merged = self.factors[f].multiply(stack[-1][1], element)
                stack.pop()
                if merged != 0:
                    stack.append((f, merged))
            else:
                stack.append((f, element))
        return tuple(stack)

    def expand(self, syllables: Iterable[Tuple[int, int]]) -> GroupWord:
        word = []
        for f, element in syllables:
            word.extend(self.factor_words[f][element])
        return GroupWord(tuple(word))

    def normal_word(self, word: GroupWord) -> Tuple[Hashable, GroupWord]:
        key = self.syllable_form(word)
        return key, self.expand(key)

    def normalize(self, word: GroupWord) -> Element:
        key = self.syllable_form(word)
        return self.elements.get_or_compute(key, lambda: Element(key, self.expand(key), self.system))

    def is_trivial(self, word: GroupWord) -> bool:
        return not self.syllable_form(word)

    def validate_relations(self):
        """Every relation of every factor table must hold for the recursion"""
        sys = self.system
        relators = []
        for f, factor in enumerate(self.factors):
            words = self.factor_words[f]
            for name, element in zip(factor.generators, factor.generator_elements):
                g = sys.generator_index(name)
                relators.append(GroupWord(((g, 1),)) * GroupWord(words[element]).inverse())
            for i in range(factor.order):
                for j in range(factor.order):
                    k = factor.multiply(i, j)
                    relators.append(GroupWord(words[i] + words[j]) * GroupWord(words[k]).inverse())
        for relator in relators:
            if relator.is_empty():
                continue
            if not root_permutation(sys, relator).is_identity():
                raise ValidationError(f"relation {format_word(sys, relator)} = 1 moves first-level letters")
            for x in range(sys.degree):
                if not self.is_trivial(section_letter(sys, relator, x)):
                    raise ValidationError(f"relation {format_word(sys, relator)} = 1 has a non-trivial section")


class TreeBackend(EqualityBackend):
    kind = "tree"
    keeps_representatives = True

    def __init__(self, system: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS):
        super().__init__(system, settings)
        self.automaton = {}  # key -> (perm, child keys)
        self.registry_lock = threading.RLock()
        d = system.degree
        self.identity_key = ((tuple(range(d)), (0,) * d),)

    def normal_word(self, word: GroupWord) -> Tuple[Hashable, GroupWord]:
        return word.syllables, word

    def normalize(self, word: GroupWord) -> Element:
        key = self.word_keys.get(word.syllables)
        if key is None:
            key = self._canonicalize(word)
        return self.elements.get(key)

    def _canonicalize(self, word: GroupWord) -> Hashable:
        """Register every state of the word's closure; returns the key of the word itself"""
        closure = self.closure(word)
        classes, class_out, class_trans = minimize(closure)
        class_keys = [canonical_key(c, class_out, class_trans) for c in range(len(class_out))]
        best_words: Dict[int, GroupWord] = {}
        for s in closure.states:
            c = classes[s]
            w = closure.words[s]
            if c not in best_words or w.sort_key() < best_words[c].sort_key():
                best_words[c] = w
        with self.registry_lock:
            for c, key in enumerate(class_keys):
                children = tuple(class_keys[t] for t in class_trans[c])
                self.automaton.setdefault(key, (class_out[c], children))
                current = self.elements.get(key)
                candidate = best_words[c]
                if current is None or candidate.sort_key() < current.nf.sort_key():
                    self.elements.set(key, Element(key, candidate, self.system))
            for s in closure.states:
                self.word_keys.set_if_absent(s, class_keys[classes[s]])
        return class_keys[classes[closure.start]]

    def is_trivial(self, word: GroupWord) -> bool:
        key = self.word_keys.get(word.syllables)
        if key is not None:
            return key == self.identity_key
        return self.closure(word).acts_trivially()

    def is_identity(self, element: Element) -> bool:
        return element.key == self.identity_key

    def perm(self, a: Element) -> Permutation:
        return self.automaton[a.key][0]

    def section(self, a: Element, x: int) -> Element:
        return self.elements.get(self.automaton[a.key][1][x])

    def order(self, element: Element, cap: Optional[int] = None) -> OrderResult:
        """Orbit recursion: g has finite order iff every g^|orbit| section at an
        orbit representative does; revisiting a stacked element with a larger
        exponent proves infinite order."""
        cap = self.settings.order_cap if cap is None else cap
        memo: Dict[Hashable, int] = {}
        budget = [self.settings.nucleus_budget]
        try:
            value, _ = self._order(element, {}, 1, memo, budget, cap)
        except _InfiniteOrder as exc:
            return OrderResult('infinite', None, str(exc))
        except _OrderUnknown as exc:
            return OrderResult('unknown', None, str(exc))
        except BudgetExceeded as exc:
            return OrderResult('unknown', None, str(exc))
        return OrderResult('finite', value)

    def _order(self, e: Element, stack: Dict[Hashable, int], multiplier: int,
               memo: Dict[Hashable, int], budget: List[int], cap: int) -> Tuple[int, FrozenSet]:
        if self.is_identity(e):
            return 1, frozenset()
        if e.key in memo:
            return memo[e.key], frozenset()
        if e.key in stack:
            if multiplier > stack[e.key]:
                raise _InfiniteOrder(f"{self.format(e)} reappears as a section of its own power")
            return 1, frozenset([e.key])
        budget[0] -= 1
        if budget[0] < 0:
            raise _OrderUnknown("order recursion visited too many elements")
        stack[e.key] = multiplier
        result = 1
        hits = set()
        for orbit in self.perm(e).orbits():
            length = len(orbit)
            h = self.section(self.power(e, length), orbit[0])
            k, inner = self._order(h, stack, multiplier * length, memo, budget, cap)
            hits |= inner
            result = lcm(result, length * k)
            if result > cap:
                raise _OrderUnknown(f"order exceeds cap {cap}")
        del stack[e.key]
        hits.discard(e.key)
        if not hits:
            memo[e.key] = result
        return result, frozenset(hits)


BACKEND_CACHE_SIZE = 64

_BACKENDS = CacheLayer("backends", BACKEND_CACHE_SIZE)


def backend_for(sys: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS) -> EqualityBackend:
    """Shared backend per (system, settings)"""
    return _BACKENDS.get_or_compute((sys, settings), lambda: _build_backend(sys, settings))


def faithful_backend(sys: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS) -> TreeBackend:
    return backend_for(sys.with_backend(BackendDescriptor.tree()), settings)


def fresh_backend(sys: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS) -> EqualityBackend:
    """Unshared backend with empty caches"""
    return _build_backend(sys, settings)


def _build_backend(sys: RecursionSystem, settings: EngineSettings) -> EqualityBackend:
    kind = sys.backend.kind
    if kind == "tree":
        return TreeBackend(sys, settings)
    if kind == "free":
        return FreeBackend(sys, settings)
    return FreeProductBackend(sys, settings)


def cyclic_factor(name: str, order: int) -> FactorTable:
    if order < 1:
        raise ValidationError(f"Order of {name} must be positive")
    table = tuple(tuple((i + j) % order for j in range(order)) for i in range(order))
    return FactorTable((name,), table, (1 % order,), "orders")


def factor_table_from_action(sys: RecursionSystem, names: Sequence[str], cap: int = 1000) -> FactorTable:
    """Cayley table of the group the cluster generates in the faithful action"""
    backend = faithful_backend(sys)
    gens = [backend.normalize(GroupWord.generator(sys.generator_index(n))) for n in names]
    elements = [backend.identity()]
    index = {elements[0].key: 0}
    i = 0
    while i < len(elements):
        for g in gens:
            product = backend.multiply(elements[i], g)
            if product.key not in index:
                if len(elements) >= cap:
                    raise ValidationError(f"Cluster {' '.join(names)} does not generate a finite group within {cap} elements")
                index[product.key] = len(elements)
                elements.append(product)
        i += 1
    table = tuple(
        tuple(index[backend.multiply(a, b).key] for b in elements) for a in elements
    )
    return FactorTable(tuple(names), table, tuple(index[g.key] for g in gens), "action")


def enumerate_subgroup(sys: RecursionSystem, generators: Iterable, cap: int) -> SubgroupResult:
    """BFS product closure with faithful (tree) equality"""
    backend = faithful_backend(sys)
    gens = [backend.element(g) for g in generators]
    elements = [backend.identity()]
    seen = {elements[0].key}
    i = 0
    while i < len(elements):
        for g in gens:
            product = backend.multiply(elements[i], g)
            if product.key not in seen:
                if len(elements) >= cap:
                    logger.info(f"Subgroup enumeration passed cap {cap}")
                    return SubgroupResult('exceeds_cap', elements)
                seen.add(product.key)
                elements.append(product)
        i += 1
    return SubgroupResult('finite', elements)


def closure(sys: RecursionSystem, w: GroupWord, budget: Optional[int] = None) -> SectionClosure:
    return backend_for(sys).closure(w, budget)


def is_trivial(sys: RecursionSystem, w: GroupWord) -> bool:
    return backend_for(sys).is_trivial(w)


def equal(sys: RecursionSystem, w1: GroupWord, w2: GroupWord) -> bool:
    return backend_for(sys).equal(w1, w2)


def order(sys: RecursionSystem, w: GroupWord, cap: Optional[int] = None) -> OrderResult:
    backend = faithful_backend(sys)
    try:
        element = backend.normalize(w)
    except BudgetExceeded as exc:
        return OrderResult('unknown', None, str(exc))
    return backend.order(element, cap)


def normal_form(sys: RecursionSystem, w: GroupWord) -> Element:
    return backend_for(sys).normalize(w)
