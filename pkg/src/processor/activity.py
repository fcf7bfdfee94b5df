"""Activity growth and the groupoid contraction test for polynomial activity"""
import logging
from dataclasses import dataclass
from math import lcm
from typing import Dict, Hashable, List, Optional, Tuple

import networkx as nx

from src.models.errors import BudgetExceeded
from src.models.recursion import GroupWord, RecursionSystem
from src.processor.contraction import ContractionStatus, nucleus_from_elements
from src.processor.dimension import Arrow, close_arrows
from src.processor.equality_backends import Element, TreeBackend, faithful_backend
from src.utils.settings import DEFAULT_SETTINGS, EngineSettings

logger = logging.getLogger(__name__)


@dataclass
class MooreDiagram:
    root: Hashable
    states: List[Hashable]  # non-trivial states, BFS order from the root
    names: Dict[Hashable, str]
    graph: nx.MultiDiGraph  # edge per letter between non-trivial states

    def cyclic_components(self) -> List[set]:
        components = []
        for component in nx.strongly_connected_components(self.graph):
            node = next(iter(component))
            if len(component) > 1 or self.graph.has_edge(node, node):
                components.append(component)
        return components

    def internal_edges(self, component: set) -> int:
        return sum(1 for u, v in self.graph.edges() if u in component and v in component)


@dataclass(frozen=True)
class ActivityClass:
    kind: str  # 'finitary', 'polynomial', 'exponential'
    degree: Optional[int] = None

    def __str__(self):
        if self.kind == 'polynomial':
            return f"Polynomial({self.degree})"
        return self.kind.capitalize()


FINITARY = ActivityClass('finitary')
EXPONENTIAL = ActivityClass('exponential')


def _element(sys: RecursionSystem, w, settings: EngineSettings) -> Tuple[TreeBackend, Element]:
    backend = faithful_backend(sys, settings)
    return backend, backend.element(w)


def _non_trivial_states(backend: TreeBackend, root: Element) -> List[Element]:
    states = []
    seen = {root.key}
    queue = [root]
    while queue:
        e = queue.pop(0)
        if backend.is_identity(e):
            continue
        states.append(e)
        for s in backend.sections(e):
            if s.key not in seen:
                seen.add(s.key)
                queue.append(s)
    return states


def moore_diagram(sys: RecursionSystem, w, settings: EngineSettings = DEFAULT_SETTINGS) -> MooreDiagram:
    backend, root = _element(sys, w, settings)
    states = _non_trivial_states(backend, root)
    graph = nx.MultiDiGraph()
    for e in states:
        graph.add_node(e.key)
    for e in states:
        for x, s in enumerate(backend.sections(e)):
            if not backend.is_identity(s):
                graph.add_edge(e.key, s.key, key=x, letter=sys.alphabet.symbol(x))
    return MooreDiagram(root.key, [e.key for e in states], {e.key: str(e) for e in states}, graph)


def classify_diagram(diagram: MooreDiagram) -> ActivityClass:
    cyclic = diagram.cyclic_components()
    if not cyclic:
        return FINITARY
    for component in cyclic:
        if diagram.internal_edges(component) > len(component):
            return EXPONENTIAL
    simple = nx.DiGraph(diagram.graph)
    condensed = nx.condensation(simple)
    mapping = condensed.graph['mapping']
    weight = {c: 0 for c in condensed.nodes}
    for component in cyclic:
        weight[mapping[next(iter(component))]] = 1
    longest = {}
    for c in reversed(list(nx.topological_sort(condensed))):
        tail = max((longest[t] for t in condensed.successors(c)), default=0)
        longest[c] = weight[c] + tail
    return ActivityClass('polynomial', max(longest.values()) - 1)


def activity_class(sys: RecursionSystem, w, settings: EngineSettings = DEFAULT_SETTINGS) -> ActivityClass:
    return classify_diagram(moore_diagram(sys, w, settings))


def activity_growth(sys: RecursionSystem, w, n: int, settings: EngineSettings = DEFAULT_SETTINGS) -> int:
    """alpha_g(n) by dynamic programming over the minimized transducer"""
    backend, root = _element(sys, w, settings)
    states = {}
    queue = [root]
    while queue:
        e = queue.pop()
        if e.key in states:
            continue
        states[e.key] = e
        queue.extend(backend.sections(e))
    counts = {k: 0 if backend.is_identity(e) else 1 for k, e in states.items()}
    for _ in range(n):
        counts = {k: sum(counts[s.key] for s in backend.sections(e)) for k, e in states.items()}
    return counts[root.key]


def _state_set(backend: TreeBackend, sys: RecursionSystem) -> List[Element]:
    """Non-trivial states of the generators and of their inverses"""
    found = {}
    for i in range(len(sys.generators)):
        for sign in (1, -1):
            for e in _non_trivial_states(backend, backend.normalize(GroupWord.generator(i, sign))):
                found.setdefault(e.key, e)
    return list(found.values())


def _returning_paths(backend: TreeBackend, g: Element, length: int) -> List[Tuple[int, ...]]:
    """Words v of the given length with g|_v = g"""
    paths = []
    stack = [(g, ())]
    while stack:
        e, v = stack.pop()
        if len(v) == length:
            if e.key == g.key:
                paths.append(v)
            continue
        for x, s in enumerate(backend.sections(e)):
            if not backend.is_identity(s):
                stack.append((s, v + (x,)))
    return sorted(paths)


def pold_contraction_test(sys: RecursionSystem, arrow_cap: Optional[int] = None,
                          settings: EngineSettings = DEFAULT_SETTINGS, multiple: int = 1) -> ContractionStatus:
    """Contracting iff the groupoid of self-reproducing subtree maps is finite.

    Paths have length ``multiple`` times the lcm of the cycle lengths.
    """
    if multiple < 1:
        raise ValueError("multiple must be positive")
    arrow_cap = settings.arrow_cap if arrow_cap is None else arrow_cap
    report = {}
    try:
        backend = faithful_backend(sys, settings)
        classes = {name: activity_class(sys, GroupWord.generator(i), settings)
                   for i, name in enumerate(sys.names)}
        report['activity'] = {name: str(c) for name, c in classes.items()}
        if any(c.kind == 'exponential' for c in classes.values()):
            report['reason'] = "a generator has exponential activity"
            return ContractionStatus('not_applicable', report=report, source='pold')

        states = _state_set(backend, sys)
        graph = nx.MultiDiGraph()
        for e in states:
            graph.add_node(e.key)
            for x, s in enumerate(backend.sections(e)):
                if not backend.is_identity(s):
                    graph.add_edge(e.key, s.key, key=x)
        diagram = MooreDiagram(None, [e.key for e in states], {e.key: str(e) for e in states}, graph)
        cycles = diagram.cyclic_components()
        period = 1
        for component in cycles:
            period = lcm(period, len(component))
        period *= multiple
        report['period'] = period

        on_cycles = {k for component in cycles for k in component}
        generators = []
        for g in states:
            if g.key not in on_cycles:
                continue
            for v in _returning_paths(backend, g, period):
                generators.append(Arrow(v, backend.act(g, v), g))
        report['arrow_generators'] = len(generators)
        closure = close_arrows(generators, [], backend, arrow_cap)
        report['arrows'] = len(closure.arrows)
    except BudgetExceeded as exc:
        report['reason'] = str(exc)
        return ContractionStatus('not_applicable', report=report, source='pold')

    fmt = sys.alphabet.format_word
    if closure.status == 'infinite':
        loop = closure.witness
        growth = [len(backend.power(loop.elem, k).nf) for k in (1, 2, 3)]
        witness = {'element': str(loop.elem), 'path': fmt(loop.src), 'growth': growth}
        logger.info(f"Growth witness {witness['element']} at {witness['path']}")
        return ContractionStatus('not_contracting', witness=witness, report=report, source='pold')
    if closure.status == 'exceeds_cap':
        report['reason'] = f"groupoid passed {arrow_cap} arrows without a growth witness"
        return ContractionStatus('not_applicable', report=report, source='pold')

    found = {}
    queue = [arrow.elem for arrow in closure.arrows]
    while queue:
        e = queue.pop()
        if e.key in found:
            continue
        found[e.key] = e
        queue.extend(backend.sections(e))
    nucleus = nucleus_from_elements(sys, found.values(), settings, backend)
    if nucleus is None:
        report['reason'] = "arrow elements failed the stability check"
        return ContractionStatus('not_applicable', report=report, source='pold')
    return ContractionStatus('contracting', nucleus, report=report, source='pold')
