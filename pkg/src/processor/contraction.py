import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Tuple

import networkx as nx

from src.models.errors import BudgetExceeded
from src.models.recursion import Permutation, RecursionSystem
from src.processor.equality_backends import (
    Element,
    EqualityBackend,
    SubgroupResult,
    backend_for,
    enumerate_subgroup,
    faithful_backend,
)
from src.utils.settings import DEFAULT_SETTINGS, EngineSettings

logger = logging.getLogger(__name__)


@dataclass
class Nucleus:
    elements: List[Element]  # identity first, then shortest-lexicographic
    perm: Dict[Hashable, Permutation]
    sect: Dict[Hashable, Tuple[Hashable, ...]]
    depth_witness: int
    backend: EqualityBackend = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, element: Element) -> bool:
        return element.key in self.perm

    def __iter__(self):
        return iter(self.elements)

    @property
    def keys(self) -> frozenset:
        return frozenset(self.perm)

    def names(self) -> List[str]:
        return [str(e) for e in self.elements]

    def non_trivial(self) -> List[Element]:
        return [e for e in self.elements if not self.backend.is_identity(e)]

    def to_dict(self) -> dict:
        return {
            'size': len(self.elements),
            'elements': self.names(),
            'depth_witness': self.depth_witness,
            'backend': self.backend.kind
        }


@dataclass
class ContractionStatus:
    status: str  # 'contracting', 'not_contracting', 'unknown', 'not_applicable'
    nucleus: Optional[Nucleus] = None
    witness: Optional[dict] = None  # element, path, growth of a self-reproducing arrow
    report: dict = field(default_factory=dict)
    source: str = "nucleus"  # 'nucleus' or 'pold'

    @property
    def is_contracting(self) -> bool:
        return self.status == 'contracting'

    def to_dict(self) -> dict:
        result = {'status': self.status, 'source': self.source, 'report': self.report}
        if self.nucleus is not None:
            result['nucleus'] = self.nucleus.to_dict()
        if self.witness is not None:
            result['witness'] = self.witness
        return result


@dataclass
class NucleusCheck:
    holds: bool
    depth: Optional[int] = None
    offenders: List[str] = field(default_factory=list)  # products whose sections escape
    reason: str = ""

    def to_dict(self) -> dict:
        return {'holds': self.holds, 'depth': self.depth, 'offenders': self.offenders, 'reason': self.reason}


@dataclass
class DimZeroResult:
    status: str  # 'yes', 'no', 'unknown'
    subgroup_order: Optional[int] = None
    infinite_element: Optional[str] = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            'status': self.status,
            'subgroup_order': self.subgroup_order,
            'infinite_element': self.infinite_element,
            'reason': self.reason
        }


def _ordered(backend: EqualityBackend, elements: Iterable[Element]) -> List[Element]:
    unique = {e.key: e for e in elements}
    return sorted(unique.values(), key=lambda e: (not backend.is_identity(e), e.nf.sort_key()))


def _stability_depth(backend: EqualityBackend, keys: frozenset, product: Element,
                     n_max: int, budget: int) -> Optional[int]:
    """Least n with every section of ``product`` at depth n inside ``keys``"""
    level = {product.key: product}
    for n in range(n_max + 1):
        if all(k in keys for k in level):
            return n
        deeper = {}
        for e in level.values():
            for s in backend.sections(e):
                deeper[s.key] = s
        if len(deeper) > budget:
            raise BudgetExceeded("Stability scan exceeded the element budget", len(deeper))
        level = deeper
    return None


def _check(backend: EqualityBackend, elements: List[Element], generators: List[Element],
           n_max: int, symmetric: bool, settings: EngineSettings) -> Tuple[NucleusCheck, List[Element]]:
    """Stability of products with a section-closed generating set.

    The set itself must be closed under sections: then a product whose sections
    lie inside at depth n stays inside at every greater depth, and the largest
    per-product depth is a common witness.
    """
    keys = frozenset(e.key for e in elements)
    if not any(backend.is_identity(e) for e in elements):
        return NucleusCheck(False, reason="set does not contain the identity"), []
    escaping = sorted({backend.format(e) for e in elements
                       if any(s.key not in keys for s in backend.sections(e))})
    if escaping:
        return NucleusCheck(False, offenders=escaping, reason="set is not closed under sections"), []
    products = []
    for g in elements:
        for s in generators:
            products.append(backend.multiply(s, g) if symmetric else backend.multiply(g, s))

    def depth_of(product):
        return _stability_depth(backend, keys, product, n_max, settings.nucleus_budget)

    with ThreadPoolExecutor(max_workers=max(1, settings.jobs)) as executor:
        depths = list(executor.map(depth_of, products))
    failing = [p for p, d in zip(products, depths) if d is None]
    if failing:
        names = sorted({backend.format(p) for p in failing})
        return NucleusCheck(False, offenders=names, reason=f"sections escape beyond depth {n_max}"), failing
    return NucleusCheck(True, depth=max(depths, default=0)), []


def verify_nucleus(sys: RecursionSystem, elements: Iterable, n_max: Optional[int] = None,
                   symmetric: bool = False, settings: EngineSettings = DEFAULT_SETTINGS) -> NucleusCheck:
    """Stability test: (gs)|_v lies in the set for all g, s and all v of some length n.

    ``symmetric`` switches the products to (sg)|_v.
    """
    n_max = settings.n_max if n_max is None else n_max
    backend = backend_for(sys, settings)
    try:
        members = [backend.element(e) for e in elements]
        generators = closed_generators(backend, settings.nucleus_budget)
        check, _ = _check(backend, members, generators, n_max, symmetric, settings)
    except BudgetExceeded as exc:
        return NucleusCheck(False, reason=str(exc))
    return check


def _saturate(backend: EqualityBackend, found: Dict[Hashable, Element], budget: int):
    queue = list(found.values())
    while queue:
        e = queue.pop()
        for s in backend.sections(e):
            if s.key not in found:
                found[s.key] = s
                queue.append(s)
                if len(found) > budget:
                    raise BudgetExceeded(f"Nucleus candidate exceeded {budget} elements", len(found))


def closed_generators(backend: EqualityBackend, budget: int) -> List[Element]:
    """S and S^-1 together with all their sections, identity excluded"""
    found = {s.key: s for s in backend.generators()}
    _saturate(backend, found, budget)
    return [e for e in _ordered(backend, found.values()) if not backend.is_identity(e)]


def _section_graph(backend: EqualityBackend, elements: Iterable[Element]) -> nx.DiGraph:
    graph = nx.DiGraph()
    for e in elements:
        graph.add_node(e.key)
        for s in backend.sections(e):
            graph.add_edge(e.key, s.key)
    return graph


def persistent_keys(graph: nx.DiGraph) -> set:
    """States on cycles plus everything reachable from them"""
    on_cycles = set()
    for component in nx.strongly_connected_components(graph):
        node = next(iter(component))
        if len(component) > 1 or graph.has_edge(node, node):
            on_cycles |= component
    persistent = set(on_cycles)
    for node in on_cycles:
        persistent |= nx.descendants(graph, node)
    return persistent


def _persistent_sections(backend: EqualityBackend, product: Element, budget: int) -> List[Element]:
    closure = backend.closure(product.nf, budget)
    graph = nx.DiGraph()
    for state in closure.states:
        for target in closure.trans[state]:
            graph.add_edge(state, target)
    keep = persistent_keys(graph)
    return [backend.normalize(closure.words[state]) for state in closure.states if state in keep]


def _build(backend: EqualityBackend, elements: Iterable[Element], depth: int) -> Nucleus:
    ordered = _ordered(backend, elements)
    perm = {e.key: backend.perm(e) for e in ordered}
    sect = {e.key: tuple(s.key for s in backend.sections(e)) for e in ordered}
    return Nucleus(ordered, perm, sect, depth, backend)


def compute_nucleus(sys: RecursionSystem, budget: Optional[int] = None,
                    settings: EngineSettings = DEFAULT_SETTINGS) -> ContractionStatus:
    """Grow a section-closed candidate until it passes the stability test, then
    keep only the sections that persist along arbitrarily long words."""
    budget = settings.nucleus_budget if budget is None else budget
    backend = backend_for(sys, settings)
    report = {'backend': backend.kind, 'rounds': 0, 'budget': budget}
    try:
        generators = closed_generators(backend, budget)
        found = {backend.identity().key: backend.identity()}
        for s in generators:
            found[s.key] = s
        for round_number in range(1, settings.nucleus_rounds + 1):
            report['rounds'] = round_number
            _saturate(backend, found, budget)
            check, failing = _check(backend, list(found.values()), generators, settings.n_max, False, settings)
            logger.info(f"Nucleus round {round_number}: {len(found)} candidates, stable={check.holds}")
            if check.holds:
                break
            before = len(found)
            for product in failing:
                for h in _persistent_sections(backend, product, budget):
                    found.setdefault(h.key, h)
                if len(found) > budget:
                    raise BudgetExceeded(f"Nucleus candidate exceeded {budget} elements", len(found))
            if len(found) == before:
                report['reason'] = "no new persistent sections within the stability depth"
                logger.warning(f"Nucleus search stalled at {before} candidates")
                return ContractionStatus('unknown', report=report)
        else:
            report['reason'] = f"no stable candidate after {settings.nucleus_rounds} rounds"
            logger.warning(report['reason'])
            return ContractionStatus('unknown', report=report)

        candidates = list(found.values())
        keep = persistent_keys(_section_graph(backend, candidates))
        keep.add(backend.identity().key)
        minimal = [e for e in candidates if e.key in keep]
        final_check, _ = _check(backend, minimal, generators, settings.n_max, False, settings)
        if not final_check.holds:
            logger.warning("Minimized nucleus failed the stability test; keeping the stable candidate")
            minimal, final_check = candidates, check
        report['candidates'] = len(candidates)
    except BudgetExceeded as exc:
        report['reason'] = str(exc)
        logger.warning(f"Nucleus computation gave up: {exc}")
        return ContractionStatus('unknown', report=report)
    nucleus = _build(backend, minimal, final_check.depth)
    logger.info(f"Nucleus of size {len(nucleus)} with depth witness {nucleus.depth_witness}")
    return ContractionStatus('contracting', nucleus, report=report)


def nucleus_from_elements(sys: RecursionSystem, elements: Iterable, settings: EngineSettings = DEFAULT_SETTINGS,
                          backend: Optional[EqualityBackend] = None) -> Optional[Nucleus]:
    """Nucleus object for a user-supplied set, or None if it fails verification"""
    backend = backend or backend_for(sys, settings)
    members = [backend.element(e) for e in elements]
    found = {e.key: e for e in members}
    identity = backend.identity()
    found.setdefault(identity.key, identity)
    try:
        generators = closed_generators(backend, settings.nucleus_budget)
        check, _ = _check(backend, list(found.values()), generators, settings.n_max, False, settings)
    except BudgetExceeded:
        return None
    if not check.holds:
        return None
    return _build(backend, found.values(), check.depth)


def nucleus_subgroup(sys: RecursionSystem, nucleus: Nucleus, cap: Optional[int] = None,
                     settings: EngineSettings = DEFAULT_SETTINGS) -> SubgroupResult:
    cap = settings.subgroup_cap if cap is None else cap
    return enumerate_subgroup(sys, [e.nf for e in nucleus.elements], cap)


def dim_zero_test(sys: RecursionSystem, cap: Optional[int] = None,
                  settings: EngineSettings = DEFAULT_SETTINGS,
                  status: Optional[ContractionStatus] = None) -> DimZeroResult:
    """Zero-dimensional limit space iff the nucleus generates a finite group"""
    cap = settings.subgroup_cap if cap is None else cap
    status = status or compute_nucleus(sys, settings=settings)
    if not status.is_contracting:
        return DimZeroResult('unknown', reason="contraction not established")
    subgroup = nucleus_subgroup(sys, status.nucleus, cap, settings)
    if subgroup.status == 'finite':
        return DimZeroResult('yes', subgroup.order)
    tree = faithful_backend(sys, settings)
    for element in subgroup.elements:
        result = tree.order(element, settings.order_cap)
        if result.status == 'infinite':
            return DimZeroResult('no', infinite_element=tree.format(element),
                                 reason=f"subgroup passed cap {cap} and contains an element of infinite order")
    return DimZeroResult('unknown', reason=f"subgroup passed cap {cap} without an infinite-order witness")


def certify_contraction(sys: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS) -> ContractionStatus:
    """Generic nucleus search, falling back to the polynomial-activity test"""
    from src.processor.activity import pold_contraction_test

    status = compute_nucleus(sys, settings=settings)
    if status.status != 'unknown':
        return status
    pold = pold_contraction_test(sys, settings=settings)
    if pold.status in ('contracting', 'not_contracting'):
        pold.report['generic'] = status.report
        return pold
    return status
