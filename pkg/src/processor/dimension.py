"""Dimension certificates: partitions of X^n with finite restriction groupoids"""
import hashlib
import itertools
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from src.models.errors import CertificateError, ParseError, ValidationError, WreathError
from src.models.recursion import BackendDescriptor, RecursionSystem
from src.parser.dsl import SourceDoc, format_word, parse, parse_word, serialize
from src.processor.contraction import compute_nucleus
from src.processor.equality_backends import Element, TreeBackend, faithful_backend, fresh_backend
from src.utils.settings import DEFAULT_SETTINGS, EngineSettings

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]

STRATEGIES = ("exhaustive", "greedy", "random")
LOOP_ORDER_CHECKS = 32  # loop elements whose order is tested per closure
GREEDY_COLORINGS = ("largest_first", "smallest_last", "independent_set",
                    "connected_sequential_bfs", "saturation_largest_first")
NOT_FOUND_NOTE = "no certificate at this level; this is not a lower bound on the dimension"


@dataclass(frozen=True)
class Arrow:
    src: Word  # the arrow maps v w to dst elem(w)
    dst: Word
    elem: Element

    @property
    def key(self):
        return self.src, self.dst, self.elem.key

    def then(self, other: "Arrow", backend: TreeBackend) -> "Arrow":
        """self followed by other"""
        return Arrow(self.src, other.dst, backend.multiply(other.elem, self.elem))


@dataclass
class GroupoidClosure:
    status: str  # 'finite', 'infinite', 'exceeds_cap'
    arrows: List[Arrow]
    generators: int
    witness: Optional[Arrow] = None  # loop arrow of infinite order

    @property
    def is_finite(self) -> bool:
        return self.status == 'finite'


@dataclass
class PartitionCertificate:
    level: int
    parts: List[List[Word]]
    generating_set: List[Element]
    closures: List[List[Arrow]]
    d: int
    system: RecursionSystem = field(repr=False)
    convention: str = "prefix"

    @property
    def arrows_per_part(self) -> List[int]:
        return [len(arrows) for arrows in self.closures]

    def to_dict(self) -> dict:
        text = serialize(self.system).text
        fmt = self.system.alphabet.format_word
        return {
            'system-hash': system_hash(self.system),
            'system': text,
            'level': self.level,
            'parts': [[fmt(v) for v in part] for part in self.parts],
            'generating-set': [format_word(self.system, e.nf) for e in self.generating_set],
            'arrows-per-part': self.arrows_per_part,
            'd': self.d,
            'convention': self.convention
        }


@dataclass
class PartitionResult:
    status: str  # 'certified', 'not_certified'
    certificate: Optional[PartitionCertificate] = None
    part_index: Optional[int] = None
    reason: str = ""

    @property
    def certified(self) -> bool:
        return self.status == 'certified'


@dataclass
class SearchResult:
    status: str  # 'certified', 'not_found'
    certificate: Optional[PartitionCertificate] = None
    log: List[str] = field(default_factory=list)
    candidates: int = 0

    @property
    def certified(self) -> bool:
        return self.status == 'certified'


@dataclass
class DimensionReport:
    rows: List[dict] = field(default_factory=list)  # n, d, status, candidates
    generating_set: List[str] = field(default_factory=list)

    def best_per_level(self) -> Dict[int, Optional[int]]:
        best = {}
        for row in self.rows:
            best.setdefault(row['n'], None)
            if row['status'] == 'certified' and (best[row['n']] is None or row['d'] < best[row['n']]):
                best[row['n']] = row['d']
        return best

    @property
    def best_bound(self) -> Optional[int]:
        certified = [d for d in self.best_per_level().values() if d is not None]
        return min(certified) if certified else None

    def to_dict(self) -> dict:
        return {
            'rows': self.rows,
            'best_per_level': self.best_per_level(),
            'best_bound': self.best_bound,
            'generating_set': self.generating_set,
            'note': NOT_FOUND_NOTE
        }


def system_hash(sys: RecursionSystem) -> str:
    return hashlib.sha256(serialize(sys).text.encode("utf-8")).hexdigest()


def groupoid_closure(sys: RecursionSystem, part: Iterable[Word], generating_set: Iterable,
                     arrow_cap: Optional[int] = None, backend: Optional[TreeBackend] = None,
                     settings: EngineSettings = DEFAULT_SETTINGS) -> GroupoidClosure:
    """BFS closure of the arrows (v, g(v), g|_v) with v, g(v) in the part"""
    arrow_cap = settings.arrow_cap if arrow_cap is None else arrow_cap
    backend = backend or faithful_backend(sys, settings)
    part = set(part)
    elements = [backend.element(g) for g in generating_set]

    generators = []
    for v in sorted(part):
        for g in elements:
            u = backend.act(g, v)
            if u in part:
                generators.append(Arrow(v, u, backend.section_at(g, v)))
    return close_arrows(generators, sorted(part), backend, arrow_cap)


def close_arrows(generators: Iterable[Arrow], vertices: Iterable[Word], backend: TreeBackend,
                 arrow_cap: int) -> GroupoidClosure:
    """Groupoid generated by the arrows, with inverses and identities at the vertices.

    A loop arrow whose element has infinite order proves the groupoid infinite.
    """
    unique: Dict[Tuple, Arrow] = {}
    for arrow in generators:
        inverse = Arrow(arrow.dst, arrow.src, backend.inverse(arrow.elem))
        unique.setdefault(arrow.key, arrow)
        unique.setdefault(inverse.key, inverse)
    by_source: Dict[Word, List[Arrow]] = {}
    for arrow in unique.values():
        by_source.setdefault(arrow.src, []).append(arrow)

    identity = backend.identity()
    arrows = {}
    queue = []
    for v in sorted(set(vertices) | set(by_source)):
        arrow = Arrow(v, v, identity)
        arrows[arrow.key] = arrow
        queue.append(arrow)
    loop_checks = 0
    i = 0
    while i < len(queue):
        current = queue[i]
        i += 1
        for step in by_source.get(current.dst, ()):
            composed = current.then(step, backend)
            if composed.key in arrows:
                continue
            arrows[composed.key] = composed
            queue.append(composed)
            if composed.src == composed.dst and loop_checks < LOOP_ORDER_CHECKS:
                loop_checks += 1
                if backend.order(composed.elem).status == 'infinite':
                    logger.debug(f"Loop arrow at {composed.src} carries an element of infinite order")
                    return GroupoidClosure('infinite', list(arrows.values()), len(unique), composed)
            if len(arrows) > arrow_cap:
                return GroupoidClosure('exceeds_cap', list(arrows.values()), len(unique))
    return GroupoidClosure('finite', list(arrows.values()), len(unique))


def default_generating_set(sys: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS) -> List[Element]:
    """The nucleus, carried over to the faithful action"""
    status = compute_nucleus(sys, settings=settings)
    if not status.is_contracting:
        raise ValidationError("no nucleus available; pass an explicit generating set")
    backend = faithful_backend(sys, settings)
    found = {}
    for e in status.nucleus.elements:
        element = backend.element(e.nf)
        found.setdefault(element.key, element)
    return sorted(found.values(), key=lambda e: (not backend.is_identity(e), e.nf.sort_key()))


def _check_parts(sys: RecursionSystem, parts: Sequence[Iterable[Word]]) -> Tuple[int, List[List[Word]]]:
    parts = [sorted(set(tuple(v) for v in part)) for part in parts]
    words = [v for part in parts for v in part]
    lengths = {len(v) for v in words}
    if len(lengths) > 1:
        raise ValidationError("parts mix words of different lengths")
    n = lengths.pop() if lengths else 0
    if len(words) != len(set(words)):
        raise ValidationError("parts are not disjoint")
    if set(words) != set(itertools.product(range(sys.degree), repeat=n)):
        raise ValidationError(f"parts do not cover level {n}")
    return n, parts


def verify_partition(sys: RecursionSystem, parts: Sequence[Iterable[Word]], generating_set=None,
                     arrow_cap: Optional[int] = None, settings: EngineSettings = DEFAULT_SETTINGS,
                     fresh: bool = False) -> PartitionResult:
    n, parts = _check_parts(sys, parts)
    tree = sys.with_backend(BackendDescriptor.tree())
    backend = fresh_backend(tree, settings) if fresh else faithful_backend(sys, settings)
    if generating_set is None:
        generating_set = default_generating_set(sys, settings)
    elements = [backend.element(g.nf if isinstance(g, Element) else g) for g in generating_set]
    closures = []
    for index, part in enumerate(parts):
        try:
            closure = groupoid_closure(sys, part, elements, arrow_cap, backend, settings)
        except WreathError as exc:
            return PartitionResult('not_certified', part_index=index, reason=str(exc))
        if not closure.is_finite:
            reason = f"groupoid of part {index} is {closure.status.replace('_', ' ')}"
            return PartitionResult('not_certified', part_index=index, reason=reason)
        closures.append(closure.arrows)
    certificate = PartitionCertificate(n, parts, elements, closures, len(parts) - 1, sys)
    return PartitionResult('certified', certificate)


def _restricted_growth(m: int, labels: int) -> Iterator[Tuple[int, ...]]:
    """Set partitions of m ordered vertices into at most ``labels`` parts, lexicographically"""
    if m == 0:
        yield ()
        return

    def extend(prefix, top):
        if len(prefix) == m:
            yield tuple(prefix)
            return
        for label in range(min(top + 2, labels)):
            prefix.append(label)
            yield from extend(prefix, max(top, label))
            prefix.pop()

    yield from extend([0], 0)


def _canonical_labels(labels: Sequence[int]) -> Tuple[int, ...]:
    renaming = {}
    return tuple(renaming.setdefault(label, len(renaming)) for label in labels)


def _parts_from_labels(vertices: Sequence[Word], labels: Sequence[int]) -> List[List[Word]]:
    parts: Dict[int, List[Word]] = {}
    for v, label in zip(vertices, labels):
        parts.setdefault(label, []).append(v)
    return [parts[label] for label in sorted(parts)]


def _germ_arrows(sys: RecursionSystem, vertices: Sequence[Word], elements: Sequence[Element],
                 backend: TreeBackend) -> List[Tuple[Word, Word]]:
    """Pairs (v, g(v)) whose germ g|_v is non-trivial"""
    pairs = []
    for v in vertices:
        for g in elements:
            if not backend.is_identity(backend.section_at(g, v)):
                pairs.append((v, backend.act(g, v)))
    return pairs


def _greedy_candidates(sys: RecursionSystem, vertices: List[Word], d_target: int,
                       elements: Sequence[Element], backend: TreeBackend) -> Iterator[Tuple[int, ...]]:
    yield (0,) * len(vertices)
    if d_target < 1:
        return
    pairs = _germ_arrows(sys, vertices, elements, backend)
    carrying = {v for pair in pairs for v in pair}
    yield _canonical_labels([0 if v in carrying else 1 for v in vertices])
    conflicts = nx.Graph()
    conflicts.add_nodes_from(vertices)
    conflicts.add_edges_from((v, u) for v, u in pairs if v != u)
    for strategy in GREEDY_COLORINGS:
        coloring = nx.greedy_color(conflicts, strategy=strategy)
        if max(coloring.values(), default=0) <= d_target:
            yield _canonical_labels([coloring[v] for v in vertices])


def _random_candidates(vertices: List[Word], d_target: int, seed: int, restarts: int,
                       moves: int = 8) -> Iterator[Tuple[int, ...]]:
    rng = random.Random(seed)
    for _ in range(restarts):
        labels = [rng.randint(0, d_target) for _ in vertices]
        for _ in range(moves + 1):
            yield _canonical_labels(labels)
            labels[rng.randrange(len(labels))] = rng.randint(0, d_target)


def search_partition(sys: RecursionSystem, n: int, d_target: int, generating_set=None,
                     strategy: str = "exhaustive", budget: Optional[int] = None,
                     settings: EngineSettings = DEFAULT_SETTINGS, seed: Optional[int] = None) -> SearchResult:
    """Look for a certified partition of X^n into at most d_target + 1 parts.

    Candidates are verified in parallel batches; the first certified one in
    candidate order wins, so the outcome does not depend on the worker count.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"Unknown strategy: {strategy}")
    budget = settings.partition_budget if budget is None else budget
    seed = settings.seed if seed is None else seed
    vertices = list(itertools.product(range(sys.degree), repeat=n))
    if generating_set is None:
        generating_set = default_generating_set(sys, settings)
    backend = faithful_backend(sys, settings)
    elements = [backend.element(g.nf if isinstance(g, Element) else g) for g in generating_set]
    log = [f"strategy={strategy} n={n} d={d_target} generating set of {len(elements)} elements"]

    if strategy == "exhaustive":
        if (d_target + 1) ** max(len(vertices) - 1, 0) > budget:
            log.append(f"exhaustive search over {len(vertices)} vertices exceeds budget {budget}")
            return SearchResult('not_found', log=log + [NOT_FOUND_NOTE])
        candidates = _restricted_growth(len(vertices), d_target + 1)
    elif strategy == "greedy":
        candidates = _greedy_candidates(sys, vertices, d_target, elements, backend)
    else:
        candidates = _random_candidates(vertices, d_target, seed, settings.random_restarts)

    def attempt(labels):
        return verify_partition(sys, _parts_from_labels(vertices, labels), elements, settings=settings)

    seen = set()
    tried = 0
    batch_size = max(1, settings.jobs) * 4
    with ThreadPoolExecutor(max_workers=max(1, settings.jobs)) as executor:
        while tried < budget:
            batch = []
            for labels in candidates:
                if labels in seen:
                    continue
                seen.add(labels)
                batch.append(labels)
                if len(batch) >= batch_size or tried + len(batch) >= budget:
                    break
            if not batch:
                break
            tried += len(batch)
            for labels, result in zip(batch, executor.map(attempt, batch)):
                if not result.certified:
                    continue
                parts = _parts_from_labels(vertices, labels)
                recheck = verify_partition(sys, parts, elements, settings=settings, fresh=True)
                if recheck.certified:
                    log.append(f"certified after {tried} candidates")
                    logger.info(f"Certified {len(parts)}-part partition of level {n}")
                    return SearchResult('certified', recheck.certificate, log, tried)
                logger.warning(f"Partition {labels} failed re-verification with a fresh cache")
    log.append(f"no certified partition among {tried} candidates")
    log.append(NOT_FOUND_NOTE)
    return SearchResult('not_found', log=log, candidates=tried)


def dimension_report(sys: RecursionSystem, n_range: Iterable[int], d_range: Iterable[int],
                     strategy: str = "exhaustive", settings: EngineSettings = DEFAULT_SETTINGS,
                     generating_set=None, stop_when_certified: bool = False) -> DimensionReport:
    """Search every (n, d) of the grid; with ``stop_when_certified`` larger d at a certified level are skipped"""
    if generating_set is None:
        generating_set = default_generating_set(sys, settings)
    report = DimensionReport(generating_set=[format_word(sys, e.nf) for e in generating_set])
    d_values = sorted(d_range)
    for n in n_range:
        for d in d_values:
            result = search_partition(sys, n, d, generating_set, strategy, settings=settings)
            report.rows.append({'n': n, 'd': d, 'status': result.status, 'candidates': result.candidates})
            if stop_when_certified and result.certified:
                break
    return report


def induce_partition(parts: Sequence[Sequence[Word]], degree: int, convention: str = "prefix") -> List[List[Word]]:
    """Level n partition pushed to level n + 1 by the length-n prefix (or suffix)"""
    if convention not in ("prefix", "suffix"):
        raise ValueError(f"Unknown convention: {convention}")
    owner = {tuple(v): i for i, part in enumerate(parts) for v in part}
    n = len(next(iter(owner))) if owner else 0
    induced: List[List[Word]] = [[] for _ in parts]
    for w in itertools.product(range(degree), repeat=n + 1):
        key = w[:n] if convention == "prefix" else w[1:]
        induced[owner[key]].append(w)
    return induced


def certificate_to_json(certificate: PartitionCertificate) -> str:
    return json.dumps(certificate.to_dict(), indent=2, sort_keys=True) + "\n"


def load_certificate(text: str) -> Tuple[RecursionSystem, dict]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CertificateError(f"certificate is not valid json: {exc}") from None
    for name in ('system-hash', 'system', 'level', 'parts', 'generating-set', 'd'):
        if name not in data:
            raise CertificateError(f"certificate lacks '{name}'")
    try:
        sys = parse(SourceDoc(data['system'], "<certificate>"))
    except (ParseError, ValidationError) as exc:
        raise CertificateError(f"embedded system does not parse: {exc}") from None
    if system_hash(sys) != data['system-hash']:
        raise CertificateError("system-hash does not match the embedded system")
    return sys, data


def verify_certificate(text: str, settings: EngineSettings = DEFAULT_SETTINGS) -> PartitionResult:
    """Recompute every closure of a stored certificate with a fresh cache"""
    sys, data = load_certificate(text)
    parts = [[sys.alphabet.parse_word(v) for v in part] for part in data['parts']]
    generating_set = [parse_word(sys, w) for w in data['generating-set']]
    if data['d'] != len(parts) - 1:
        return PartitionResult('not_certified', reason="d does not match the number of parts")
    if any(len(v) != data['level'] for part in parts for v in part):
        return PartitionResult('not_certified', reason="part words do not have the stated level")
    return verify_partition(sys, parts, generating_set, settings=settings, fresh=True)


def parse_parts(sys: RecursionSystem, text: str) -> List[List[Word]]:
    """'00 11 22 | 01 02 ...' into parts of letter tuples"""
    return [[sys.alphabet.parse_word(w) for w in chunk.split()] for chunk in text.split("|")]
