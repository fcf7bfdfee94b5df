"""Finite-level pictures of the action: Schreier graphs on X^n and tile-adjacency
graphs approximating the limit space.

Vertices are words of X^n with the first letter at the root of the tree, so
the tile graph at level n is built from the action on X^n directly; read a
vertex backwards to match left-infinite limit-space sequences.
"""
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import pydot

from src.models.errors import UnsupportedFormat
from src.models.recursion import GroupWord, RecursionSystem, act_word
from src.processor.equality_backends import faithful_backend
from src.utils.settings import DEFAULT_SETTINGS, EngineSettings

logger = logging.getLogger(__name__)

FORMATS = ("dot", "graphml", "json")
CONVENTION = "first letter at the root; tile vertex v = x_1...x_n stands for the sequence ...x_n...x_1 read backwards"


@dataclass
class LevelGraph:
    level: int
    flavor: str  # 'schreier' or 'tile'
    vertices: List[str]
    edges: List[Tuple[str, str, str]]  # (v, u, label)

    def to_networkx(self) -> Union[nx.MultiDiGraph, nx.Graph]:
        graph = nx.MultiDiGraph() if self.flavor == "schreier" else nx.Graph()
        graph.graph['level'] = self.level
        graph.graph['flavor'] = self.flavor
        graph.add_nodes_from(self.vertices)
        for v, u, label in self.edges:
            graph.add_edge(v, u, label=label)
        return graph

    def components(self) -> int:
        graph = self.to_networkx()
        if graph.is_directed():
            return nx.number_weakly_connected_components(graph)
        return nx.number_connected_components(graph)

    def degrees(self) -> Dict[str, int]:
        return dict(self.to_networkx().degree())


@dataclass
class LevelReport:
    rows: List[dict] = field(default_factory=list)  # level, orbits, transitive, tile_connected

    def transitive_levels(self) -> List[bool]:
        return [row['transitive'] for row in self.rows]

    def to_dict(self) -> dict:
        return {'rows': self.rows}


@dataclass
class SelfReplicationResult:
    status: str  # 'yes', 'no', 'unknown'
    witnesses: Dict[str, str] = field(default_factory=dict)  # generator -> stabilizer element
    reason: str = ""

    def to_dict(self) -> dict:
        return {'status': self.status, 'witnesses': self.witnesses, 'reason': self.reason}


def level_words(sys: RecursionSystem, n: int) -> List[Tuple[int, ...]]:
    return list(itertools.product(range(sys.degree), repeat=n))


def _images(sys: RecursionSystem, words: Sequence[GroupWord], vertices: Sequence[Tuple[int, ...]],
            jobs: int) -> List[List[Tuple[int, ...]]]:
    """images[i][j] = words[i] applied to vertices[j]"""
    def row(w):
        return [act_word(sys, w, v) for v in vertices]

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        return list(executor.map(row, words))


def schreier(sys: RecursionSystem, n: int, settings: EngineSettings = DEFAULT_SETTINGS) -> LevelGraph:
    if n < 0:
        raise ValueError("level must be non-negative")
    vertices = level_words(sys, n)
    fmt = sys.alphabet.format_word
    generators = [GroupWord.generator(i) for i in range(len(sys.generators))]
    images = _images(sys, generators, vertices, settings.jobs)
    edges = []
    for gen, row in zip(sys.generators, images):
        for v, u in zip(vertices, row):
            edges.append((fmt(v), fmt(u), gen.name))
    edges.sort()
    return LevelGraph(n, "schreier", [fmt(v) for v in vertices], edges)


def tile_graph(sys: RecursionSystem, nucleus, n: int, settings: EngineSettings = DEFAULT_SETTINGS) -> LevelGraph:
    """v -- u iff some non-trivial nucleus element maps v to u; label is the least such element"""
    if n < 0:
        raise ValueError("level must be non-negative")
    vertices = level_words(sys, n)
    fmt = sys.alphabet.format_word
    elements = nucleus.non_trivial()
    images = _images(sys, [e.nf for e in elements], vertices, settings.jobs)
    labels: Dict[Tuple[str, str], str] = {}
    for element, row in zip(elements, images):
        for v, u in zip(vertices, row):
            if u == v:
                continue
            pair = tuple(sorted((fmt(v), fmt(u))))
            labels.setdefault(pair, str(element))
    edges = sorted((v, u, label) for (v, u), label in labels.items())
    return LevelGraph(n, "tile", [fmt(v) for v in vertices], edges)


def level_transitive(sys: RecursionSystem, n_max: int, nucleus=None,
                     settings: EngineSettings = DEFAULT_SETTINGS) -> LevelReport:
    """Orbit count of the Schreier graph at levels 0..n_max, with tile connectivity when a nucleus is given"""
    report = LevelReport()
    for n in range(n_max + 1):
        orbits = schreier(sys, n, settings).components()
        row = {'level': n, 'orbits': orbits, 'transitive': orbits == 1}
        if nucleus is not None:
            row['tile_connected'] = tile_graph(sys, nucleus, n, settings).components() == 1
        report.rows.append(row)
    return report


def self_replicating_check(sys: RecursionSystem, length_cap: Optional[int] = None,
                           settings: EngineSettings = DEFAULT_SETTINGS) -> SelfReplicationResult:
    """Semi-decision: look for stabilizer elements of letter 0 whose section at 0 is each generator"""
    length_cap = settings.replication_cap if length_cap is None else length_cap
    if schreier(sys, 1, settings).components() != 1:
        return SelfReplicationResult('no', reason="level-1 action is not transitive")
    backend = faithful_backend(sys, settings)
    generators = [backend.normalize(GroupWord.generator(i)) for i in range(len(sys.generators))]

    transversal = {0: backend.identity()}
    queue = [0]
    while queue:
        y = queue.pop(0)
        for g in generators:
            z = backend.perm(g).apply(y)
            if z not in transversal:
                transversal[z] = backend.multiply(g, transversal[y])
                queue.append(z)

    schreier_generators = {}
    for y, t in sorted(transversal.items()):
        for g in generators:
            z = backend.perm(g).apply(y)
            h = backend.multiply(backend.inverse(transversal[z]), backend.multiply(g, t))
            if not backend.is_identity(h):
                schreier_generators.setdefault(h.key, h)
    moves = list(schreier_generators.values())
    moves += [backend.inverse(h) for h in moves]

    targets = {g.key: name for g, name in zip(generators, sys.names) if not backend.is_identity(g)}
    witnesses = {}
    frontier = [backend.identity()]
    seen = {frontier[0].key}
    for _ in range(length_cap):
        next_frontier = []
        for element in frontier:
            for move in moves:
                product = backend.multiply(element, move)
                if product.key in seen:
                    continue
                seen.add(product.key)
                next_frontier.append(product)
                section = backend.section(product, 0)
                if section.key in targets and targets[section.key] not in witnesses:
                    witnesses[targets[section.key]] = str(product)
        frontier = next_frontier
        if len(witnesses) == len(targets):
            break
    logger.info(f"Self-replication search: {len(witnesses)}/{len(targets)} generators realized")
    if len(witnesses) == len(targets):
        return SelfReplicationResult('yes', witnesses)
    missing = sorted(set(targets.values()) - set(witnesses))
    return SelfReplicationResult('unknown', witnesses,
                                 f"no stabilizer product of length <= {length_cap} sections to {', '.join(missing)}")


def _quoted(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def export(graph: LevelGraph, fmt: str) -> bytes:
    if fmt == "json":
        data = {
            'level': graph.level,
            'flavor': graph.flavor,
            'convention': CONVENTION,
            'vertices': graph.vertices,
            'edges': [list(edge) for edge in graph.edges]
        }
        return (json.dumps(data, indent=2, sort_keys=True) + "\n").encode("utf-8")
    if fmt == "dot":
        dot = pydot.Dot(graph_name=f"{graph.flavor}_level_{graph.level}",
                        graph_type="digraph" if graph.flavor == "schreier" else "graph")
        dot.set_comment(CONVENTION)
        for v in graph.vertices:
            dot.add_node(pydot.Node(_quoted(v)))
        for v, u, label in graph.edges:
            dot.add_edge(pydot.Edge(_quoted(v), _quoted(u), label=_quoted(label)))
        return dot.to_string().encode("utf-8")
    if fmt == "graphml":
        return "\n".join(nx.generate_graphml(graph.to_networkx())).encode("utf-8")
    raise UnsupportedFormat(fmt)


def load_graph(data: Union[bytes, str], fmt: str) -> LevelGraph:
    """Re-import a json or graphml export"""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if fmt == "json":
        raw = json.loads(text)
        return LevelGraph(raw['level'], raw['flavor'], list(raw['vertices']),
                          [tuple(edge) for edge in raw['edges']])
    if fmt == "graphml":
        parsed = nx.parse_graphml(text)
        edges = []
        for v, u, attrs in parsed.edges(data=True):
            v, u = str(v), str(u)
            if not parsed.is_directed():
                v, u = sorted((v, u))
            edges.append((v, u, attrs.get('label', '')))
        return LevelGraph(int(parsed.graph.get('level', 0)), parsed.graph.get('flavor', 'schreier'),
                          [str(v) for v in parsed.nodes], sorted(edges))
    raise UnsupportedFormat(fmt)
