"""
Tree decompositions anchored on the bound variables.

A decomposition is a rooted tree of bags. The anchor nodes form a connected
part containing the root whose bags together hold exactly the bound
variables. Every other node t carries a budget δ(t): at answering time the
bag join is evaluated live when it costs at most |D|^δ(t), and looked up in
the bag's heavy-request index otherwise.

Nodes of kind "negation" are leaves holding one negated atom. All their
variables are bound by the time they are reached, so they are answered by a
single membership probe.
"""
import itertools
import json
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import (
    Tuple, FrozenSet, Optional, Dict, List, Sequence, Iterable, Iterator,
)

import networkx as nx
from django.core.exceptions import ValidationError
from django.utils.functional import cached_property
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.conf import app_setting
from adorned_tradeoffs.covers import (
    bag_cover, bag_width, best_cover_for_time, rho_star, INFINITE_SLACK,
)
from adorned_tradeoffs.query import (
    AdornedQuery, Atom, Adornment, Hypergraph, AccessRequest, hypergraph_of,
    positive_part,
)
from adorned_tradeoffs.relations import Database, Relation, Schema
from adorned_tradeoffs.structures import (
    StoredIndex, TradeoffStructure, ValidityIndex, SpaceLedger, build,
    relations_of,
)
from adorned_tradeoffs.utils import format_fraction, format_exponent, parse_fraction
from adorned_tradeoffs.wcoj import (
    CostMeter, Threshold, BoundJoinPlan, bind_atoms, iter_bound,
)

__all__ = [
    'NORMAL', 'NEGATION', 'DecompNode', 'ConnexDecomposition', 'DecompReport',
    'DecompStructure', 'validate_decomposition', 'enumerate_decompositions',
    'single_bag_decomposition', 'negation_decomposition', 'optimize_delta',
    'build_decomp_structure', 'answer_decomp', 'build_negation_structure',
    'apply_appendix_optimizations', 'optimization_report',
    'uniform_tau_profile', 'affine_form', 'render_affine', 'negation_report',
    'decomposition_from_json', 'load_decomposition', 'restore_decomp_structure',
]

logger = logging.getLogger(__name__)

NORMAL = 'normal'
NEGATION = 'negation'


def _decomposition_error(msg, **params):
    return ValidationError(msg, code='decomposition', params=params)


@dataclass(frozen=True)
class DecompNode:
    id: str
    bag: FrozenSet[str]
    delta: Fraction = Fraction(0)
    in_anchor: bool = False
    kind: str = NORMAL
    negated_atom: Optional[Atom] = None
    materialize_free: bool = False

    def to_json(self) -> dict:
        result = {
            'id': self.id,
            'bag': sorted(self.bag),
            'in_A': self.in_anchor,
            'delta': format_fraction(self.delta),
        }
        if self.kind == NEGATION:
            result['kind'] = NEGATION
            result['relation'] = self.negated_atom.relation_name
            result['vars'] = list(self.negated_atom.vars)
        if self.materialize_free:
            result['materialize_free'] = True
        return result


@dataclass(frozen=True)
class ConnexDecomposition:
    nodes: Tuple[DecompNode, ...]
    # (parent id, child id)
    edges: Tuple[Tuple[str, str], ...]
    materialize_anchor: bool = False

    def node(self, node_id: str) -> DecompNode:
        return self._by_id[node_id]

    @cached_property
    def _by_id(self) -> Dict[str, DecompNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(n.id for n in self.nodes)
        g.add_edges_from(self.edges)
        return g

    @cached_property
    def root(self) -> str:
        roots = [n.id for n in self.nodes if self.graph.in_degree(n.id) == 0]
        if len(roots) != 1:
            raise _decomposition_error(
                _('A decomposition needs exactly one root, found %(roots)s.'),
                roots=', '.join(roots) or 'none'
            )
        return roots[0]

    def children(self, node_id: str) -> List[str]:
        # edge order is tree order
        return [c for p, c in self.edges if p == node_id]

    def parent(self, node_id: str) -> Optional[str]:
        for p, c in self.edges:
            if c == node_id:
                return p
        return None

    def ancestors_union(self, node_id: str) -> FrozenSet[str]:
        result = set()
        p = self.parent(node_id)
        while p is not None:
            result |= self.node(p).bag
            p = self.parent(p)
        return frozenset(result)

    def bound_vars(self, node_id: str) -> FrozenSet[str]:
        node = self.node(node_id)
        if node.in_anchor:
            return node.bag
        return node.bag & self.ancestors_union(node_id)

    def free_vars(self, node_id: str) -> FrozenSet[str]:
        return self.node(node_id).bag - self.bound_vars(node_id)

    @property
    def anchor_ids(self) -> List[str]:
        return [n.id for n in self.nodes if n.in_anchor]

    @property
    def top_nodes(self) -> List[str]:
        """Non-anchor children of anchor nodes, in tree order."""
        return [
            c for p, c in self.edges
            if self.node(p).in_anchor and not self.node(c).in_anchor
        ]

    def budgeted_nodes(self) -> List[DecompNode]:
        return [
            n for n in self.nodes if not n.in_anchor and n.kind == NORMAL
        ]

    def postorder(self) -> List[str]:
        return list(nx.dfs_postorder_nodes(self.graph, self.root))

    def root_leaf_paths(self) -> List[List[str]]:
        paths = []

        def walk(node_id, path):
            path = path + [node_id]
            kids = self.children(node_id)
            if not kids:
                paths.append(path)
            for c in kids:
                walk(c, path)
        walk(self.root, [])
        return paths

    def with_deltas(self, deltas: Dict[str, Fraction]) -> 'ConnexDecomposition':
        return replace(self, nodes=tuple(
            replace(n, delta=Fraction(deltas[n.id])) if n.id in deltas else n
            for n in self.nodes
        ))

    def to_json(self) -> dict:
        result = {
            'nodes': [n.to_json() for n in self.nodes],
            'edges': [list(e) for e in self.edges],
        }
        if self.materialize_anchor:
            result['materialize_anchor'] = True
        return result

    def canonical_key(self):
        def key(node_id):
            return (
                tuple(sorted(self.node(node_id).bag)),
                tuple(sorted(key(c) for c in self.children(node_id)))
            )
        return key(self.root)


def decomposition_from_json(data: dict) -> ConnexDecomposition:
    try:
        nodes = []
        for raw in data['nodes']:
            kind = raw.get('kind', NORMAL)
            bag = frozenset(str(v) for v in raw['bag'])
            negated_atom = None
            if kind == NEGATION:
                variables = tuple(str(v) for v in raw.get('vars', sorted(bag)))
                negated_atom = Atom(str(raw['relation']), variables, True)
            elif kind != NORMAL:
                raise _decomposition_error(
                    _('Unknown node kind %(kind)s.'), kind=kind
                )
            nodes.append(DecompNode(
                id=str(raw['id']), bag=bag,
                delta=parse_fraction(raw.get('delta', '0')),
                in_anchor=bool(raw.get('in_A', False)), kind=kind,
                negated_atom=negated_atom,
                materialize_free=bool(raw.get('materialize_free', False)),
            ))
        edges = tuple((str(p), str(c)) for p, c in data.get('edges', ()))
    except (KeyError, TypeError, ValueError) as e:
        raise _decomposition_error(
            _('Malformed decomposition: %(err)s'), err=e
        )
    return ConnexDecomposition(
        tuple(nodes), edges,
        materialize_anchor=bool(data.get('materialize_anchor', False))
    )


def load_decomposition(path: str) -> ConnexDecomposition:
    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ValidationError(
            _('Decomposition file %(path)s does not exist.'),
            code='missing_file', params={'path': path}
        )
    except json.JSONDecodeError as e:
        raise _decomposition_error(
            _('Decomposition file %(path)s is not valid JSON: %(err)s'),
            path=path, err=e
        )
    return decomposition_from_json(data)


@dataclass(frozen=True)
class DecompReport:
    width: Fraction
    height: Fraction
    node_widths: Tuple[Tuple[str, Fraction], ...]

    def to_json(self) -> dict:
        return {
            'f': format_fraction(self.width),
            'h': format_fraction(self.height),
            'node_widths': {i: format_fraction(w) for i, w in self.node_widths},
        }


def _edges_in(h: Hypergraph, bag: FrozenSet[str]):
    return [(i, e) for i, e in h.edges if e <= bag]


def node_width(h: Hypergraph, d: ConnexDecomposition, node: DecompNode) -> Fraction:
    edges = _edges_in(h, node.bag)
    if node.materialize_free:
        return rho_star(Hypergraph(node.bag, tuple(edges), frozenset()),
                        d.free_vars(node.id))[0]
    return bag_width(node.bag, d.bound_vars(node.id), edges, node.delta)


def _height(d: ConnexDecomposition) -> Fraction:
    return max(
        sum((d.node(i).delta for i in path), Fraction(0))
        for path in d.root_leaf_paths()
    )


def validate_decomposition(h: Hypergraph, d: ConnexDecomposition) -> DecompReport:
    """
    Check the tree decomposition axioms, connexity on the bound variables
    and the δ constraints, then compute the δ-width f and δ-height h.
    """
    ids = [n.id for n in d.nodes]
    if not ids:
        raise _decomposition_error(_('The decomposition has no nodes.'))
    if len(set(ids)) != len(ids):
        raise _decomposition_error(_('Node ids must be unique.'))
    for p, c in d.edges:
        for node_id in (p, c):
            if node_id not in d._by_id:
                raise _decomposition_error(
                    _('Edge refers to unknown node %(node)s.'), node=node_id
                )
    if not nx.is_arborescence(d.graph):
        raise _decomposition_error(
            _('The nodes and edges do not form a rooted tree.')
        )
    root = d.root
    undirected = d.graph.to_undirected()

    anchor = d.anchor_ids
    if root not in anchor:
        raise _decomposition_error(
            _('The root %(node)s must belong to the anchor set.'), node=root
        )
    if not nx.is_connected(undirected.subgraph(anchor)):
        raise _decomposition_error(_('The anchor set is not connected.'))
    anchor_vars = frozenset().union(*(d.node(i).bag for i in anchor))
    if anchor_vars != h.bound_nodes:
        raise _decomposition_error(
            _('Anchor bags hold %(got)s but the bound variables are '
              '%(expected)s.'),
            got=', '.join(sorted(anchor_vars)) or '∅',
            expected=', '.join(sorted(h.bound_nodes)) or '∅'
        )
    for n in d.nodes:
        if n.delta < 0:
            raise _decomposition_error(
                _('Bag %(node)s has a negative budget.'), node=n.id
            )
        if n.in_anchor and n.delta != 0:
            raise _decomposition_error(
                _('Anchor bag %(node)s must have budget 0.'), node=n.id
            )
        extra = n.bag - h.nodes
        if extra:
            raise _decomposition_error(
                _('Bag %(node)s holds unknown variables %(vars)s.'),
                node=n.id, vars=', '.join(sorted(extra))
            )

    normal_bags = [n for n in d.nodes if n.kind == NORMAL]
    for atom_id, e in h.edges:
        if not any(e <= n.bag for n in normal_bags):
            raise _decomposition_error(
                _('Atom %(atom)d over %(vars)s is contained in no bag.'),
                atom=atom_id, vars=', '.join(sorted(e))
            )

    for v in sorted(h.nodes):
        holding = [n.id for n in d.nodes if v in n.bag]
        if not holding or not nx.is_connected(undirected.subgraph(holding)):
            raise _decomposition_error(
                _('The bags holding variable %(var)s are not connected.'),
                var=v
            )

    for n in d.nodes:
        if n.kind == NEGATION:
            if d.children(n.id) or n.in_anchor:
                raise _decomposition_error(
                    _('Negation bag %(node)s must be a non-anchor leaf.'),
                    node=n.id
                )
            if n.bag != n.negated_atom.var_set or d.free_vars(n.id):
                raise _decomposition_error(
                    _('Negation bag %(node)s must hold exactly the variables '
                      'of its atom, all bound above it.'), node=n.id
                )
        elif not n.in_anchor:
            inside = frozenset().union(*(e for _i, e in _edges_in(h, n.bag)))
            uncovered = n.bag - inside
            if uncovered:
                raise ValidationError(
                    _('Bag %(node)s cannot be covered: %(vars)s occur in no '
                      'atom inside the bag.'),
                    code='uncoverable',
                    params={'node': n.id, 'vars': ', '.join(sorted(uncovered))}
                )

    widths = tuple(
        (n.id, node_width(h, d, n)) for n in d.budgeted_nodes()
    )
    width = max((w for _i, w in widths), default=Fraction(0))
    return DecompReport(width, _height(d), widths)


def _tree_to_decomposition(tree, bound_nodes) -> ConnexDecomposition:
    nodes = [DecompNode('t1', frozenset(bound_nodes), in_anchor=True)]
    edges = []
    counter = itertools.count(2)

    def add(parent_id, subtree):
        bag, children = subtree
        node_id = 't%d' % next(counter)
        nodes.append(DecompNode(node_id, bag))
        edges.append((parent_id, node_id))
        for child in children:
            add(node_id, child)

    for subtree in tree:
        add('t1', subtree)
    return ConnexDecomposition(tuple(nodes), tuple(edges))


def single_bag_decomposition(h: Hypergraph, delta=Fraction(0)) -> ConnexDecomposition:
    """Anchor on the bound variables plus one child holding everything."""
    if not h.free_nodes:
        return _tree_to_decomposition([], h.bound_nodes)
    d = _tree_to_decomposition([(h.nodes, [])], h.bound_nodes)
    return d.with_deltas({'t2': Fraction(delta)})


def _gaifman(h: Hypergraph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(h.nodes)
    for _i, e in h.edges:
        g.add_edges_from(itertools.combinations(sorted(e), 2))
    return g


def _coverable(h: Hypergraph, bag: FrozenSet[str]) -> bool:
    inside = frozenset().union(*(e for _i, e in _edges_in(h, bag)))
    return bag <= inside


def _component_trees(h: Hypergraph, gaifman: nx.Graph, placed: FrozenSet[str],
                     component: FrozenSet[str], limit: int) -> List:
    """Subtrees (bag, children) placing ``component`` below ``placed``."""
    neighbours = frozenset(
        n for v in component for n in gaifman[v] if n in placed
    )
    members = sorted(component)
    results = []
    for size in range(len(members), 0, -1):
        for chosen in itertools.combinations(members, size):
            bag = neighbours | frozenset(chosen)
            if not _coverable(h, bag):
                continue
            rest = component - frozenset(chosen)
            sub_components = [
                frozenset(c) for c in sorted(
                    nx.connected_components(gaifman.subgraph(rest)),
                    key=lambda c: sorted(c)
                )
            ]
            options = [
                _component_trees(h, gaifman, placed | frozenset(chosen), c, limit)
                for c in sub_components
            ]
            for combo in itertools.product(*options):
                results.append((bag, list(combo)))
                if len(results) >= limit:
                    return results
    return results


def enumerate_decompositions(h: Hypergraph, max_vars: Optional[int] = None,
                             limit: Optional[int] = None) -> List[ConnexDecomposition]:
    """
    Connex decompositions anchored on a single bag holding the bound
    variables, deduplicated up to bag structure. The single-bag
    decomposition always comes first.
    """
    max_vars = max_vars or app_setting('MAX_ENUMERATION_VARS')
    limit = limit or app_setting('ENUMERATION_LIMIT')
    if len(h.nodes) > max_vars:
        raise ValidationError(
            _('The query has %(count)d variables, more than the %(max)d the '
              'enumerator handles; supply a decomposition file instead.'),
            code='too_many_variables',
            params={'count': len(h.nodes), 'max': max_vars}
        )
    gaifman = _gaifman(h)
    components = [
        frozenset(c) for c in sorted(
            nx.connected_components(gaifman.subgraph(h.free_nodes)),
            key=lambda c: sorted(c)
        )
    ]
    options = [
        _component_trees(h, gaifman, h.bound_nodes, c, limit)
        for c in components
    ]
    results = [single_bag_decomposition(h)]
    seen = {results[0].canonical_key()}
    for combo in itertools.product(*options):
        d = _tree_to_decomposition(list(combo), h.bound_nodes)
        key = d.canonical_key()
        if key in seen:
            continue
        try:
            validate_decomposition(h, d)
        except ValidationError:
            continue
        seen.add(key)
        results.append(d)
        if len(results) >= limit:
            break
    logger.debug(
        'Enumerated %(count)d decompositions', {'count': len(results)}
    )
    return results


def optimize_delta(h: Hypergraph, d: ConnexDecomposition, height_budget,
                   grid_q: Optional[int] = None,
                   width_cache: Optional[dict] = None) -> ConnexDecomposition:
    """
    Grid search over δ(t) ∈ {0, 1/q, ...} for the budgeted nodes, subject
    to δ-height <= height_budget, minimizing the δ-width. Ties go to the
    lexicographically smallest δ vector in node order. ``width_cache``
    keeps bag widths across calls on the same decomposition.
    """
    q = grid_q or app_setting('GRID_Q')
    budget = Fraction(height_budget)
    nodes = [n for n in d.budgeted_nodes() if not n.materialize_free]
    if not nodes:
        return d
    grid = [Fraction(i, q) for i in range(int(budget * q) + 1)]
    widths = width_cache if width_cache is not None else {}
    for n in nodes:
        for delta in grid:
            if (n.id, delta) not in widths:
                widths[(n.id, delta)] = bag_width(
                    n.bag, d.bound_vars(n.id), _edges_in(h, n.bag), delta
                )
    fixed = {n.id: n.delta for n in d.nodes if n not in nodes}
    paths = d.root_leaf_paths()
    best = None
    for vector in itertools.product(grid, repeat=len(nodes)):
        deltas = dict(fixed)
        deltas.update((n.id, v) for n, v in zip(nodes, vector))
        if any(sum(deltas[i] for i in path) > budget for path in paths):
            continue
        width = max(widths[(n.id, v)] for n, v in zip(nodes, vector))
        # product() yields vectors in lexicographic order
        if best is None or width < best[0]:
            best = (width, vector)
    return d.with_deltas({n.id: v for n, v in zip(nodes, best[1])})


def uniform_tau_profile(h: Hypergraph, d: ConnexDecomposition,
                        taus: Iterable[Fraction]) -> List[Tuple[Fraction, Fraction, Fraction]]:
    """(τ, f, h) with δ(t) = τ on every budgeted node."""
    profile = []
    for tau in taus:
        tau = Fraction(tau)
        scaled = d.with_deltas({n.id: tau for n in d.budgeted_nodes()})
        report = validate_decomposition(h, scaled)
        profile.append((tau, report.width, report.height))
    return profile


def render_affine(const: Fraction, slope: Fraction, symbol: str = 'τ') -> str:
    if slope == 0:
        return format_fraction(const)
    coeff = '' if abs(slope) == 1 else format_fraction(abs(slope))
    term = coeff + symbol
    if const == 0:
        return term if slope > 0 else '−' + term
    return '%s%s%s' % (format_fraction(const), '−' if slope < 0 else '+', term)


def affine_form(points: Sequence[Tuple[Fraction, Fraction]],
                symbol: str = 'τ') -> Optional[str]:
    """Render a + bτ if every point lies on one line, else None."""
    if len(points) < 2:
        return None
    (t0, v0), (t1, v1) = points[0], points[-1]
    if t0 == t1:
        return None
    slope = (v1 - v0) / (t1 - t0)
    const = v0 - slope * t0
    if any(const + slope * t != v for t, v in points):
        return None
    return render_affine(const, slope, symbol)


def apply_appendix_optimizations(h: Hypergraph, d: ConnexDecomposition) -> ConnexDecomposition:
    """
    Flag full anchor materialization when the cover number of the bound
    variables over the bound projections is at most the current width, and
    switch a bag to free-variable materialization (width and budget both
    ρ* of its free variables) when that lowers its width.
    """
    report = validate_decomposition(h, d)
    widths = dict(report.node_widths)
    nodes = []
    for n in d.nodes:
        if n in d.budgeted_nodes() and not n.materialize_free:
            local = Hypergraph(n.bag, tuple(_edges_in(h, n.bag)), frozenset())
            rho_free = rho_star(local, d.free_vars(n.id))[0]
            if rho_free < widths[n.id]:
                logger.debug(
                    'Bag %(node)s: free-variable materialization lowers width '
                    '%(before)s to %(after)s',
                    {'node': n.id, 'before': widths[n.id], 'after': rho_free}
                )
                n = replace(n, materialize_free=True, delta=rho_free)
        nodes.append(n)
    optimized = replace(d, nodes=tuple(nodes))
    anchor_rho = _anchor_rho(h)
    new_width = validate_decomposition(h, optimized).width
    if anchor_rho <= new_width:
        optimized = replace(optimized, materialize_anchor=True)
    return optimized


def _anchor_rho(h: Hypergraph) -> Fraction:
    """ρ* of the bound variables over the bound projections of the edges."""
    projected = Hypergraph(
        h.bound_nodes,
        tuple((i, e & h.bound_nodes) for i, e in h.edges if e & h.bound_nodes),
        h.bound_nodes,
    )
    return rho_star(projected, h.bound_nodes)[0]


def optimization_report(h: Hypergraph, d: ConnexDecomposition) -> dict:
    report = validate_decomposition(h, d)
    anchor_rho = _anchor_rho(h)
    bags = {}
    for n in d.budgeted_nodes():
        local = Hypergraph(n.bag, tuple(_edges_in(h, n.bag)), frozenset())
        bags[n.id] = {
            'width': format_fraction(dict(report.node_widths)[n.id]),
            'rho_free': format_fraction(
                rho_star(local, d.free_vars(n.id))[0]
            ),
        }
    return {
        'anchor_rho': format_fraction(anchor_rho),
        'anchor_materialization_useful': anchor_rho <= report.width,
        'bags': bags,
    }


def negation_decomposition(q: AdornedQuery, delta=Fraction(0)) -> ConnexDecomposition:
    """
    Root anchor on the bound variables, one middle bag holding every
    positive variable, and one negation leaf per negated atom below it.
    """
    bound = frozenset(q.bound_vars)
    nodes = [
        DecompNode('t1', bound, in_anchor=True),
        DecompNode('t2', q.variables, delta=Fraction(delta)),
    ]
    edges = [('t1', 't2')]
    for k, atom in enumerate(q.negated_atoms, start=3):
        node_id = 't%d' % k
        nodes.append(DecompNode(
            node_id, atom.var_set, kind=NEGATION, negated_atom=atom
        ))
        edges.append(('t2', node_id))
    return ConnexDecomposition(tuple(nodes), tuple(edges))


def negation_report(q: AdornedQuery, symbol: Optional[str] = None) -> str:
    """
    Tradeoff of the middle bag of the negation decomposition, with the time
    budget written as τ, e.g. "S = |D|^3/τ, T = τ".
    """
    symbol = symbol or app_setting('SIZE_SYMBOL')
    h = hypergraph_of(positive_part(q))
    analysis = best_cover_for_time(h, None, Fraction(1))
    size = format_exponent('|%s|' % symbol, analysis.space_base)
    if analysis.slack == INFINITE_SLACK:
        return 'S = |%s|, T = 1' % symbol
    return 'S = %s/%s, T = τ' % (size, format_exponent('τ', analysis.slack))


def bag_query(q: AdornedQuery, name: str, bag: FrozenSet[str],
              bound: FrozenSet[str]) -> AdornedQuery:
    atoms = tuple(a for a in q.positive_atoms if a.var_set <= bag)
    head = tuple((v, Adornment.BOUND) for v in sorted(bound))
    return AdornedQuery(name, head, atoms)


class FreeJoinIndex:
    """
    Join over the free variables of a bag, with per-tuple subtree answers
    when the children only depend on the free variables.
    """

    def __init__(self, tuples: List[Tuple[Dict[str, int], Optional[bool]]],
                 checks: List[Tuple[Atom, Relation]]):
        self.tuples = tuples
        self.checks = checks

    def __len__(self):
        return len(self.tuples)


class DecompStructure:

    def __init__(self, query: AdornedQuery, db: Database,
                 decomposition: ConnexDecomposition, report: DecompReport,
                 validity: ValidityIndex,
                 root_negations: Sequence[Atom] = ()):
        self.query = query
        self.db = db
        self.decomposition = decomposition
        self.report = report
        self.validity = validity
        self.root_negations = [(a, db[a.relation_name]) for a in root_negations]
        self.node_structures: Dict[str, TradeoffStructure] = {}
        # bag query, join plan and bound variables per budgeted node
        self.bag_plans: Dict[str, Tuple[AdornedQuery, BoundJoinPlan, Tuple[str, ...]]] = {}
        self.free_indexes: Dict[str, FreeJoinIndex] = {}
        self.anchor_structure: Optional[TradeoffStructure] = None
        self.ledger: Optional[SpaceLedger] = None

    def answer(self, a: AccessRequest, meter: Optional[CostMeter] = None) -> bool:
        meter = meter if meter is not None else CostMeter()
        if self.anchor_structure is not None:
            stored = self.anchor_structure.lookup(a, meter)
            if stored is not None:
                return stored
        if not self.validity.is_valid(a, meter):
            return False
        return self.answer_tree(a.as_dict(), meter)

    def answer_tree(self, bindings: Dict[str, int], meter: CostMeter) -> bool:
        for atom, rel in self.root_negations:
            meter.probe()
            if tuple(bindings[v] for v in atom.vars) in rel:
                return False
        return all(
            self.solve(t, bindings, meter)
            for t in self.decomposition.top_nodes
        )

    def solve(self, node_id: str, bindings: Dict[str, int], meter: CostMeter) -> bool:
        node = self.decomposition.node(node_id)
        if node.kind == NEGATION:
            meter.probe()
            rel = self.db[node.negated_atom.relation_name]
            return tuple(bindings[v] for v in node.negated_atom.vars) not in rel
        if node_id in self.free_indexes:
            return self._solve_free(node_id, bindings, meter)
        st = self.node_structures[node_id]
        a_t = AccessRequest.from_mapping((v, bindings[v]) for v in st.bound_vars)
        stored = st.lookup(a_t, meter)
        if stored is not None:
            return stored
        return self.extend(node_id, bindings, meter)

    def extend(self, node_id: str, bindings: Dict[str, int], meter: CostMeter) -> bool:
        """Evaluate the bag join live, descending into the children per tuple."""
        bq, plan, bound = self.bag_plans[node_id]
        a_t = AccessRequest.from_mapping((v, bindings[v]) for v in bound)
        children = self.decomposition.children(node_id)
        for assignment in iter_bound(bq, self.db, a_t, meter, plan):
            extended = dict(bindings)
            extended.update(assignment)
            if all(self.solve(c, extended, meter) for c in children):
                return True
        return False

    def _solve_free(self, node_id: str, bindings: Dict[str, int],
                    meter: CostMeter) -> bool:
        index = self.free_indexes[node_id]
        children = self.decomposition.children(node_id)
        for values, bit in index.tuples:
            meter.touch()
            extended = dict(bindings)
            extended.update(values)
            ok = True
            for atom, rel in index.checks:
                meter.probe()
                if tuple(extended[v] for v in atom.vars) not in rel:
                    ok = False
                    break
            if not ok:
                continue
            if bit is None:
                if all(self.solve(c, extended, meter) for c in children):
                    return True
            elif bit:
                return True
        return False


def _bag_atoms(q: AdornedQuery, node: DecompNode) -> List[Atom]:
    return [a for a in q.positive_atoms if a.var_set <= node.bag]


def _free_checks(atoms: List[Atom], db: Database,
                 bound: FrozenSet[str]) -> List[Tuple[Atom, Relation]]:
    return [
        (atom, db[atom.relation_name]) for atom in atoms
        if atom.var_set & bound
    ]


def _build_free_index(s: DecompStructure, q: AdornedQuery, db: Database,
                      node: DecompNode) -> FreeJoinIndex:
    d = s.decomposition
    bound = d.bound_vars(node.id)
    free = d.free_vars(node.id)
    atoms = _bag_atoms(q, node)
    projected = {}
    projected_atoms = []
    for k, atom in enumerate(atoms):
        ba_vars = tuple(v for v in atom.vars if v in free)
        if not ba_vars:
            continue
        rel = db[atom.relation_name]
        schema_vars = tuple(rel.variables[atom.vars.index(v)] for v in ba_vars)
        name = '%s_%s_free_%d' % (q.name, node.id, k)
        projected[name] = Relation(
            name, Schema(ba_vars), rel.index(schema_vars).keys()
        )
        projected_atoms.append(Atom(name, ba_vars))
    free_q = AdornedQuery(q.name + '_free', (), tuple(projected_atoms))
    children = d.children(node.id)
    independent = all(d.bound_vars(c) <= free for c in children)
    tuples = []
    for values in iter_bound(free_q, db.with_relations(projected),
                             AccessRequest(())):
        bit = None
        if independent:
            bit = all(s.solve(c, values, CostMeter()) for c in children)
        tuples.append((values, bit))
    return FreeJoinIndex(tuples, _free_checks(atoms, db, bound))


def _start_structure(q: AdornedQuery, db: Database, d: ConnexDecomposition,
                     root_negations: Sequence[Atom]) -> DecompStructure:
    q.require_boolean()
    positive = positive_part(q)
    h = hypergraph_of(positive)
    report = validate_decomposition(h, d)
    negated_in_tree = {
        n.negated_atom for n in d.nodes if n.kind == NEGATION
    }
    for atom in q.negated_atoms:
        if atom not in negated_in_tree and atom not in root_negations:
            raise ValidationError(
                _('Negated atom %(atom)s is checked nowhere in the '
                  'decomposition.'),
                code='negation_unsupported', params={'atom': atom.render()}
            )
    validity = ValidityIndex(bind_atoms(positive, db), h.bound_nodes)
    return DecompStructure(q, db, d, report, validity, root_negations)


def _plan_bag(s: DecompStructure, positive: AdornedQuery,
              node: DecompNode) -> AdornedQuery:
    bound = s.decomposition.bound_vars(node.id)
    bq = bag_query(positive, '%s_%s' % (s.query.name, node.id), node.bag, bound)
    s.bag_plans[node.id] = (
        bq, BoundJoinPlan.for_query(bq, s.db, bound=bound), tuple(sorted(bound))
    )
    return bq


def _tree_nodes(d: ConnexDecomposition) -> Iterator[DecompNode]:
    """Nodes below the anchor that hold positive atoms, children first."""
    for node_id in d.postorder():
        node = d.node(node_id)
        if not (node.in_anchor or node.kind == NEGATION):
            yield node


def build_decomp_structure(q: AdornedQuery, db: Database, d: ConnexDecomposition,
                           root_negations: Sequence[Atom] = ()) -> DecompStructure:
    """
    One heavy-request index per budgeted bag (threshold |D|^δ(t), bound
    variables shared with the ancestors), built bottom-up so that heavy
    entries store the answer of the whole subtree.
    """
    s = _start_structure(q, db, d, root_negations)
    positive = positive_part(q)
    h = hypergraph_of(positive)
    total = db.total_size
    chain_holds = True
    stored = 0
    for node in _tree_nodes(d):
        node_id = node.id
        if node.materialize_free:
            s.free_indexes[node_id] = _build_free_index(s, positive, db, node)
            stored += len(s.free_indexes[node_id])
            continue
        bound = d.bound_vars(node_id)
        bq = _plan_bag(s, positive, node)
        cover = bag_cover(node.bag, bound, hypergraph_of(bq).edges, node.delta)

        def heavy_answer(a_t, node_id=node_id):
            return s.extend(node_id, a_t.as_dict(), CostMeter())

        st = build(
            bq, db, cover, Threshold(total, node.delta),
            heavy_answer=heavy_answer, bound_vars=tuple(sorted(bound)),
        )
        s.node_structures[node_id] = st
        stored += st.ledger.stored_entries
        chain_holds = chain_holds and st.ledger.heavy_chain_holds
        logger.debug(
            'Bag %(node)s: δ=%(delta)s, %(stored)d heavy entries',
            {'node': node_id, 'delta': node.delta,
             'stored': st.ledger.stored_entries}
        )

    if d.materialize_anchor:
        def anchor_answer(a):
            return s.answer_tree(a.as_dict(), CostMeter())
        s.anchor_structure = build(
            positive, db, best_cover_for_time(h), Threshold.of(0),
            heavy_answer=anchor_answer,
        )
        stored += s.anchor_structure.ledger.stored_entries

    index_entries = sum(r.index_entries for r in relations_of(q, db))
    bound_constant = app_setting('BOUND_CONSTANT')
    if index_entries > bound_constant * max(total, 1) * max(len(q.body), 1):
        logger.warning(
            'Index entries %(index)d exceed linear size for |D|=%(size)d',
            {'index': index_entries, 'size': total}
        )
    s.ledger = SpaceLedger(
        stored_entries=stored, index_entries=index_entries,
        heavy_chain_holds=chain_holds,
    )
    logger.info(
        'Built decomposition structure for %(query)s: f=%(f)s, h=%(h)s, '
        '%(stored)d stored entries',
        {'query': q.name, 'f': s.report.width, 'h': s.report.height,
         'stored': stored}
    )
    return s


def answer_decomp(s: DecompStructure, a: AccessRequest,
                  meter: Optional[CostMeter] = None) -> bool:
    return s.answer(a, meter)


def restore_decomp_structure(q: AdornedQuery, db: Database,
                             d: ConnexDecomposition,
                             bag_indexes: Dict[str, StoredIndex],
                             free_tuples: Dict[str, List[Tuple[Dict[str, int], Optional[bool]]]],
                             anchor: Optional[StoredIndex],
                             ledger: SpaceLedger,
                             root_negations: Sequence[Atom] = ()) -> DecompStructure:
    """
    Reassemble a decomposition structure from its stored bag entries. Only
    the join plans and the indexes over db are rebuilt; no residual cost or
    subtree answer is recomputed.
    """
    s = _start_structure(q, db, d, root_negations)
    positive = positive_part(q)
    for node in _tree_nodes(d):
        if node.materialize_free:
            checks = _free_checks(
                _bag_atoms(positive, node), db, d.bound_vars(node.id)
            )
            s.free_indexes[node.id] = FreeJoinIndex(
                list(free_tuples[node.id]), checks
            )
            continue
        bq = _plan_bag(s, positive, node)
        s.node_structures[node.id] = bag_indexes[node.id].restore_over(bq, db)
    if anchor is not None:
        s.anchor_structure = anchor.restore_over(positive, db)
    s.ledger = ledger
    logger.debug(
        'Restored decomposition structure for %(query)s with %(bags)d bag '
        'indexes', {'query': q.name, 'bags': len(s.node_structures)}
    )
    return s


def build_negation_structure(q: AdornedQuery, db: Database,
                             delta=Fraction(0)) -> DecompStructure:
    """
    Structure for a safe CQ with negation. When every negated atom only uses
    bound variables the negations are checked at the root and the positive
    part gets a single-bag decomposition; otherwise the root / middle /
    negation-leaf decomposition is used.
    """
    q.require_boolean()
    bound = frozenset(q.bound_vars)
    h = hypergraph_of(positive_part(q))
    if all(atom.var_set <= bound for atom in q.negated_atoms):
        d = single_bag_decomposition(h, delta)
        return build_decomp_structure(
            q, db, d, root_negations=q.negated_atoms
        )
    return build_decomp_structure(q, db, negation_decomposition(q, delta))
