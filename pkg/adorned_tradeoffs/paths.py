"""
Boolean path queries P_k(x1, x_{k+1}) = R1(x1,x2), ..., Rk(xk,x_{k+1}) with
both endpoints bound.

Three answering strategies live here: the heavy/light split on the middle
variable of a 4-path, the recursive split on the endpoints for longer paths,
and level-by-level breadth-first search, which needs no extra space.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import (
    Tuple, Dict, FrozenSet, Optional, List, Union, Iterator, NamedTuple,
)

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.conf import app_setting
from adorned_tradeoffs.covers import CoverAnalysis, FractionalCover, slack_of
from adorned_tradeoffs.query import (
    AdornedQuery, AccessRequest, Adornment, Atom, hypergraph_of,
    path_relations,
)
from adorned_tradeoffs.relations import Database, Relation, Schema
from adorned_tradeoffs.structures import (
    SpaceLedger, StoredIndex, TradeoffStructure, build,
)
from adorned_tradeoffs.utils import format_fraction
from adorned_tradeoffs.wcoj import CostMeter, Threshold

__all__ = [
    'PathInstance', 'HeavyLightSplit', 'PathStructure4', 'PathStructureK',
    'BreadthFirstPath', 'PathStrategyReport', 'build_path4', 'answer_path4',
    'build_pathk', 'answer_pathk', 'bfs_fallback', 'select_path_strategy',
    'restore_path4', 'restore_pathk',
    'delta_for_time', 'min_regime_delta', 'strategy_envelope',
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathInstance:
    db: Database
    relations: Tuple[str, ...]
    # request variables bound to the source and the target
    endpoints: Tuple[str, str] = ('x1', 'x2')

    def __post_init__(self):
        if len(self.relations) < 2:
            raise ValidationError(
                _('A path needs at least two atoms, got %(k)d.'),
                code='invalid_config', params={'k': len(self.relations)}
            )
        for name in self.relations:
            arity = self.db[name].schema.arity
            if arity != 2:
                raise ValidationError(
                    _('Path relation %(rel)s must be binary, it has arity '
                      '%(arity)d.'),
                    code='arity', params={'rel': name, 'arity': arity}
                )

    @classmethod
    def from_query(cls, q: AdornedQuery, db: Database) -> 'PathInstance':
        relations = path_relations(q)
        if relations is None:
            raise ValidationError(
                _('Query %(name)s is not a Boolean path query with bound '
                  'endpoints.'),
                code='strategy_mismatch', params={'name': q.name}
            )
        return cls(db, tuple(relations), tuple(q.bound_vars))

    @classmethod
    def of_length(cls, db: Database, relation: str, k: int) -> 'PathInstance':
        return cls(db, (relation,) * k, ('x1', 'x%d' % (k + 1)))

    @property
    def k(self) -> int:
        return len(self.relations)

    @property
    def total_size(self) -> int:
        return self.db.total_size

    def sub(self, relations: Tuple[str, ...]) -> 'PathInstance':
        return PathInstance(self.db, relations, ('x1', 'x%d' % (len(relations) + 1)))

    def _columns(self, i: int) -> Tuple[Relation, str, str]:
        rel = self.db[self.relations[i]]
        src, dst = rel.variables
        return rel, src, dst

    def successors(self, i: int, value: int) -> Tuple[int, ...]:
        rel, src, dst = self._columns(i)
        return rel.extensions((src,), dst).get((value,), ())

    def predecessors(self, i: int, value: int) -> Tuple[int, ...]:
        rel, src, dst = self._columns(i)
        return rel.extensions((dst,), src).get((value,), ())

    def out_degree(self, i: int, value: int) -> int:
        rel, src, _dst = self._columns(i)
        return rel.index((src,)).count((value,))

    def in_degree(self, i: int, value: int) -> int:
        rel, _src, dst = self._columns(i)
        return rel.index((dst,)).count((value,))

    def sources(self, i: int) -> FrozenSet[int]:
        rel, src, _dst = self._columns(i)
        return rel.column(src)

    def targets(self, i: int) -> FrozenSet[int]:
        rel, _src, dst = self._columns(i)
        return rel.column(dst)

    def endpoint_values(self, a: AccessRequest) -> Tuple[int, int]:
        source_var, target_var = self.endpoints
        return a[source_var], a[target_var]

    def index_entries(self) -> int:
        return sum(
            self.db[name].index_entries for name in sorted(set(self.relations))
        )


@dataclass(frozen=True)
class HeavyLightSplit:
    threshold: int
    heavy: FrozenSet[int]
    light: FrozenSet[int]


def min_regime_delta(total_size: int) -> int:
    return math.isqrt(max(total_size - 1, 0)) + 1 if total_size else 0


def _check_regime(instance: PathInstance, delta: int) -> bool:
    if delta < 1:
        raise ValidationError(
            _('The degree threshold must be positive, got %(delta)s.'),
            code='invalid_config', params={'delta': delta}
        )
    needed = min_regime_delta(instance.total_size)
    if delta < needed:
        logger.warning(
            'Degree threshold %(delta)d is below ⌈√|D|⌉ = %(needed)d; the '
            'O(|D|·Δ) space bound is not asserted for this build',
            {'delta': delta, 'needed': needed}
        )
        return False
    return True


class PathStructure4:

    def __init__(self, instance: PathInstance, delta: int,
                 split: HeavyLightSplit, v1: Dict[int, Tuple[int, ...]],
                 v2: Dict[int, Tuple[int, ...]], v3: Relation,
                 inner: TradeoffStructure, in_regime: bool):
        self.instance = instance
        self.delta = delta
        self.split = split
        self.v1 = v1
        self.v2 = v2
        self.v1_sets = {k: frozenset(v) for k, v in v1.items()}
        self.v2_sets = {k: frozenset(v) for k, v in v2.items()}
        self.v3 = v3
        self.inner = inner
        self.in_regime = in_regime

    @property
    def view_sizes(self) -> Dict[str, int]:
        return {
            'V1': sum(len(v) for v in self.v1.values()),
            'V2': sum(len(v) for v in self.v2.values()),
            'V3': len(self.v3),
        }

    @property
    def own_entries(self) -> int:
        return sum(self.view_sizes.values()) + self.inner.ledger.stored_entries

    @property
    def own_index_entries(self) -> int:
        # set views over V1 and V2 plus the indexes of the light view
        sizes = self.view_sizes
        return sizes['V1'] + sizes['V2'] + self.v3.index_entries

    @property
    def ledger(self) -> SpaceLedger:
        return _ledger_of(self)

    def substructures(self) -> List['PathStructure']:
        return []

    def reach(self, source: int, target: int, meter: CostMeter) -> bool:
        meter.probe(2)
        first = self.v1.get(source, ())
        last = self.v2.get(target, ())
        if first and last:
            if len(first) <= len(last):
                shorter, longer = first, self.v2_sets[target]
            else:
                shorter, longer = last, self.v1_sets[source]
            for x3 in shorter:
                meter.touch()
                if x3 in longer:
                    return True
        return self.inner.answer(
            AccessRequest((('x1', source), ('x5', target))), meter
        )

    def answer(self, a: AccessRequest, meter: Optional[CostMeter] = None) -> bool:
        meter = meter if meter is not None else CostMeter()
        return self.reach(*self.instance.endpoint_values(a), meter)

    def levels(self) -> List[dict]:
        return [_level_row(self)]


def _heavy_middle(instance: PathInstance, delta: int) -> HeavyLightSplit:
    # x3 sits between atoms 1 and 2 (zero-based)
    domain = instance.targets(1) | instance.sources(2)
    heavy = frozenset(
        a for a in domain
        if instance.in_degree(1, a) > delta and instance.out_degree(2, a) > delta
    )
    return HeavyLightSplit(delta, heavy, domain - heavy)


def _light_view(instance: PathInstance, rows) -> Relation:
    s_name, t_name = instance.relations[1:3]
    return Relation('%s_%s_light' % (s_name, t_name), Schema(('src', 'dst')), rows)


def _light_query(instance: PathInstance, v3: Relation) -> Tuple[AdornedQuery, Database]:
    """The 3-path R ⋈ V3 ⋈ U over the light middle view V3."""
    r_name, u_name = instance.relations[0], instance.relations[3]
    inner_q = AdornedQuery(
        'P3_light',
        (('x1', Adornment.BOUND), ('x5', Adornment.BOUND)),
        (Atom(r_name, ('x1', 'x2')), Atom(v3.name, ('x2', 'x4')),
         Atom(u_name, ('x4', 'x5'))),
    )
    db = instance.db
    inner_db = db.with_relations({
        r_name: db[r_name], v3.name: v3, u_name: db[u_name],
    })
    return inner_q, inner_db


def build_path4(instance: PathInstance, delta: int) -> PathStructure4:
    """
    Split x3 on its degree in both middle relations, materialize the heavy
    endpoint views V1(x1, x3) and V2(x3, x5), and index the rewritten
    3-path R ⋈ V3 ⋈ U (V3 being the light middle join) with threshold
    |D|/Δ.
    """
    if instance.k != 4:
        raise ValidationError(
            _('The 4-path structure needs exactly four atoms, got %(k)d.'),
            code='invalid_config', params={'k': instance.k}
        )
    in_regime = _check_regime(instance, delta)
    split = _heavy_middle(instance, delta)

    v1: Dict[int, set] = {}
    for x3 in split.heavy:
        for x2 in instance.predecessors(1, x3):
            for x1 in instance.predecessors(0, x2):
                v1.setdefault(x1, set()).add(x3)
    v2: Dict[int, set] = {}
    for x3 in split.heavy:
        for x4 in instance.successors(2, x3):
            for x5 in instance.successors(3, x4):
                v2.setdefault(x5, set()).add(x3)

    v3_rows = {
        (x2, x4)
        for x3 in split.light
        for x2 in instance.predecessors(1, x3)
        for x4 in instance.successors(2, x3)
    }
    v3 = _light_view(instance, v3_rows)
    inner_q, inner_db = _light_query(instance, v3)
    h = hypergraph_of(inner_q)
    cover = FractionalCover(
        ((0, Fraction(1)), (1, Fraction(0)), (2, Fraction(1))), h.nodes
    )
    analysis = CoverAnalysis(cover, cover.value, slack_of(h, cover), cover.value)
    inner = build(
        inner_q, inner_db, analysis,
        Threshold(Fraction(instance.total_size, delta)),
    )
    structure = PathStructure4(
        instance, delta, split,
        {k: tuple(sorted(v)) for k, v in v1.items()},
        {k: tuple(sorted(v)) for k, v in v2.items()},
        v3, inner, in_regime,
    )
    logger.info(
        'Built 4-path structure over %(rels)s at Δ=%(delta)d: %(heavy)d heavy '
        'middle values, views %(views)s',
        {'rels': ','.join(instance.relations), 'delta': delta,
         'heavy': len(split.heavy), 'views': structure.view_sizes}
    )
    return structure


def answer_path4(s: PathStructure4, a: AccessRequest,
                 meter: Optional[CostMeter] = None) -> bool:
    return s.answer(a, meter)


def restore_path4(instance: PathInstance, delta: int, split: HeavyLightSplit,
                  v1: Dict[int, Tuple[int, ...]], v2: Dict[int, Tuple[int, ...]],
                  v3_rows, inner: StoredIndex) -> PathStructure4:
    """Reassemble a 4-path structure from its split, its views and the light index."""
    v3 = _light_view(instance, v3_rows)
    inner_q, inner_db = _light_query(instance, v3)
    return PathStructure4(
        instance, delta, split, v1, v2, v3,
        inner.restore_over(inner_q, inner_db),
        delta >= min_regime_delta(instance.total_size),
    )


class PathStructureK:

    def __init__(self, instance: PathInstance, delta: int,
                 heavy_sources: FrozenSet[int], heavy_targets: FrozenSet[int],
                 view: FrozenSet[Tuple[int, int]],
                 first: 'PathStructure', last: 'PathStructure',
                 in_regime: bool):
        self.instance = instance
        self.delta = delta
        self.heavy_sources = heavy_sources
        self.heavy_targets = heavy_targets
        self.view = view
        # drop the first atom / drop the last atom
        self.first = first
        self.last = last
        self.in_regime = in_regime

    @property
    def view_sizes(self) -> Dict[str, int]:
        return {'V': len(self.view)}

    @property
    def own_entries(self) -> int:
        return len(self.view)

    @property
    def own_index_entries(self) -> int:
        return 0

    @property
    def ledger(self) -> SpaceLedger:
        return _ledger_of(self)

    def substructures(self) -> List['PathStructure']:
        if self.first is self.last:
            return [self.first]
        return [self.first, self.last]

    def reach(self, source: int, target: int, meter: CostMeter) -> bool:
        meter.probe(2)
        source_heavy = source in self.heavy_sources
        target_heavy = target in self.heavy_targets
        if source_heavy and target_heavy:
            meter.probe()
            return (source, target) in self.view
        k = self.instance.k
        if not source_heavy and (
                target_heavy or
                self.instance.out_degree(0, source) <= self.instance.in_degree(k - 1, target)):
            for x2 in self.instance.successors(0, source):
                meter.touch()
                if self.first.reach(x2, target, meter):
                    return True
            return False
        for xk in self.instance.predecessors(k - 1, target):
            meter.touch()
            if self.last.reach(source, xk, meter):
                return True
        return False

    def answer(self, a: AccessRequest, meter: Optional[CostMeter] = None) -> bool:
        meter = meter if meter is not None else CostMeter()
        return self.reach(*self.instance.endpoint_values(a), meter)

    def levels(self) -> List[dict]:
        return [_level_row(s) for s in _unique_structures(self)]


PathStructure = Union[PathStructure4, PathStructureK]


def _unique_structures(root: PathStructure) -> List[PathStructure]:
    seen = {}
    stack = [root]
    while stack:
        s = stack.pop()
        if id(s) in seen:
            continue
        seen[id(s)] = s
        stack.extend(reversed(s.substructures()))
    return list(seen.values())


def _ledger_of(root: PathStructure) -> SpaceLedger:
    structures = _unique_structures(root)
    return SpaceLedger(
        stored_entries=sum(s.own_entries for s in structures),
        index_entries=(
            root.instance.index_entries()
            + sum(s.own_index_entries for s in structures)
        ),
        heavy_chain_holds=all(
            s.inner.ledger.heavy_chain_holds for s in structures
            if isinstance(s, PathStructure4)
        ),
    )


def _level_row(s: PathStructure) -> dict:
    row = {
        'k': s.instance.k,
        'relations': ','.join(s.instance.relations),
        'own_entries': s.own_entries,
    }
    row.update(s.view_sizes)
    return row


def _reachable_pairs(instance: PathInstance, sources, targets) -> FrozenSet[Tuple[int, int]]:
    pairs = set()
    for source in sorted(sources):
        frontier = {source}
        for i in range(instance.k):
            frontier = {y for x in frontier for y in instance.successors(i, x)}
            if not frontier:
                break
        pairs.update((source, t) for t in frontier & targets)
    return frozenset(pairs)


def build_pathk(instance: PathInstance, delta: int,
                _memo: Optional[Dict[Tuple[str, ...], PathStructure]] = None) -> PathStructure:
    """
    Recursive structure for k >= 4. Endpoints are heavy when their degree in
    the adjacent relation exceeds √(|D|/Δ); heavy-heavy pairs are
    materialized and everything else recurses into the (k-1)-paths obtained
    by dropping the first or the last atom. Substructures over the same
    relation sequence are built once.
    """
    if instance.k < 4:
        raise ValidationError(
            _('The recursive path structure needs k >= 4, got %(k)d.'),
            code='invalid_config', params={'k': instance.k}
        )
    memo = _memo if _memo is not None else {}
    try:
        return memo[instance.relations]
    except KeyError:
        pass
    if instance.k == 4:
        structure = build_path4(instance, delta)
        memo[instance.relations] = structure
        return structure

    in_regime = _check_regime(instance, delta)
    total = instance.total_size
    k = instance.k
    # deg > √(|D|/Δ)  ⇔  deg²·Δ > |D|
    heavy_sources = frozenset(
        a for a in instance.sources(0)
        if instance.out_degree(0, a) ** 2 * delta > total
    )
    heavy_targets = frozenset(
        b for b in instance.targets(k - 1)
        if instance.in_degree(k - 1, b) ** 2 * delta > total
    )
    view = _reachable_pairs(instance, heavy_sources, heavy_targets)
    bound_constant = app_setting('BOUND_CONSTANT')
    if len(view) > bound_constant * max(total, 1) * delta:
        logger.warning(
            'Heavy endpoint view of the %(k)d-path holds %(size)d pairs, '
            'above %(c)d·|D|·Δ',
            {'k': k, 'size': len(view), 'c': bound_constant}
        )
    first = build_pathk(instance.sub(instance.relations[1:]), delta, memo)
    last = build_pathk(instance.sub(instance.relations[:-1]), delta, memo)
    structure = PathStructureK(
        instance, delta, heavy_sources, heavy_targets, view, first, last,
        in_regime,
    )
    memo[instance.relations] = structure
    logger.debug(
        'Built %(k)d-path level: %(hs)d heavy sources, %(ht)d heavy targets, '
        '%(view)d materialized pairs',
        {'k': k, 'hs': len(heavy_sources), 'ht': len(heavy_targets),
         'view': len(view)}
    )
    return structure


def answer_pathk(s: PathStructure, a: AccessRequest,
                 meter: Optional[CostMeter] = None) -> bool:
    return s.answer(a, meter)


def restore_pathk(instance: PathInstance, delta: int,
                  heavy_sources: FrozenSet[int], heavy_targets: FrozenSet[int],
                  view: FrozenSet[Tuple[int, int]], first: PathStructure,
                  last: PathStructure) -> PathStructureK:
    return PathStructureK(
        instance, delta, heavy_sources, heavy_targets, view, first, last,
        delta >= min_regime_delta(instance.total_size),
    )


def bfs_fallback(instance: PathInstance, a: AccessRequest,
                 meter: Optional[CostMeter] = None) -> bool:
    """k rounds of level-synchronous expansion, round i following R_i only."""
    meter = meter if meter is not None else CostMeter()
    source, target = instance.endpoint_values(a)
    frontier = {source}
    for i in range(instance.k):
        reached = set()
        for x in frontier:
            meter.probe()
            for y in instance.successors(i, x):
                meter.touch()
                reached.add(y)
        frontier = reached
        if not frontier:
            return False
    return target in frontier


class BreadthFirstPath:
    """Answers by breadth-first search; stores nothing beyond the indexes."""

    def __init__(self, instance: PathInstance):
        self.instance = instance

    @property
    def ledger(self) -> SpaceLedger:
        return SpaceLedger(
            stored_entries=0, index_entries=self.instance.index_entries()
        )

    def answer(self, a: AccessRequest, meter: Optional[CostMeter] = None) -> bool:
        return bfs_fallback(self.instance, a, meter)

    def levels(self) -> List[dict]:
        return []


def delta_for_time(k: int, total_size: int, time_exponent) -> int:
    """
    Degree threshold giving answer time (|D|/Δ)^{(k-2)/2} = |D|^t, never
    below ⌈√|D|⌉.
    """
    t = Fraction(time_exponent)
    exponent = 1 - 2 * t / (k - 2)
    delta = math.ceil(total_size ** float(exponent)) if total_size else 1
    return max(delta, min_regime_delta(total_size), 1)


STRATEGY_ORDER = ('decomp', 'path', 'bfs')

# the recursive structure is charted while T <= |D|^{1/2}
PATH_TIME_CAP = Fraction(1, 2)


class ExponentPiece(NamedTuple):
    """Space exponent ``intercept + slope·t`` of a strategy for lo <= t <= hi."""
    strategy: str
    lo: Fraction
    hi: Fraction
    intercept: Fraction
    slope: Fraction

    def at(self, t: Fraction) -> Fraction:
        return self.intercept + self.slope * t

    def covers(self, t: Fraction) -> bool:
        return self.lo <= t <= self.hi


def _exponent_pieces(k: int) -> List[ExponentPiece]:
    zero, one = Fraction(0), Fraction(1)
    pieces = [ExponentPiece('decomp', zero, one, Fraction(2), Fraction(-2, k - 1))]
    if k >= 4:
        cap_space = 2 - 2 * PATH_TIME_CAP / (k - 2)
        pieces.append(ExponentPiece(
            'path', zero, PATH_TIME_CAP, Fraction(2), Fraction(-2, k - 2)
        ))
        pieces.append(ExponentPiece('path', PATH_TIME_CAP, one, cap_space, zero))
    pieces.append(ExponentPiece('bfs', one, one, one, zero))
    return pieces


def _crossings(pieces: List[ExponentPiece]) -> Iterator[Fraction]:
    for a, b in itertools.combinations(pieces, 2):
        lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
        if lo >= hi or a.slope == b.slope:
            continue
        t = (b.intercept - a.intercept) / (a.slope - b.slope)
        if lo < t < hi:
            yield t


def _space_exponents(k: int, t: Fraction) -> Dict[str, Optional[Fraction]]:
    exponents: Dict[str, Optional[Fraction]] = {}
    # S·T^{2/(k-1)} = |D|^2, useful while T <= |D|
    exponents['decomp'] = 2 - 2 * t / (k - 1) if t < 1 else None
    if k >= 4:
        # S·T^{2/(k-2)} = |D|^2 up to the cap, constant space after
        exponents['path'] = 2 - 2 * min(t, PATH_TIME_CAP) / (k - 2)
    else:
        exponents['path'] = None
    exponents['bfs'] = Fraction(1) if t >= 1 else None
    return exponents


def _recommend(exponents: Dict[str, Optional[Fraction]]) -> str:
    candidates = [
        (exponents[name], STRATEGY_ORDER.index(name), name)
        for name in STRATEGY_ORDER if exponents[name] is not None
    ]
    return min(candidates)[2]


def strategy_envelope(k: int) -> Tuple[Tuple[Tuple[Fraction, str, Fraction], ...],
                                       Tuple[Fraction, ...]]:
    """
    Exact lower envelope of the strategy exponents over t ∈ [0, 1].

    Returns the envelope pieces as (start, strategy, space exponent at the
    start), closed by the winner at t = 1, and the points where the
    envelope moves to another piece. The winner of every open interval
    between consecutive breakpoints decides the piece, so ties at a single
    point never count as a switch.
    """
    pieces = _exponent_pieces(k)
    points = sorted(
        {Fraction(0), Fraction(1)}
        | {p.lo for p in pieces} | {p.hi for p in pieces}
        | set(_crossings(pieces))
    )
    runs: List[Tuple[Fraction, ExponentPiece]] = []
    for lo, hi in zip(points, points[1:]):
        mid = (lo + hi) / 2
        best = min(
            (p for p in pieces if p.covers(mid)),
            key=lambda p: (p.at(mid), STRATEGY_ORDER.index(p.strategy))
        )
        if not runs or runs[-1][1] != best:
            runs.append((lo, best))
    frontier = [(start, piece.strategy, piece.at(start)) for start, piece in runs]
    switch_points = [start for start, _piece in runs[1:]]
    end = points[-1]
    end_exponents = _space_exponents(k, end)
    end_strategy = _recommend(end_exponents)
    if end_strategy != runs[-1][1].strategy:
        switch_points.append(end)
    frontier.append((end, end_strategy, end_exponents[end_strategy]))
    return tuple(frontier), tuple(switch_points)


@dataclass(frozen=True)
class PathStrategyReport:
    k: int
    time_exponent: Fraction
    strategy: str
    space_exponents: Tuple[Tuple[str, Optional[Fraction]], ...]
    delta: Optional[int]
    # (start of an envelope piece, its strategy, space exponent there)
    frontier: Tuple[Tuple[Fraction, str, Fraction], ...]
    switch_points: Tuple[Fraction, ...]

    def to_json(self) -> dict:
        def fmt(v):
            return None if v is None else format_fraction(v)
        return {
            'k': self.k,
            'time_exponent': fmt(self.time_exponent),
            'strategy': self.strategy,
            'space_exponents': {n: fmt(v) for n, v in self.space_exponents},
            'delta': self.delta,
            'frontier': [
                {'t': fmt(t), 'strategy': s, 'space_exponent': fmt(e)}
                for t, s, e in self.frontier
            ],
            'switch_points': [fmt(t) for t in self.switch_points],
        }


def select_path_strategy(k: int, total_size: int, time_exponent) -> PathStrategyReport:
    """
    Compare the space exponents of the decomposition structure, the
    recursive path structure and breadth-first search at T = |D|^t, and
    attach the exact lower envelope of the three curves.
    """
    t = Fraction(time_exponent)
    exponents = _space_exponents(k, t)
    strategy = _recommend(exponents)
    frontier, switch_points = strategy_envelope(k)
    delta = delta_for_time(k, total_size, t) if strategy == 'path' else None
    return PathStrategyReport(
        k=k, time_exponent=t, strategy=strategy,
        space_exponents=tuple((n, exponents[n]) for n in STRATEGY_ORDER),
        delta=delta, frontier=frontier, switch_points=switch_points,
    )
