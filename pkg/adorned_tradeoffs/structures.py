"""
Heavy/light answer index for Boolean adorned queries.

A request is valid when each atom's bound part occurs in the projection of
its relation. Valid requests whose residual cost T(a) strictly exceeds the
time threshold T are heavy: their answers are computed at build time and
stored. Everything else is evaluated live by generic join, which costs
O(T(a)) <= O(T).
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import (
    Dict, Tuple, Optional, Callable, List, Iterable, Iterator, Generator,
)

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.conf import app_setting
from adorned_tradeoffs.covers import (
    CoverAnalysis, INFINITE_SLACK, render_tradeoff,
)
from adorned_tradeoffs.query import (
    AdornedQuery, AccessRequest, Atom,
)
from adorned_tradeoffs.relations import Database, Relation, Schema
from adorned_tradeoffs.utils import drain, format_fraction
from adorned_tradeoffs.wcoj import (
    CostMeter, Threshold, BoundAtom, BoundJoinPlan, ResidualCost, bind_atoms,
    residual_cost, iter_bound, eval_bound,
)

__all__ = [
    'ValidityIndex', 'SpaceLedger', 'TradeoffStructure', 'PredictedSpace',
    'build', 'restore', 'answer', 'predicted_space', 'threshold_for',
    'relations_of', 'heavy_chain_holds', 'StoredIndex',
]

logger = logging.getLogger(__name__)

HeavyAnswer = Callable[[AccessRequest], bool]


def relations_of(q: AdornedQuery, db: Database) -> List[Relation]:
    names = sorted({a.relation_name for a in q.body})
    return [db[name] for name in names]


class ValidityIndex:
    """Per-atom membership of a[F ∩ V_b] in π_{F∩V_b}(R_F)."""

    def __init__(self, atoms: List[BoundAtom], bound_vars):
        self.checks = []
        for ba in atoms:
            key_vars = ba.ordered(bound_vars)
            if key_vars:
                self.checks.append(
                    (key_vars, ba.relation.index(ba.schema_vars(key_vars)))
                )

    def is_valid(self, a: AccessRequest, meter: CostMeter) -> bool:
        for key_vars, index in self.checks:
            meter.probe()
            if not index.contains(a.values_for(key_vars)):
                return False
        return True

    def projection_query(self, q_name: str, db: Database) -> Tuple[AdornedQuery, Database]:
        """
        φ_bound: one atom per projection, over a database of the projected
        relations sharing the intern table of ``db``.
        """
        atoms = []
        relations = {}
        for k, (key_vars, index) in enumerate(self.checks):
            name = '%s_bound_%d' % (q_name, k)
            relations[name] = Relation(name, Schema(key_vars), index.keys())
            atoms.append(Atom(name, key_vars))
        return AdornedQuery(q_name + '_bound', (), tuple(atoms)), \
            db.with_relations(relations)


@dataclass(frozen=True)
class SpaceLedger:
    stored_entries: int
    index_entries: int
    heavy_chain_holds: bool = True
    # requests enumerated at build time; pruned requests are not counted
    valid_requests: int = 0
    all_valid_stored: bool = False

    @property
    def total_space_units(self) -> int:
        return self.stored_entries + self.index_entries

    def __add__(self, other: 'SpaceLedger') -> 'SpaceLedger':
        return SpaceLedger(
            stored_entries=self.stored_entries + other.stored_entries,
            index_entries=self.index_entries + other.index_entries,
            heavy_chain_holds=(
                self.heavy_chain_holds and other.heavy_chain_holds
            ),
            valid_requests=self.valid_requests + other.valid_requests,
            all_valid_stored=self.all_valid_stored and other.all_valid_stored,
        )

    def to_json(self) -> dict:
        return {
            'stored_entries': self.stored_entries,
            'index_entries': self.index_entries,
            'total_space_units': self.total_space_units,
            'heavy_chain_holds': self.heavy_chain_holds,
            'valid_requests': self.valid_requests,
            'all_valid_stored': self.all_valid_stored,
        }


class TradeoffStructure:

    def __init__(self, query: AdornedQuery, db: Database, cover: CoverAnalysis,
                 threshold: Threshold, bound_vars: Tuple[str, ...],
                 validity: ValidityIndex, entries: Dict[Tuple[int, ...], bool],
                 ledger: SpaceLedger, plan: BoundJoinPlan,
                 heavy_costs: Optional[Dict[Tuple[int, ...], ResidualCost]] = None):
        self.query = query
        self.db = db
        self.cover = cover
        self.threshold = threshold
        self.bound_vars = bound_vars
        self.validity = validity
        self.entries = entries
        self.ledger = ledger
        self.plan = plan
        # residual cost of every stored request; empty after a restore
        self.heavy_costs = heavy_costs or {}

    def key_of(self, a: AccessRequest) -> Tuple[int, ...]:
        return a.values_for(self.bound_vars)

    def is_heavy(self, a: AccessRequest) -> bool:
        return self.key_of(a) in self.entries

    def lookup(self, a: AccessRequest, meter: CostMeter) -> Optional[bool]:
        """
        False for invalid requests, the stored answer for heavy requests and
        None for requests that have to be evaluated live.
        """
        if not self.validity.is_valid(a, meter):
            return False
        meter.probe()
        return self.entries.get(self.key_of(a))

    def answer(self, a: AccessRequest, meter: Optional[CostMeter] = None) -> bool:
        meter = meter if meter is not None else CostMeter()
        stored = self.lookup(a, meter)
        if stored is not None:
            return stored
        return eval_bound(self.query, self.db, a, meter, self.plan)

    def iter_live(self, a: AccessRequest, meter: CostMeter) -> Iterator[Dict[str, int]]:
        return iter_bound(self.query, self.db, a, meter, self.plan)


def threshold_for(db: Database, time_exponent: Optional[Fraction] = None,
                  threshold: Optional[int] = None) -> Threshold:
    """T given either directly or as |D|^τ."""
    if threshold is not None:
        return Threshold.of(threshold)
    return Threshold(db.total_size, Fraction(time_exponent or 0))


def _valid_requests(q: AdornedQuery, db: Database, validity: ValidityIndex,
                    bound_vars: Tuple[str, ...],
                    prune=None) -> Iterator[AccessRequest]:
    if not validity.checks:
        yield AccessRequest(())
        return
    bound_q, bound_db = validity.projection_query(q.name, db)
    for assignment in iter_bound(bound_q, bound_db, AccessRequest(()),
                                 prune=prune):
        yield AccessRequest.from_mapping(
            (v, assignment[v]) for v in bound_vars
        )


class ResidualPruner:
    """
    Skips partial requests whose residual cost cannot exceed T: unassigned
    atoms are bounded by their largest selection.
    """

    def __init__(self, atoms: List[BoundAtom], cover: CoverAnalysis,
                 bound_vars: Tuple[str, ...], time_threshold: Threshold):
        # strictly below T, with room for float rounding
        self.limit = float(time_threshold) * (1 - 1e-9)
        self.terms = []
        self.fired = 0
        for ba in atoms:
            weight = float(cover.cover.weight(ba.atom_id) / cover.slack)
            if not weight:
                continue
            key = ba.ordered(bound_vars)
            if key:
                index = ba.relation.index(ba.schema_vars(key))
                peak = max((len(rows) for rows in index.entries.values()), default=0)
            else:
                index, peak = None, len(ba.relation)
            self.terms.append((key, index, peak, weight))

    def __call__(self, assignment: Dict[str, int]) -> bool:
        bound = 1.0
        for key, index, peak, weight in self.terms:
            count = peak
            if key and all(v in assignment for v in key):
                count = index.count(tuple(assignment[v] for v in key))
            bound *= count ** weight
        if bound < self.limit:
            self.fired += 1
            return True
        return False


def heavy_chain_holds(costs: Iterable[ResidualCost], threshold: Threshold) -> bool:
    """
    T·|J| <= Σ_{a∈J} T(a) over the stored requests J, checked term by term
    with exact comparisons.
    """
    return all(cost.exceeds(threshold) for cost in costs)


def build(q: AdornedQuery, db: Database, cover: CoverAnalysis,
          time_threshold: Threshold,
          heavy_answer: Optional[HeavyAnswer] = None,
          bound_vars: Optional[Tuple[str, ...]] = None) -> TradeoffStructure:
    """
    Build the heavy-request index. ``heavy_answer`` computes the stored
    answer of a heavy request (defaults to evaluating q itself);
    ``bound_vars`` overrides the query's bound variables, for bag-local
    queries inside a decomposition.
    """
    q.require_boolean()
    q.require_positive()
    if bound_vars is None:
        bound_vars = q.bound_vars
    atoms = bind_atoms(q, db)
    validity = ValidityIndex(atoms, bound_vars)
    plan = BoundJoinPlan.for_query(q, db, bound=bound_vars)
    if heavy_answer is None:
        def heavy_answer(a):
            return eval_bound(q, db, a, CostMeter(), plan)
    pruner = None
    if cover.slack != INFINITE_SLACK:
        pruner = ResidualPruner(atoms, cover, bound_vars, time_threshold)

    heavy_costs: Dict[Tuple[int, ...], ResidualCost] = {}

    def heavy_entries() -> Generator[Tuple[Tuple[int, ...], bool], None, int]:
        examined = 0
        for a in _valid_requests(q, db, validity, bound_vars, pruner):
            examined += 1
            cost = residual_cost(q, db, cover, a, atoms, bound_vars)
            if not cost.exceeds(time_threshold):
                continue
            key = a.values_for(bound_vars)
            heavy_costs[key] = cost
            yield key, heavy_answer(a)
        return examined

    entries, examined = drain(heavy_entries())
    entries = dict(entries)
    chain_holds = heavy_chain_holds(heavy_costs.values(), time_threshold)
    index_entries = sum(r.index_entries for r in relations_of(q, db))
    ledger = SpaceLedger(
        stored_entries=len(entries), index_entries=index_entries,
        heavy_chain_holds=chain_holds, valid_requests=examined,
        all_valid_stored=(
            len(entries) == examined and not (pruner and pruner.fired)
        ),
    )
    logger.info(
        'Built %(query)s at T=%(threshold)s: %(examined)d requests examined, '
        '%(stored)d stored, %(index)d index entries',
        {'query': q.name, 'threshold': time_threshold, 'examined': examined,
         'stored': ledger.stored_entries, 'index': ledger.index_entries}
    )
    return TradeoffStructure(
        query=q, db=db, cover=cover, threshold=time_threshold,
        bound_vars=tuple(bound_vars), validity=validity, entries=entries,
        ledger=ledger, plan=plan, heavy_costs=heavy_costs,
    )


def restore(q: AdornedQuery, db: Database, cover: CoverAnalysis,
            time_threshold: Threshold, entries: Dict[Tuple[int, ...], bool],
            ledger: SpaceLedger) -> TradeoffStructure:
    """
    Reassemble a structure from previously computed heavy entries; only the
    indexes over db are rebuilt.
    """
    q.require_boolean()
    q.require_positive()
    atoms = bind_atoms(q, db)
    return TradeoffStructure(
        query=q, db=db, cover=cover, threshold=time_threshold,
        bound_vars=tuple(q.bound_vars),
        validity=ValidityIndex(atoms, q.bound_vars), entries=dict(entries),
        ledger=ledger, plan=BoundJoinPlan.for_query(q, db, bound=q.bound_vars),
    )


@dataclass(frozen=True)
class StoredIndex:
    """
    What a structure file keeps of a heavy-request index: its parameters,
    the stored answers and the ledger of the build.
    """
    cover: CoverAnalysis
    threshold: Threshold
    bound_vars: Tuple[str, ...]
    entries: Dict[Tuple[int, ...], bool]
    ledger: SpaceLedger

    @classmethod
    def of(cls, s: TradeoffStructure) -> 'StoredIndex':
        return cls(s.cover, s.threshold, tuple(s.bound_vars), dict(s.entries),
                   s.ledger)

    def restore_over(self, q: AdornedQuery, db: Database) -> TradeoffStructure:
        if tuple(q.bound_vars) != self.bound_vars:
            raise ValidationError(
                _('Stored bound variables %(stored)s do not match query '
                  '%(query)s.'),
                code='structure_file',
                params={'stored': ', '.join(self.bound_vars), 'query': q.name}
            )
        return restore(q, db, self.cover, self.threshold, self.entries,
                       self.ledger)


def answer(s: TradeoffStructure, a: AccessRequest,
           meter: Optional[CostMeter] = None) -> bool:
    return s.answer(a, meter)


@dataclass(frozen=True)
class PredictedSpace:
    space_base: Fraction
    slack: object
    quotient: str
    product: str
    exponent: Optional[Fraction] = None

    def to_json(self) -> dict:
        return {
            'quotient': self.quotient,
            'product': self.product,
            'exponent': (
                None if self.exponent is None
                else format_fraction(self.exponent)
            ),
        }


def predicted_space(cover: CoverAnalysis, tau: Optional[Fraction] = None,
                    symbol: Optional[str] = None) -> PredictedSpace:
    """
    Symbolic space bound Π|R_F|^{u_F}/T^α of a cover (sizes already folded
    into the cover's space exponent), and its exponent at T = |D|^τ.
    """
    symbol = symbol or app_setting('SIZE_SYMBOL')
    quotient, product = render_tradeoff(cover.space_base, cover.slack, symbol)
    exponent = None
    if tau is not None:
        exponent = max(Fraction(1), cover.space_exponent(tau))
    return PredictedSpace(
        space_base=cover.space_base, slack=cover.slack, quotient=quotient,
        product=product, exponent=exponent,
    )
