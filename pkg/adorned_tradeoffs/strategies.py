"""
Build any of the answering strategies behind one interface, for the
management commands and the benchmark harness.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.conf import app_setting
from adorned_tradeoffs.covers import best_cover_for_time, exponents_from_sizes
from adorned_tradeoffs.decompositions import (
    ConnexDecomposition, DecompStructure, build_decomp_structure,
    build_negation_structure, enumerate_decompositions, optimize_delta,
    validate_decomposition,
)
from adorned_tradeoffs.paths import (
    BreadthFirstPath, PathInstance, PathStructure4, PathStructureK,
    build_pathk, delta_for_time,
)
from adorned_tradeoffs.query import (
    AdornedQuery, AccessRequest, hypergraph_of,
)
from adorned_tradeoffs.relations import Database
from adorned_tradeoffs.structures import (
    SpaceLedger, TradeoffStructure, build, threshold_for,
)
from adorned_tradeoffs.utils import format_fraction
from adorned_tradeoffs.wcoj import CostMeter

__all__ = [
    'STRATEGIES', 'BuiltStructure', 'build_strategy', 'exponent_of',
    'size_exponents',
]

logger = logging.getLogger(__name__)

STRATEGIES = ('adstruct', 'decomp', 'negation', 'path', 'bfs')

Structure = Union[
    TradeoffStructure, DecompStructure, PathStructure4, PathStructureK,
    BreadthFirstPath,
]


@dataclass
class BuiltStructure:
    strategy: str
    query: AdornedQuery
    db: Database
    structure: Structure
    # JSON-ready build parameters, enough to rebuild the structure
    parameters: dict = field(default_factory=dict)
    predicted_space_exponent: Optional[Fraction] = None
    predicted_time_exponent: Optional[Fraction] = None

    @property
    def ledger(self) -> SpaceLedger:
        return self.structure.ledger

    def answer(self, a: AccessRequest, meter: Optional[CostMeter] = None) -> bool:
        return self.structure.answer(a, meter)

    def is_light(self, a: AccessRequest) -> bool:
        """Whether a is answered live rather than from stored answers."""
        if isinstance(self.structure, TradeoffStructure):
            return not self.structure.is_heavy(a)
        return True

    def summary(self) -> dict:
        def fmt(v):
            return None if v is None else format_fraction(v)
        return {
            'strategy': self.strategy,
            'query': str(self.query),
            'parameters': self.parameters,
            'ledger': self.ledger.to_json(),
            'predicted_space_exponent': fmt(self.predicted_space_exponent),
            'predicted_time_exponent': fmt(self.predicted_time_exponent),
        }


def exponent_of(value: int, total_size: int, grid_q: Optional[int] = None) -> Fraction:
    """log value / log |D| as a rational with denominator at most q."""
    q = grid_q or app_setting('GRID_Q')
    if value <= 1 or total_size <= 1:
        return Fraction(0)
    return Fraction(
        math.log(value) / math.log(total_size)
    ).limit_denominator(q)


def size_exponents(q: AdornedQuery, db: Database):
    return exponents_from_sizes(
        {i: len(db[a.relation_name]) for i, a in enumerate(q.positive_atoms)},
        db.total_size
    )


def _missing_budget(strategy):
    return ValidationError(
        _('Strategy %(strategy)s needs a threshold or a time exponent.'),
        code='invalid_config', params={'strategy': strategy}
    )


def _build_adstruct(q, db, threshold, time_exponent, grid_q) -> BuiltStructure:
    q.require_boolean()
    q.require_positive()
    if threshold is None and time_exponent is None:
        raise _missing_budget('adstruct')
    if threshold is not None:
        tau = exponent_of(threshold, db.total_size, grid_q)
    else:
        tau = Fraction(time_exponent)
    cover = best_cover_for_time(hypergraph_of(q), size_exponents(q, db), tau)
    s = build(q, db, cover, threshold_for(db, time_exponent, threshold))
    return BuiltStructure(
        'adstruct', q, db, s,
        parameters={
            'threshold': threshold,
            'time_exponent': format_fraction(tau),
        },
        predicted_space_exponent=max(Fraction(1), cover.space_exponent(tau)),
        predicted_time_exponent=tau,
    )


def _pick_decomposition(q: AdornedQuery, budget: Fraction,
                        grid_q) -> ConnexDecomposition:
    h = hypergraph_of(q)
    ranked = []
    for k, d in enumerate(enumerate_decompositions(h)):
        d = optimize_delta(h, d, budget, grid_q)
        report = validate_decomposition(h, d)
        ranked.append((report.width, report.height, k, d))
    width, height, _k, best = min(ranked, key=lambda r: r[:3])
    logger.info(
        'Picked decomposition with f=%(f)s, h=%(h)s out of %(n)d candidates',
        {'f': width, 'h': height, 'n': len(ranked)}
    )
    return best


def _build_decomp(q, db, decomposition, time_exponent, grid_q) -> BuiltStructure:
    q.require_boolean()
    budget = Fraction(time_exponent or 0)
    if decomposition is None:
        q.require_positive()
        decomposition = _pick_decomposition(q, budget, grid_q)
    s = build_decomp_structure(q, db, decomposition)
    return BuiltStructure(
        'decomp', q, db, s,
        parameters={
            'time_exponent': format_fraction(budget),
            'decomposition': decomposition.to_json(),
        },
        predicted_space_exponent=max(Fraction(1), s.report.width),
        predicted_time_exponent=s.report.height,
    )


def _build_negation(q, db, time_exponent) -> BuiltStructure:
    tau = Fraction(time_exponent or 0)
    s = build_negation_structure(q, db, tau)
    return BuiltStructure(
        'negation', q, db, s,
        parameters={'time_exponent': format_fraction(tau)},
        predicted_space_exponent=max(Fraction(1), s.report.width),
        predicted_time_exponent=s.report.height,
    )


def _build_path(q, db, delta, time_exponent, grid_q) -> BuiltStructure:
    instance = PathInstance.from_query(q, db)
    k = instance.k
    if k < 4:
        raise ValidationError(
            _('The path strategy needs a path of length at least 4, query '
              '%(name)s has length %(k)d.'),
            code='strategy_mismatch', params={'name': q.name, 'k': k}
        )
    total = instance.total_size
    if delta is None:
        if time_exponent is None:
            raise _missing_budget('path')
        delta = delta_for_time(k, total, time_exponent)
    s = build_pathk(instance, delta)
    # S = |D|·Δ and T = (|D|/Δ)^{(k-2)/2}
    e = exponent_of(delta, total, grid_q)
    return BuiltStructure(
        'path', q, db, s,
        parameters={'delta': delta},
        predicted_space_exponent=1 + e,
        predicted_time_exponent=Fraction(k - 2, 2) * (1 - min(e, Fraction(1))),
    )


def _build_bfs(q, db) -> BuiltStructure:
    s = BreadthFirstPath(PathInstance.from_query(q, db))
    return BuiltStructure(
        'bfs', q, db, s,
        predicted_space_exponent=Fraction(1),
        predicted_time_exponent=Fraction(1),
    )


def build_strategy(strategy: str, q: AdornedQuery, db: Database,
                   threshold: Optional[int] = None, time_exponent=None,
                   delta: Optional[int] = None,
                   decomposition: Optional[ConnexDecomposition] = None,
                   grid_q: Optional[int] = None) -> BuiltStructure:
    """
    Build ``strategy`` for q over db. The time budget is given as an
    explicit threshold T, as an exponent τ (T = |D|^τ), or for the path
    structures as a degree threshold Δ.
    """
    if strategy == 'adstruct':
        return _build_adstruct(q, db, threshold, time_exponent, grid_q)
    if strategy == 'decomp':
        return _build_decomp(q, db, decomposition, time_exponent, grid_q)
    if strategy == 'negation':
        return _build_negation(q, db, time_exponent)
    if strategy == 'path':
        return _build_path(q, db, delta, time_exponent, grid_q)
    if strategy == 'bfs':
        return _build_bfs(q, db)
    raise ValidationError(
        _('Unknown strategy %(strategy)s; choose one of %(choices)s.'),
        code='invalid_config',
        params={'strategy': strategy, 'choices': ', '.join(STRATEGIES)}
    )
