"""
Build-and-query sweeps over synthetic instances.

Each grid point (family, strategy, size, budget, seed) generates its own
instance, builds the structure, answers a seeded sample of requests and
reports the ledger and meter readings as one row. Space is counted in
stored entries and time in meter steps, so rows only depend on the
configuration and the seed.
"""
import concurrent.futures
import logging
import math
import time
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import List, Optional, Tuple, Dict, Sequence

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.conf import app_setting
from adorned_tradeoffs.families import family_query
from adorned_tradeoffs.forms.config import BenchConfigForm, errors_of
from adorned_tradeoffs.generators import (
    EDGE_SCHEMA, adversarial_heavy, random_digraph, set_family,
)
from adorned_tradeoffs.paths import PathStructure4, PathStructureK
from adorned_tradeoffs.query import AdornedQuery, AccessRequest, parse_query
from adorned_tradeoffs.relations import Database
from adorned_tradeoffs.strategies import BuiltStructure, build_strategy, exponent_of
from adorned_tradeoffs.structures import TradeoffStructure
from adorned_tradeoffs.utils import format_fraction, write_csv_rows
from adorned_tradeoffs.wcoj import CostMeter

__all__ = [
    'BoundViolation', 'BenchPoint', 'BenchRow', 'clean_bench_config',
    'bench_points', 'bench_instance', 'sample_requests', 'run_point',
    'run_bench', 'check_bounds', 'fit_slopes', 'plot_data', 'write_rows',
    'CSV_COLUMNS',
]

logger = logging.getLogger(__name__)


class BoundViolation(AssertionError):
    """A measured quantity exceeded its asserted bound."""

    def __init__(self, row: 'BenchRow', quantity: str, measured: float,
                 allowed: float):
        self.row = row
        self.quantity = quantity
        self.measured = measured
        self.allowed = allowed
        super().__init__(
            '%s=%.6f exceeds the allowed constant %.6f (%s, %s, |D|=%d, '
            'seed %d)' % (
                quantity, measured, allowed, row.family, row.strategy,
                row.size, row.seed
            )
        )


@dataclass(frozen=True)
class BenchPoint:
    family: str
    k: Optional[int]
    strategy: str
    size: int
    seed: int
    # exactly one of these is set, except for breadth-first search
    threshold: Optional[int] = None
    time_exponent: Optional[Fraction] = None
    delta: Optional[int] = None
    query: Optional[str] = None
    sets: Optional[int] = None
    universe: Optional[int] = None
    skew: str = 'zipf'
    nodes: Optional[int] = None
    adversarial: bool = False
    sample_requests: int = 2000
    timing: bool = False

    @property
    def budget_label(self) -> str:
        if self.delta is not None:
            return 'delta=%d' % self.delta
        if self.threshold is not None:
            return 'T=%d' % self.threshold
        if self.time_exponent is not None:
            return 'tau=%s' % format_fraction(self.time_exponent)
        return '-'


@dataclass(frozen=True)
class BenchRow:
    family: str
    k: Optional[int]
    strategy: str
    seed: int
    size: int
    budget: str
    # effective time threshold, |D|/Δ for the path structures
    time_threshold: float
    stored_entries: int
    index_entries: int
    max_answer_steps: int
    mean_answer_steps: float
    light_max_steps: int
    predicted_space_exponent: Optional[Fraction]
    predicted_time_exponent: Optional[Fraction]
    space_constant: float
    time_constant: float
    asserted: bool
    saturated: bool
    build_millis: Optional[float] = None


CSV_COLUMNS = (
    'family', 'k', 'strategy', 'seed', 'size', 'budget', 'time_threshold',
    'stored_entries', 'index_entries', 'max_answer_steps',
    'mean_answer_steps', 'light_max_steps', 'predicted_space_exponent',
    'predicted_time_exponent', 'space_constant', 'time_constant', 'asserted',
    'saturated',
)


def clean_bench_config(data: dict) -> dict:
    form = BenchConfigForm(data=data)
    if not form.is_valid():
        raise errors_of(form)
    return form.cleaned_data


def _budgets(strategy: str, config: dict) -> List[dict]:
    if strategy == 'bfs':
        return [{}]
    if strategy == 'path':
        return [{'delta': d} for d in config['deltas']]
    budgets = [{'threshold': t} for t in config.get('thresholds') or ()]
    budgets.extend(
        {'time_exponent': t} for t in config.get('time_exponents') or ()
    )
    return budgets


def bench_points(config: dict) -> List[BenchPoint]:
    """Grid points in a fixed order: strategy, size, budget, seed."""
    common = {
        'family': config['family'], 'k': config.get('k'),
        'query': config.get('query') or None, 'sets': config.get('sets'),
        'universe': config.get('universe'),
        'skew': config.get('skew') or 'zipf', 'nodes': config.get('nodes'),
        'adversarial': bool(config.get('adversarial')),
        'sample_requests': (
            config.get('sample_requests')
            or app_setting('BENCH_SAMPLE_REQUESTS')
        ),
        'timing': bool(config.get('timing')),
    }
    points = []
    for strategy in config['strategies']:
        for size in config['sizes']:
            for budget in _budgets(strategy, config):
                for seed in config['seeds']:
                    points.append(BenchPoint(
                        strategy=strategy, size=size, seed=seed, **budget,
                        **common
                    ))
    return points


def _graph_rows(point: BenchPoint):
    n = point.nodes or max(point.size // 4, math.isqrt(point.size) + 2)
    if point.adversarial:
        return adversarial_heavy(n, point.size, point.seed)
    return random_digraph(n, point.size, point.seed)


def _edge_relations(q: AdornedQuery, point: BenchPoint) -> dict:
    """Every relation of ``q``, negated ones included, over the same edges."""
    edges = _graph_rows(point)['R'][1]
    spec = {}
    for atom in q.body:
        if len(atom.vars) != 2:
            raise ValidationError(
                _('Benchmark queries may only use binary relations; '
                  '%(atom)s is not binary.'),
                code='invalid_config', params={'atom': atom.render()}
            )
        spec[atom.relation_name] = (EDGE_SCHEMA, edges)
    return spec


def bench_instance(point: BenchPoint) -> Tuple[AdornedQuery, Database]:
    if point.family == 'k-star':
        q = family_query('k-star', point.k)
        m = point.sets or max(2, math.isqrt(point.size))
        universe = point.universe or max(2, point.size // 4)
        rows = set_family(m, universe, point.size, point.seed, point.skew)
        return q, Database.from_rows(rows)
    if point.family == 'custom':
        q = parse_query(point.query)
    else:
        q = family_query(point.family, point.k)
    return q, Database.from_rows(_edge_relations(q, point))


def sample_requests(q: AdornedQuery, db: Database, count: int,
                    seed: Sequence[int]) -> List[AccessRequest]:
    """
    Requests drawn uniformly from the values each bound variable takes in
    the first positive atom mentioning it.
    """
    domains = []
    for var in q.bound_vars:
        atom = next(a for a in q.positive_atoms if var in a.vars)
        rel = db[atom.relation_name]
        column = rel.variables[atom.vars.index(var)]
        domains.append(sorted(rel.column(column)))
    if any(not values for values in domains):
        return []
    rng = np.random.default_rng(list(seed))
    picks = [rng.integers(0, len(values), size=count) for values in domains]
    return [
        AccessRequest.for_query(
            q, [values[int(p[i])] for values, p in zip(domains, picks)]
        )
        for i in range(count)
    ]


def _effective_time(built: BuiltStructure, total: int) -> float:
    s = built.structure
    if isinstance(s, TradeoffStructure):
        return float(s.threshold)
    if isinstance(s, (PathStructure4, PathStructureK)):
        return total / s.delta
    exponent = built.predicted_time_exponent or 0
    return float(total) ** float(exponent)


def _constants(built: BuiltStructure, total: int, stored: int,
               light_max: int, max_steps: int, time_threshold: float) -> Tuple[float, float, bool]:
    """(space constant, time constant, whether the bounds are asserted)."""
    s = built.structure
    if isinstance(s, TradeoffStructure):
        # Π|R_F|^{u_F}/T^α with the relation sizes folded into the cover
        cover = s.cover
        if cover.slack == math.inf:
            predicted = 1.0
        else:
            predicted = (
                float(total) ** float(cover.space_base)
                / max(time_threshold, 1.0) ** float(cover.slack)
            )
        atoms = len(built.query.positive_atoms)
        return (
            stored / max(1.0, predicted),
            light_max / ((atoms + 1) * max(time_threshold, 1.0)),
            True,
        )
    if isinstance(s, (PathStructure4, PathStructureK)):
        k = s.instance.k
        steps_bound = max(1.0, (total / s.delta) ** ((k - 2) / 2))
        return (
            stored / max(1.0, float(total) * s.delta),
            max_steps / ((k + 1) * steps_bound),
            s.in_regime,
        )
    space = float(total) ** float(built.predicted_space_exponent or 1)
    return (
        stored / max(1.0, space),
        max_steps / max(1.0, time_threshold),
        False,
    )


def run_point(point: BenchPoint) -> BenchRow:
    q, db = bench_instance(point)
    total = db.total_size
    time_exponent = point.time_exponent
    threshold = point.threshold
    if threshold is not None and point.strategy in ('decomp', 'negation'):
        time_exponent, threshold = exponent_of(threshold, total), None
    started = time.perf_counter()
    built = build_strategy(
        point.strategy, q, db, threshold=threshold,
        time_exponent=time_exponent, delta=point.delta,
    )
    build_millis = (time.perf_counter() - started) * 1000
    requests = sample_requests(
        q, db, point.sample_requests, (point.seed, point.size)
    )
    steps = []
    light_steps = [0]
    for a in requests:
        meter = CostMeter()
        built.answer(a, meter)
        steps.append(meter.steps)
        if built.is_light(a):
            light_steps.append(meter.steps)
    ledger = built.ledger
    time_threshold = _effective_time(built, total)
    max_steps = max(steps, default=0)
    space_constant, time_constant, asserted = _constants(
        built, total, ledger.stored_entries, max(light_steps), max_steps,
        time_threshold,
    )
    row = BenchRow(
        family=point.family, k=point.k, strategy=point.strategy,
        seed=point.seed, size=total, budget=point.budget_label,
        time_threshold=time_threshold,
        stored_entries=ledger.stored_entries,
        index_entries=ledger.index_entries,
        max_answer_steps=max_steps,
        mean_answer_steps=float(np.mean(steps)) if steps else 0.0,
        light_max_steps=max(light_steps),
        predicted_space_exponent=built.predicted_space_exponent,
        predicted_time_exponent=built.predicted_time_exponent,
        space_constant=space_constant, time_constant=time_constant,
        asserted=asserted,
        saturated=ledger.stored_entries == 0 or ledger.all_valid_stored,
        build_millis=build_millis if point.timing else None,
    )
    logger.debug(
        'Bench point %(strategy)s %(budget)s seed %(seed)d: %(stored)d '
        'stored, max %(steps)d steps',
        {'strategy': point.strategy, 'budget': point.budget_label,
         'seed': point.seed, 'stored': row.stored_entries,
         'steps': row.max_answer_steps}
    )
    return row


def run_bench(config: dict, jobs: Optional[int] = None) -> List[BenchRow]:
    points = bench_points(config)
    jobs = jobs or config.get('jobs') or 1
    logger.info(
        'Running %(count)d bench points with %(jobs)d jobs',
        {'count': len(points), 'jobs': jobs}
    )
    if jobs <= 1:
        return [run_point(p) for p in points]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
        # map() keeps grid order
        return list(executor.map(run_point, points))


def check_bounds(rows: Sequence[BenchRow], constant: Optional[float] = None):
    """Raise BoundViolation for the first asserted row over the constant."""
    c = constant if constant is not None else app_setting('BOUND_CONSTANT')
    for row in rows:
        if not row.asserted:
            continue
        if row.space_constant > c:
            raise BoundViolation(row, 'space_constant', row.space_constant, c)
        if row.time_constant > c:
            raise BoundViolation(row, 'time_constant', row.time_constant, c)


def _curve_key(row: BenchRow) -> Tuple:
    return row.family, row.k or 0, row.strategy, row.size


def fit_slopes(rows: Sequence[BenchRow]) -> Dict[Tuple, Optional[float]]:
    """
    Least-squares slope of log stored_entries against log T per curve,
    over the unsaturated points. None when fewer than two distinct T
    values remain.
    """
    curves: Dict[Tuple, List[Tuple[float, float]]] = {}
    for row in rows:
        curves.setdefault(_curve_key(row), [])
        if row.saturated or row.time_threshold <= 0:
            continue
        curves[_curve_key(row)].append(
            (math.log(row.time_threshold), math.log(row.stored_entries))
        )
    slopes = {}
    for key, points in curves.items():
        if len({x for x, _y in points}) < 2:
            slopes[key] = None
            continue
        xs, ys = zip(*points)
        slopes[key] = float(np.polyfit(xs, ys, 1)[0])
    return slopes


def plot_data(rows: Sequence[BenchRow]) -> dict:
    slopes = fit_slopes(rows)
    series = []
    for key in sorted(slopes):
        family, k, strategy, size = key
        members = [r for r in rows if _curve_key(r) == key]
        series.append({
            'family': family, 'k': k or None, 'strategy': strategy,
            'size': size,
            'points': [
                {
                    'log_t': _round(math.log(r.time_threshold))
                    if r.time_threshold > 0 else None,
                    'log_s': _round(math.log(r.stored_entries))
                    if r.stored_entries > 0 else None,
                    'saturated': r.saturated,
                    'seed': r.seed,
                }
                for r in members
            ],
            'slope': None if slopes[key] is None else _round(slopes[key]),
        })
    return {'series': series}


def _round(value: float) -> float:
    return float('%.6f' % value)


def _cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, float):
        return '%.6f' % value
    return str(value)


def write_rows(stream, rows: Sequence[BenchRow], timing: bool = False):
    columns = CSV_COLUMNS + (('build_millis',) if timing else ())

    def cells():
        for row in rows:
            values = asdict(row)
            yield [_cell(values[c]) for c in columns]
    write_csv_rows(stream, cells(), columns)
