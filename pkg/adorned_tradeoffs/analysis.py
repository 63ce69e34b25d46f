"""
Symbolic analysis of an adorned query: cover numbers, the cover frontier
and its tradeoffs, decompositions with their δ-width/δ-height profiles,
the optimization flags and, for path queries, the strategy frontier.
"""
import logging
from fractions import Fraction
from typing import Mapping, Optional

from django.core.exceptions import ValidationError

from adorned_tradeoffs.conf import app_setting
from adorned_tradeoffs.covers import (
    cover_frontier, dominant_cover, exponents_from_sizes, rho_star, tau_grid,
)
from adorned_tradeoffs.decompositions import (
    ConnexDecomposition, affine_form, enumerate_decompositions,
    negation_report, optimization_report, optimize_delta,
    uniform_tau_profile, validate_decomposition,
)
from adorned_tradeoffs.paths import select_path_strategy
from adorned_tradeoffs.query import (
    AdornedQuery, Hypergraph, hypergraph_of, path_relations, positive_part,
)
from adorned_tradeoffs.structures import predicted_space
from adorned_tradeoffs.utils import format_fraction

__all__ = ['analyze', 'decomposition_profile', 'FRONTIER_MAX_NODES']

logger = logging.getLogger(__name__)

# height budget sweeps enumerate the δ grid jointly over this many bags at most
FRONTIER_MAX_NODES = 3


def _size_exponents(q: AdornedQuery, sizes: Optional[Mapping[str, int]]):
    if not sizes:
        return None
    total = sum(sizes.values())
    return exponents_from_sizes(
        {i: sizes.get(a.relation_name, total)
         for i, a in enumerate(q.positive_atoms)},
        total
    )


def _covers_section(h: Hypergraph, size_exponents, q_grid: int, symbol: str) -> dict:
    taus = tau_grid(h, q_grid)
    frontier = cover_frontier(h, size_exponents, taus)
    best = dominant_cover([entry.analysis for entry in frontier])
    covers = []
    for entry in frontier:
        analysis = entry.analysis
        space = predicted_space(analysis, symbol=symbol)
        covers.append({
            'cover': analysis.cover.render(),
            'cover_value': format_fraction(analysis.cover_value),
            'slack': analysis.to_json()['slack'],
            'tradeoff': space.quotient,
            'product': space.product,
            'taus': [format_fraction(t) for t in entry.taus],
            'dominant': analysis is best,
        })
    return {
        'covers': covers,
        'tradeoff': (
            predicted_space(best, symbol=symbol).product if best is not None
            else None
        ),
    }


def decomposition_profile(h: Hypergraph, d: ConnexDecomposition,
                          q_grid: int, with_frontier: bool = True) -> dict:
    """
    Report of one decomposition: f and h with its own δ, the uniform profile
    δ(t) = τ rendered as affine forms in τ, and the best δ-width for each
    height budget on the δ grid.
    """
    report = validate_decomposition(h, d)
    taus = [Fraction(i, q_grid) for i in range(q_grid + 1)]
    profile = uniform_tau_profile(h, d, taus)
    result = {
        'decomposition': d.to_json(),
        'report': report.to_json(),
        'uniform_profile': {
            'f': affine_form([(t, f) for t, f, _h in profile]),
            'h': affine_form([(t, hh) for t, _f, hh in profile]),
        },
        'optimizations': optimization_report(h, d),
    }
    budgeted = len(d.budgeted_nodes())
    if with_frontier and budgeted <= FRONTIER_MAX_NODES:
        cache = {}
        frontier = []
        for i in range(q_grid + 1):
            budget = Fraction(i, q_grid)
            tuned = optimize_delta(h, d, budget, q_grid, width_cache=cache)
            width = validate_decomposition(h, tuned).width
            if frontier and frontier[-1]['f'] == format_fraction(width):
                continue
            frontier.append({
                'h': format_fraction(budget), 'f': format_fraction(width),
            })
        result['height_frontier'] = frontier
    return result


def _decompositions_section(h: Hypergraph, q_grid: int) -> dict:
    try:
        candidates = enumerate_decompositions(h)
    except ValidationError as e:
        if e.code != 'too_many_variables':
            raise
        return {'error': ' '.join(e.messages), 'decompositions': []}
    return {
        'decompositions': [
            decomposition_profile(h, d, q_grid) for d in candidates
        ],
    }


def analyze(q: AdornedQuery, sizes: Optional[Mapping[str, int]] = None,
            grid_q: Optional[int] = None, time_exponent=Fraction(1, 2),
            symbol: Optional[str] = None) -> dict:
    """
    ``sizes`` maps relation names to sizes; relations missing from it (or
    every relation, without it) count as |D|.
    """
    q_grid = grid_q or app_setting('GRID_Q')
    symbol = symbol or app_setting('SIZE_SYMBOL')
    positive = positive_part(q)
    h = hypergraph_of(positive)
    rho, witness = rho_star(h, h.nodes)
    result = {
        'query': str(q),
        'rho_star': format_fraction(rho),
        'rho_star_cover': witness.render(),
    }
    if q.is_boolean:
        result.update(_covers_section(
            h, _size_exponents(positive, sizes), q_grid, symbol
        ))
        result.update(_decompositions_section(h, q_grid))
    if q.negated_atoms:
        result['negation'] = negation_report(q, symbol)
    relations = path_relations(q)
    if relations is not None:
        total = sum(sizes.values()) if sizes else 0
        result['path_strategy'] = select_path_strategy(
            len(relations), total, time_exponent
        ).to_json()
    logger.debug('Analyzed %(query)s', {'query': q.name})
    return result
