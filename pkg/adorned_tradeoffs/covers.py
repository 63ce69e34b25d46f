"""
Fractional edge covers, cover numbers, slack and the budgeted bag width.

Sizes enter the programs as exponents of |D|: a relation of size |D|^e
contributes e·u_F to the space exponent. Time budgets are exponents too
(T = |D|^τ), so every quantity in this module is an exact rational.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import (
    Tuple, FrozenSet, Mapping, Optional, Iterable, List, Sequence, Union,
)

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.query import Hypergraph
from adorned_tradeoffs.simplex import LinearProgram, Sense
from adorned_tradeoffs.utils import format_exponent, format_fraction, parse_fraction

__all__ = [
    'INFINITE_SLACK', 'FractionalCover', 'CoverAnalysis', 'FrontierEntry',
    'rho_star', 'slack_of', 'best_cover_for_time', 'bag_cover', 'bag_width',
    'exponents_from_sizes', 'cover_frontier', 'dominant_cover',
    'render_tradeoff', 'tau_grid', 'cover_from_json',
]

logger = logging.getLogger(__name__)

# slack when every variable is bound
INFINITE_SLACK = math.inf

Slack = Union[Fraction, float]


@dataclass(frozen=True)
class FractionalCover:
    # (atom id, weight) in atom id order
    weights: Tuple[Tuple[int, Fraction], ...]
    covered_set: FrozenSet[str]

    def weight(self, atom_id: int) -> Fraction:
        for i, u in self.weights:
            if i == atom_id:
                return u
        return Fraction(0)

    @property
    def value(self) -> Fraction:
        return sum((u for _i, u in self.weights), Fraction(0))

    def load(self, h: Hypergraph, var: str) -> Fraction:
        return sum(
            (self.weight(i) for i, e in h.edges if var in e), Fraction(0)
        )

    def covers(self, h: Hypergraph, variables: Iterable[str],
               scale: Fraction = Fraction(1)) -> bool:
        return all(self.load(h, x) >= scale for x in variables)

    def render(self) -> str:
        return '(%s)' % ','.join(format_fraction(u) for _i, u in self.weights)


@dataclass(frozen=True)
class CoverAnalysis:
    cover: FractionalCover
    cover_value: Fraction
    slack: Slack
    # Σ e_F·u_F, the exponent of Π|R_F|^{u_F}
    space_base: Fraction

    def space_exponent(self, tau) -> Fraction:
        """Exponent of Π|R_F|^{u_F} / T^α for T = |D|^τ."""
        if self.slack == INFINITE_SLACK:
            return Fraction(0)
        return self.space_base - self.slack * Fraction(tau)

    def scaled_weights(self) -> Tuple[Tuple[int, Fraction], ...]:
        if self.slack == INFINITE_SLACK:
            return tuple((i, Fraction(0)) for i, _u in self.cover.weights)
        return tuple((i, u / self.slack) for i, u in self.cover.weights)

    def verify(self, h: Hypergraph) -> bool:
        """
        Check every cover constraint exactly, and that the weights scaled by
        1/slack still cover the unbound variables.
        """
        if not self.cover.covers(h, self.cover.covered_set):
            return False
        if self.slack == INFINITE_SLACK:
            return not (h.free_nodes & self.cover.covered_set)
        scaled = FractionalCover(self.scaled_weights(), h.free_nodes)
        return scaled.covers(h, h.free_nodes)

    def to_json(self) -> dict:
        return {
            'weights': {str(i): format_fraction(u) for i, u in self.cover.weights},
            'cover_value': format_fraction(self.cover_value),
            'slack': (
                'inf' if self.slack == INFINITE_SLACK
                else format_fraction(self.slack)
            ),
            'space_base': format_fraction(self.space_base),
        }


def cover_from_json(data: dict, covered: Iterable[str]) -> CoverAnalysis:
    try:
        weights = tuple(sorted(
            (int(i), parse_fraction(u)) for i, u in data['weights'].items()
        ))
        slack = data['slack']
        slack = INFINITE_SLACK if slack == 'inf' else parse_fraction(slack)
        return CoverAnalysis(
            FractionalCover(weights, frozenset(covered)),
            parse_fraction(data['cover_value']), slack,
            parse_fraction(data['space_base']),
        )
    except (KeyError, TypeError, AttributeError, ValueError):
        raise ValidationError(
            _('Malformed cover %(data)s.'), code='structure_file',
            params={'data': data}
        )


def _uncoverable(variables):
    return ValidationError(
        _('Variables %(vars)s are not covered by any hyperedge.'),
        code='uncoverable', params={'vars': ', '.join(sorted(variables))}
    )


def _load_coefficients(h: Hypergraph, var: str):
    return {k: 1 for k, (_i, e) in enumerate(h.edges) if var in e}


def rho_star(h: Hypergraph, s: Iterable[str]) -> Tuple[Fraction, FractionalCover]:
    """
    Fractional edge cover number of s, with a witness cover. Among optimal
    covers the lexicographically smallest weight vector (atom id order) is
    returned.
    """
    s = frozenset(s)
    if not s:
        return Fraction(0), FractionalCover(
            tuple((i, Fraction(0)) for i in h.edge_ids), s
        )
    missing = s - h.covered_nodes
    if missing:
        raise _uncoverable(missing)
    lp = LinearProgram(len(h.edges))
    for x in sorted(s):
        lp.add_constraint(_load_coefficients(h, x), Sense.GE, 1)
    objective = {k: 1 for k in range(len(h.edges))}
    solution = lp.lexicographic_minimize(objective, range(len(h.edges)))
    cover = FractionalCover(
        tuple((i, solution.values[k]) for k, (i, _e) in enumerate(h.edges)), s
    )
    return solution.value, cover


def slack_of(h: Hypergraph, cover: FractionalCover) -> Slack:
    free = h.free_nodes
    if not free:
        return INFINITE_SLACK
    return min(cover.load(h, x) for x in free)


def exponents_from_sizes(rel_sizes: Mapping[int, int],
                         total_size: int) -> Mapping[int, Fraction]:
    """
    Express |R_F| as |D|^{e_F}. Equal sizes give exactly 1; everything else is
    rounded to a rational with denominator at most 1000.
    """
    exponents = {}
    for atom_id, size in rel_sizes.items():
        if size >= total_size:
            exponents[atom_id] = Fraction(1)
        elif size <= 1 or total_size <= 1:
            exponents[atom_id] = Fraction(0)
        else:
            exponents[atom_id] = Fraction(
                math.log(size) / math.log(total_size)
            ).limit_denominator(1000)
    return exponents


def _tradeoff_program(h: Hypergraph, costs: Mapping[int, Fraction], tau,
                      covered: FrozenSet[str]) -> CoverAnalysis:
    """
    Solve min Σ_F e_F·u_F − τ·α over covers u of ``covered`` whose load on
    every unbound variable is at least α >= 1. Weights are capped at 1.
    """
    tau = Fraction(tau)
    free = h.free_nodes & covered
    if not free:
        value, cover = rho_star(h, covered)
        base = sum(
            (Fraction(costs.get(i, 1)) * u for i, u in cover.weights),
            Fraction(0)
        )
        return CoverAnalysis(cover, value, INFINITE_SLACK, base)

    missing = covered - h.covered_nodes
    if missing:
        raise _uncoverable(missing)
    m = len(h.edges)
    alpha = m
    lp = LinearProgram(m + 1)
    for x in sorted(covered):
        lp.add_constraint(_load_coefficients(h, x), Sense.GE, 1)
    for x in sorted(free):
        coeffs = _load_coefficients(h, x)
        coeffs[alpha] = -1
        lp.add_constraint(coeffs, Sense.GE, 0)
    for k in range(m):
        lp.add_upper_bound(k, 1)
    lp.add_constraint({alpha: 1}, Sense.GE, 1)
    objective = {
        k: Fraction(costs.get(i, 1)) for k, (i, _e) in enumerate(h.edges)
    }
    objective[alpha] = -tau
    solution = lp.lexicographic_minimize(objective, range(m))
    # an infeasible program means some variable is in no edge, handled above
    assert solution.optimal
    cover = FractionalCover(
        tuple((i, solution.values[k]) for k, (i, _e) in enumerate(h.edges)),
        covered
    )
    slack = min(cover.load(h, x) for x in free)
    base = sum(
        (Fraction(costs.get(i, 1)) * u for i, u in cover.weights), Fraction(0)
    )
    return CoverAnalysis(cover, cover.value, slack, base)


def best_cover_for_time(h: Hypergraph,
                        size_exponents: Optional[Mapping[int, Fraction]] = None,
                        time_budget_exponent=Fraction(0)) -> CoverAnalysis:
    """
    Cover minimizing the space exponent Σ e_F·u_F − τ·α of the heavy-request
    index for T = |D|^τ. Missing size exponents default to 1 (|R_F| = |D|).
    """
    if Fraction(time_budget_exponent) < 0:
        raise ValidationError(
            _('The time budget exponent must be non-negative.'),
            code='invalid_config'
        )
    return _tradeoff_program(
        h, size_exponents or {}, time_budget_exponent, h.nodes
    )


def bag_cover(bag: Iterable[str], bag_bound: Iterable[str],
              edges: Sequence[Tuple[int, FrozenSet[str]]], delta) -> CoverAnalysis:
    bag = frozenset(bag)
    local = Hypergraph(
        nodes=bag,
        edges=tuple((i, e) for i, e in edges if e <= bag),
        bound_nodes=frozenset(bag_bound) & bag,
    )
    return _tradeoff_program(local, {}, delta, bag)


def bag_width(bag: Iterable[str], bag_bound: Iterable[str],
              edges: Sequence[Tuple[int, FrozenSet[str]]], delta) -> Fraction:
    """
    ρ_t(δ) = min_u (Σ u_F − δ·α) over covers of the bag using the edges
    inside it, α being the slack over the bag's unbound variables. A bag
    without unbound variables is answered by membership probes alone and
    has width 0.
    """
    analysis = bag_cover(bag, bag_bound, edges, delta)
    return analysis.space_exponent(delta)


def tau_grid(h: Hypergraph, q: int) -> List[Fraction]:
    """τ ∈ {0, 1/q, ...} up to ⌈ρ*(V)⌉."""
    top = math.ceil(rho_star(h, h.nodes)[0])
    return [Fraction(i, q) for i in range(top * q + 1)]


@dataclass(frozen=True)
class FrontierEntry:
    analysis: CoverAnalysis
    taus: Tuple[Fraction, ...]


def cover_frontier(h: Hypergraph, size_exponents: Optional[Mapping[int, Fraction]],
                   taus: Iterable[Fraction]) -> List[FrontierEntry]:
    """
    Distinct optimal covers across a τ grid, in order of first appearance,
    each with the grid points where it was chosen.
    """
    entries = {}
    order = []
    for tau in taus:
        analysis = best_cover_for_time(h, size_exponents, tau)
        key = (analysis.cover.weights, analysis.slack)
        if key not in entries:
            entries[key] = (analysis, [])
            order.append(key)
        entries[key][1].append(Fraction(tau))
    return [
        FrontierEntry(entries[key][0], tuple(entries[key][1])) for key in order
    ]


def _effective_exponent(analysis: CoverAnalysis, tau) -> Fraction:
    # the additive linear term dominates below exponent 1
    return max(Fraction(1), analysis.space_exponent(tau))


def dominant_cover(candidates: Sequence[CoverAnalysis]) -> Optional[CoverAnalysis]:
    """
    The candidate whose space exponent is no worse than every other
    candidate's at every τ >= 0, or None. Effective exponents are piecewise
    linear with breakpoints where a line meets the linear floor, so
    comparing at those breakpoints decides dominance exactly.
    """
    points = {Fraction(0)}
    for c in candidates:
        if c.slack != INFINITE_SLACK and c.slack > 0 and c.space_base > 1:
            points.add((c.space_base - 1) / c.slack)
    for c in candidates:
        if all(_effective_exponent(c, t) <= _effective_exponent(o, t)
               for o in candidates for t in points):
            return c
    return None


def render_tradeoff(space_base: Fraction, slack: Slack,
                    symbol: str = 'D') -> Tuple[str, str]:
    """
    Render the tradeoff S = |D|^x / T^α both as a quotient and in product
    form, e.g. ("S = |D|^2/T^2", "S·T^2 = |D|^2").
    """
    size = format_exponent('|%s|' % symbol, space_base)
    if slack == INFINITE_SLACK:
        return 'S = |%s|, T = 1' % symbol, 'S = |%s|' % symbol
    time = format_exponent('T', slack)
    return 'S = %s/%s' % (size, time), 'S·%s = %s' % (time, size)
