"""
Generic join with partial bindings, the residual cost T(a) of a request, and
a brute-force evaluator used as a test oracle.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import (
    Tuple, Dict, Iterator, Sequence, List, Optional, Iterable, FrozenSet,
    Callable, Union,
)

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.covers import CoverAnalysis, INFINITE_SLACK
from adorned_tradeoffs.query import AdornedQuery, AccessRequest, Atom
from adorned_tradeoffs.relations import Database, Relation
from adorned_tradeoffs.utils import lcm_of_denominators

__all__ = [
    'CostMeter', 'Threshold', 'ResidualCost', 'BoundAtom', 'BoundJoinPlan',
    'bind_atoms', 'residual_cost', 'iter_bound', 'eval_bound',
    'brute_force_eval',
]

logger = logging.getLogger(__name__)


@dataclass
class CostMeter:
    probes: int = 0
    tuples_touched: int = 0

    @property
    def steps(self) -> int:
        return self.probes + self.tuples_touched

    def probe(self, n: int = 1):
        self.probes += n

    def touch(self, n: int = 1):
        self.tuples_touched += n


@dataclass(frozen=True)
class Threshold:
    """T = base^exponent, compared exactly against residual costs."""
    base: Union[int, Fraction]
    exponent: Fraction = Fraction(1)

    @classmethod
    def of(cls, value: int) -> 'Threshold':
        return cls(int(value), Fraction(1))

    def __float__(self):
        if self.base == 0:
            return 0.0 if self.exponent else 1.0
        return math.exp(float(self.exponent) * math.log(self.base))

    def __str__(self):
        if self.exponent == 1:
            return str(self.base)
        return '%s^%s' % (self.base, self.exponent)


@dataclass(frozen=True)
class ResidualCost:
    """Π count_F^{exponent_F}; zero as soon as one count is zero."""
    factors: Tuple[Tuple[int, Fraction], ...]

    @property
    def is_zero(self) -> bool:
        return any(c == 0 for c, _e in self.factors)

    def _integer_powers(self, threshold: Threshold) -> Tuple[int, int]:
        lcm = lcm_of_denominators(
            [e for _c, e in self.factors] + [threshold.exponent]
        )
        lhs = 1
        for count, exponent in self.factors:
            lhs *= count ** int(exponent * lcm)
        rhs = threshold.base ** int(threshold.exponent * lcm)
        return lhs, rhs

    def compare(self, threshold: Threshold) -> int:
        if self.is_zero:
            return -1 if float(threshold) > 0 else 0
        lhs, rhs = self._integer_powers(threshold)
        return (lhs > rhs) - (lhs < rhs)

    def exceeds(self, threshold: Threshold) -> bool:
        return self.compare(threshold) > 0

    def __float__(self):
        if self.is_zero:
            return 0.0
        return math.exp(sum(
            float(e) * math.log(c) for c, e in self.factors if e
        ))


class BoundAtom:
    """A positive atom together with the relation it ranges over."""

    def __init__(self, atom_id: int, atom: Atom, relation: Relation):
        if len(atom.vars) != relation.schema.arity:
            raise ValidationError(
                _('Atom %(atom)s has %(got)d variables but relation '
                  '%(rel)s has arity %(arity)d.'),
                code='arity',
                params={'atom': atom.render(), 'got': len(atom.vars),
                        'rel': relation.name, 'arity': relation.schema.arity}
            )
        self.atom_id = atom_id
        self.atom = atom
        self.relation = relation

    def schema_vars(self, query_vars: Iterable[str]) -> Tuple[str, ...]:
        """Relation column names for the given query variables of the atom."""
        return tuple(
            self.relation.variables[self.atom.vars.index(v)] for v in query_vars
        )

    def ordered(self, query_vars: Iterable[str]) -> Tuple[str, ...]:
        """The given variables, restricted to the atom, in atom order."""
        query_vars = frozenset(query_vars)
        return tuple(v for v in self.atom.vars if v in query_vars)

    def count(self, a: AccessRequest, variables: Sequence[str]) -> int:
        return self.relation.index(self.schema_vars(variables)).count(
            a.values_for(variables)
        )


def bind_atoms(q: AdornedQuery, db: Database) -> List[BoundAtom]:
    return [
        BoundAtom(atom_id, atom, db[atom.relation_name])
        for atom_id, atom in enumerate(q.positive_atoms)
    ]


def residual_cost(q: AdornedQuery, db: Database, cover: CoverAnalysis,
                  a: AccessRequest,
                  atoms: Optional[List[BoundAtom]] = None,
                  bound_vars: Optional[Iterable[str]] = None) -> ResidualCost:
    """
    T(a) = Π_F |R_F(a)|^{u_F/α}, with R_F(a) the selection of R_F on the
    bound variables of F. Atoms without bound variables count in full.
    """
    if cover.slack == INFINITE_SLACK:
        return ResidualCost(())
    atoms = atoms if atoms is not None else bind_atoms(q, db)
    bound = frozenset(q.bound_vars if bound_vars is None else bound_vars)
    factors = []
    for bound_atom in atoms:
        key = bound_atom.ordered(bound)
        factors.append((
            bound_atom.count(a, key),
            cover.cover.weight(bound_atom.atom_id) / cover.slack
        ))
    return ResidualCost(tuple(factors))


@dataclass
class _Step:
    var: str
    # (atom, prefix query vars, prefix schema vars, schema var of `var`)
    participants: List[Tuple[BoundAtom, Tuple[str, ...], Tuple[str, ...], str]]


@dataclass
class BoundJoinPlan:
    query: AdornedQuery
    variable_order: Tuple[str, ...]
    participants: Dict[str, Tuple[int, ...]]
    steps: List[_Step] = field(repr=False, default_factory=list)
    bound_checks: List[BoundAtom] = field(repr=False, default_factory=list)

    @classmethod
    def for_query(cls, q: AdornedQuery, db: Database,
                  bound: Optional[Iterable[str]] = None) -> 'BoundJoinPlan':
        """
        Greedy order over the unbound variables: most atoms first, ties by
        name. ``bound`` overrides the query's bound variables (used for
        bag-local queries).
        """
        atoms = bind_atoms(q, db)
        bound = frozenset(q.bound_vars if bound is None else bound)
        unbound = q.variables - bound
        occurrences = {
            v: sum(1 for ba in atoms if v in ba.atom.vars) for v in unbound
        }
        order = tuple(sorted(unbound, key=lambda v: (-occurrences[v], v)))
        steps = []
        seen = set(bound)
        for var in order:
            participants = []
            for ba in atoms:
                if var not in ba.atom.vars:
                    continue
                prefix = ba.ordered(seen)
                participants.append(
                    (ba, prefix, ba.schema_vars(prefix),
                     ba.schema_vars((var,))[0])
                )
            steps.append(_Step(var, participants))
            seen.add(var)
        bound_checks = [ba for ba in atoms if ba.atom.var_set <= bound]
        return cls(
            query=q, variable_order=order,
            participants={
                s.var: tuple(p[0].atom_id for p in s.participants)
                for s in steps
            },
            steps=steps, bound_checks=bound_checks,
        )


def _run_plan(plan: BoundJoinPlan, assignment: Dict[str, int],
              meter: CostMeter,
              prune: Optional[Callable[[Dict[str, int]], bool]] = None) -> Iterator[Dict[str, int]]:
    for ba in plan.bound_checks:
        meter.probe()
        key = tuple(assignment[v] for v in ba.atom.vars)
        if key not in ba.relation:
            return

    def extend(depth: int):
        if depth == len(plan.steps):
            yield dict(assignment)
            return
        step = plan.steps[depth]
        lists = []
        for ba, prefix, prefix_schema, var_schema in step.participants:
            meter.probe()
            key = tuple(assignment[v] for v in prefix)
            values = ba.relation.extensions(prefix_schema, var_schema).get(key, ())
            if not values:
                return
            lists.append((len(values), values, ba, prefix, prefix_schema, var_schema))
        lists.sort(key=lambda t: t[0])
        _n, candidates, *_rest = lists[0]
        others = lists[1:]
        for value in candidates:
            meter.touch()
            ok = True
            for _n2, _vals, ba, prefix, prefix_schema, var_schema in others:
                meter.probe()
                key = tuple(assignment[v] for v in prefix) + (value,)
                if not ba.relation.index(prefix_schema + (var_schema,)).contains(key):
                    ok = False
                    break
            if not ok:
                continue
            assignment[step.var] = value
            if prune is None or not prune(assignment):
                yield from extend(depth + 1)
            del assignment[step.var]

    yield from extend(0)


def iter_bound(q: AdornedQuery, db: Database, a: AccessRequest,
               meter: Optional[CostMeter] = None,
               plan: Optional[BoundJoinPlan] = None,
               prune: Optional[Callable[[Dict[str, int]], bool]] = None) -> Iterator[Dict[str, int]]:
    """
    Stream the assignments of the unbound variables that satisfy the positive
    atoms of q under the bindings in a. Partial assignments for which
    ``prune`` returns True are not extended.
    """
    meter = meter if meter is not None else CostMeter()
    plan = plan if plan is not None else BoundJoinPlan.for_query(
        q, db, bound=(v for v, _c in a.bindings)
    )
    return _run_plan(plan, a.as_dict(), meter, prune)


def eval_bound(q: AdornedQuery, db: Database, a: AccessRequest,
               meter: Optional[CostMeter] = None,
               plan: Optional[BoundJoinPlan] = None) -> bool:
    for _witness in iter_bound(q, db, a, meter, plan):
        return True
    return False


def brute_force_eval(q: AdornedQuery, db: Database, a: AccessRequest) -> bool:
    """
    Nested loops over the active domain of every unbound variable, checking
    atoms against the raw tuple sets as soon as their variables are assigned.
    Uses no index.
    """
    assignment = a.as_dict()
    positive = q.positive_atoms
    negated = q.negated_atoms
    for atom in positive + negated:
        if len(atom.vars) != db[atom.relation_name].schema.arity:
            raise ValidationError(
                _('Atom %(atom)s does not match the arity of %(rel)s.'),
                code='arity',
                params={'atom': atom.render(), 'rel': atom.relation_name}
            )

    # variables in order of first occurrence in the body
    order: List[str] = []
    for atom in positive:
        for v in atom.vars:
            if v not in assignment and v not in order:
                order.append(v)

    domains: Dict[str, FrozenSet[int]] = {}
    for v in order:
        columns = [
            frozenset(t[atom.vars.index(v)]
                      for t in db[atom.relation_name].tuples)
            for atom in positive if v in atom.vars
        ]
        domains[v] = frozenset.intersection(*columns)

    def holds(atom: Atom) -> bool:
        return tuple(assignment[v] for v in atom.vars) in \
            db[atom.relation_name].tuples

    def ready(atom: Atom, depth: int) -> bool:
        assigned = set(order[:depth])
        return all(v in assigned or v in a.as_dict() for v in atom.vars)

    for atom in positive:
        if ready(atom, 0) and not holds(atom):
            return False

    def search(depth: int) -> bool:
        if depth == len(order):
            return not any(holds(atom) for atom in negated)
        var = order[depth]
        newly_ready = [
            atom for atom in positive
            if var in atom.vars and ready(atom, depth + 1)
        ]
        for value in sorted(domains[var]):
            assignment[var] = value
            if all(holds(atom) for atom in newly_ready) and search(depth + 1):
                del assignment[var]
                return True
        assignment.pop(var, None)
        return False

    return search(0)
