"""
Adorned conjunctive queries.

Query text looks like

    Q(b x1, b x6) = R(x1,x2), !S(x2,x3), T(x3,x4)

where every head variable carries an adornment (``b`` for bound, ``f`` for
free) and ``!`` marks a negated atom.
"""
import enum
import re
from dataclasses import dataclass
from typing import Tuple, FrozenSet, Optional, Sequence, List, Iterable

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.forms.config import IDENTIFIER_PATTERN

__all__ = [
    'Adornment', 'Atom', 'AdornedQuery', 'Hypergraph', 'AccessRequest',
    'parse_query', 'render', 'positive_part', 'hypergraph_of',
    'intern_request', 'path_relations', 'is_path_query',
]

HEAD_PATTERN = re.compile(
    r'^\s*(?P<name>%s)\s*\((?P<head>[^)]*)\)\s*=\s*(?P<body>.*?)\s*$'
    % IDENTIFIER_PATTERN, re.DOTALL
)
HEAD_VAR_PATTERN = re.compile(
    r'^\s*(?P<adornment>[bf])\s+(?P<var>%s)\s*$' % IDENTIFIER_PATTERN
)
ATOM_PATTERN = re.compile(
    r'\s*(?P<neg>!)?\s*(?P<rel>%s)\s*\((?P<vars>[^)]*)\)\s*(?:,|$)'
    % IDENTIFIER_PATTERN
)
IDENTIFIER = re.compile(r'^%s\Z' % IDENTIFIER_PATTERN)


class Adornment(enum.Enum):
    BOUND = 'b'
    FREE = 'f'


@dataclass(frozen=True)
class Atom:
    relation_name: str
    vars: Tuple[str, ...]
    negated: bool = False

    @property
    def var_set(self) -> FrozenSet[str]:
        return frozenset(self.vars)

    def render(self) -> str:
        return '%s%s(%s)' % (
            '!' if self.negated else '', self.relation_name, ','.join(self.vars)
        )


@dataclass(frozen=True)
class AdornedQuery:
    name: str
    head: Tuple[Tuple[str, Adornment], ...]
    body: Tuple[Atom, ...]

    @property
    def positive_atoms(self) -> Tuple[Atom, ...]:
        """
        Positive atoms in body order. The position of an atom in this tuple
        is its atom id.
        """
        return tuple(a for a in self.body if not a.negated)

    @property
    def negated_atoms(self) -> Tuple[Atom, ...]:
        return tuple(a for a in self.body if a.negated)

    @property
    def bound_vars(self) -> Tuple[str, ...]:
        return tuple(v for v, ad in self.head if ad is Adornment.BOUND)

    @property
    def free_head_vars(self) -> Tuple[str, ...]:
        return tuple(v for v, ad in self.head if ad is Adornment.FREE)

    @property
    def variables(self) -> FrozenSet[str]:
        return frozenset(v for a in self.positive_atoms for v in a.vars)

    @property
    def is_boolean(self) -> bool:
        return not self.free_head_vars

    def require_boolean(self):
        if not self.is_boolean:
            raise ValidationError(
                _('Query %(name)s has free head variables %(vars)s; '
                  'non-Boolean adorned queries are unsupported.'),
                code='non_boolean',
                params={'name': self.name, 'vars': ', '.join(self.free_head_vars)}
            )

    def require_positive(self):
        if self.negated_atoms:
            raise ValidationError(
                _('Query %(name)s has negated atoms; build it with the '
                  'negation strategy.'),
                code='negation_unsupported', params={'name': self.name}
            )

    def __str__(self):
        return render(self)


def render(q: AdornedQuery) -> str:
    head = ', '.join('%s %s' % (ad.value, v) for v, ad in q.head)
    body = ', '.join(a.render() for a in q.body)
    return '%s(%s) = %s' % (q.name, head, body)


def _syntax_error(msg, **params):
    return ValidationError(msg, code='syntax', params=params)


def _split_vars(raw: str, text: str) -> Tuple[str, ...]:
    variables = tuple(v.strip() for v in raw.split(','))
    if not variables or any(not IDENTIFIER.match(v) for v in variables):
        raise _syntax_error(
            _('Malformed variable list "%(vars)s" in "%(text)s".'),
            vars=raw, text=text
        )
    return variables


def parse_query(text: str) -> AdornedQuery:
    m = HEAD_PATTERN.match(text)
    if m is None:
        raise _syntax_error(
            _('Expected "Name(b x, ...) = Atom, ...", got "%(text)s".'),
            text=text
        )

    head = []
    raw_head = m.group('head').strip()
    if raw_head:
        for item in raw_head.split(','):
            hm = HEAD_VAR_PATTERN.match(item)
            if hm is None:
                raise _syntax_error(
                    _('Malformed head variable "%(item)s"; expected an '
                      'adornment (b or f) followed by a variable.'),
                    item=item.strip()
                )
            head.append((hm.group('var'), Adornment(hm.group('adornment'))))
    head_names = [v for v, _ad in head]
    if len(set(head_names)) != len(head_names):
        raise _syntax_error(
            _('Head of %(text)s repeats a variable.'), text=text
        )

    body_text = m.group('body')
    body = []
    pos = 0
    while pos < len(body_text):
        am = ATOM_PATTERN.match(body_text, pos)
        if am is None or am.end() == pos:
            raise _syntax_error(
                _('Cannot parse atom at "%(rest)s".'),
                rest=body_text[pos:].strip()
            )
        variables = _split_vars(am.group('vars'), text)
        if len(set(variables)) != len(variables):
            raise ValidationError(
                _('Atom %(atom)s repeats a variable.'),
                code='repeated_variable',
                params={'atom': am.group(0).strip(' ,')}
            )
        body.append(
            Atom(am.group('rel'), variables, negated=bool(am.group('neg')))
        )
        pos = am.end()
    if not body:
        raise _syntax_error(_('Query %(text)s has an empty body.'), text=text)
    if body_text.endswith(','):
        raise _syntax_error(
            _('Body of %(text)s ends with a comma.'), text=text
        )

    q = AdornedQuery(m.group('name'), tuple(head), tuple(body))
    positive_vars = q.variables
    for atom in q.negated_atoms:
        missing = atom.var_set - positive_vars
        if missing:
            raise ValidationError(
                _('Negated atom %(atom)s is unsafe: %(vars)s occur in no '
                  'positive atom.'),
                code='unsafe_negation',
                params={'atom': atom.render(),
                        'vars': ', '.join(sorted(missing))}
            )
    for v in head_names:
        if v not in positive_vars:
            raise ValidationError(
                _('Head variable %(var)s occurs in no positive body atom.'),
                code='head_not_in_body', params={'var': v}
            )
    return q


def positive_part(q: AdornedQuery) -> AdornedQuery:
    return AdornedQuery(q.name, q.head, q.positive_atoms)


@dataclass(frozen=True)
class Hypergraph:
    nodes: FrozenSet[str]
    # (atom id, variables)
    edges: Tuple[Tuple[int, FrozenSet[str]], ...]
    bound_nodes: FrozenSet[str]

    @property
    def free_nodes(self) -> FrozenSet[str]:
        return self.nodes - self.bound_nodes

    @property
    def edge_ids(self) -> Tuple[int, ...]:
        return tuple(i for i, _e in self.edges)

    def edge(self, atom_id: int) -> FrozenSet[str]:
        for i, e in self.edges:
            if i == atom_id:
                return e
        raise KeyError(atom_id)

    def restrict(self, bag: Iterable[str], bound: Iterable[str] = ()) -> 'Hypergraph':
        """
        Sub-hypergraph over the edges fully contained in ``bag``.
        Nodes stay equal to the bag, so uncovered variables are visible to
        callers checking coverability.
        """
        bag = frozenset(bag)
        return Hypergraph(
            nodes=bag,
            edges=tuple((i, e) for i, e in self.edges if e <= bag),
            bound_nodes=frozenset(bound) & bag,
        )

    @property
    def covered_nodes(self) -> FrozenSet[str]:
        return frozenset().union(*(e for _i, e in self.edges))


def hypergraph_of(q: AdornedQuery) -> Hypergraph:
    edges = tuple(
        (atom_id, atom.var_set)
        for atom_id, atom in enumerate(q.positive_atoms)
    )
    return Hypergraph(
        nodes=q.variables, edges=edges, bound_nodes=frozenset(q.bound_vars)
    )


@dataclass(frozen=True)
class AccessRequest:
    # sorted (variable, constant id) pairs
    bindings: Tuple[Tuple[str, int], ...]

    @classmethod
    def from_mapping(cls, mapping) -> 'AccessRequest':
        return cls(tuple(sorted(dict(mapping).items())))

    @classmethod
    def for_query(cls, q: AdornedQuery, values: Sequence[int]) -> 'AccessRequest':
        bound = q.bound_vars
        if len(values) != len(bound):
            raise ValidationError(
                _('Request has %(got)d values but query %(name)s binds '
                  '%(expected)d variables.'),
                code='request_arity',
                params={'got': len(values), 'name': q.name,
                        'expected': len(bound)}
            )
        return cls.from_mapping(zip(bound, values))

    def as_dict(self) -> dict:
        return dict(self.bindings)

    def __getitem__(self, var: str) -> int:
        for v, c in self.bindings:
            if v == var:
                return c
        raise KeyError(var)

    def values_for(self, variables: Sequence[str]) -> Tuple[int, ...]:
        d = self.as_dict()
        return tuple(d[v] for v in variables)

    def restrict(self, variables: Iterable[str]) -> 'AccessRequest':
        variables = frozenset(variables)
        return AccessRequest(
            tuple((v, c) for v, c in self.bindings if v in variables)
        )


def intern_request(q: AdornedQuery, db, raw_values: Sequence[str]) -> AccessRequest:
    """
    Build a request from raw constants in bound head order. Constants unknown
    to the database map to an id matching nothing.
    """
    return AccessRequest.for_query(q, db.intern_values(raw_values))


def path_relations(q: AdornedQuery) -> Optional[List[str]]:
    """
    If q is a Boolean path query P_k(x1, x_{k+1}) = R1(x1,x2), ...,
    Rk(xk,x_{k+1}) (atoms in any order), return the relation names along the
    path. Otherwise return None.
    """
    if q.negated_atoms or not q.is_boolean or len(q.head) != 2:
        return None
    atoms = q.positive_atoms
    if any(len(a.vars) != 2 for a in atoms):
        return None
    source, target = q.bound_vars
    by_source = {}
    for a in atoms:
        if a.vars[0] in by_source:
            return None
        by_source[a.vars[0]] = a
    chain = []
    seen = {source}
    current = source
    while current in by_source:
        atom = by_source[current]
        chain.append(atom.relation_name)
        current = atom.vars[1]
        if current in seen:
            return None
        seen.add(current)
        if current == target:
            break
    if current != target or len(chain) != len(atoms):
        return None
    return chain


def is_path_query(q: AdornedQuery) -> bool:
    return path_relations(q) is not None
