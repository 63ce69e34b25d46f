"""
Built-in adorned query families. Binary families range over a single
relation R, so they run unchanged on any generated instance.
"""
from typing import Callable, Dict, Optional

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.query import AdornedQuery, parse_query

__all__ = ['QUERY_FAMILIES', 'family_query', 'family_text']


def k_star(k: int) -> str:
    head = ', '.join('b y%d' % i for i in range(1, k + 1))
    body = ', '.join('R(x,y%d)' % i for i in range(1, k + 1))
    return 'Star%d(%s) = %s' % (k, head, body)


def k_path(k: int) -> str:
    body = ', '.join('R(x%d,x%d)' % (i, i + 1) for i in range(1, k + 1))
    return 'P%d(b x1, b x%d) = %s' % (k, k + 1, body)


def triangle(_k=None) -> str:
    return 'Triangle(b x, b y) = R(x,y), R(y,z), R(x,z)'


def square(_k=None) -> str:
    return 'Square(b x1, b x2) = R(x1,x2), R(x2,x3), R(x3,x4), R(x4,x1)'


def opposite_square(_k=None) -> str:
    return 'Corners(b x1, b x3) = R(x1,x2), R(x2,x3), R(x3,x4), R(x4,x1)'


def negated_path(_k=None) -> str:
    return ('NegPath(b x1, b x6) = R(x1,x2), !S(x2,x3), T(x3,x4), '
            '!U(x4,x5), V(x5,x6)')


def open_triangle(_k=None) -> str:
    return 'OpenTriangle(b x2, b x3) = R1(x1,x2), !R2(x2,x3), R3(x1,x3)'


def double_triangle(_k=None) -> str:
    return ('DoubleTriangle(b x, b y, b z) = R(x,y), S(y,z), T(x,z), '
            'U(p,q), V(q,r), W(p,r), D(x,p), E(y,p), F(r,z)')


def star_path(_k=None) -> str:
    return ('StarPath(b x1, b x2, b x3, b x4) = R(x1,y), S(x2,y), T(y,z), '
            'U(x3,z), V(x4,z)')


QUERY_FAMILIES: Dict[str, Callable[[Optional[int]], str]] = {
    'k-star': k_star,
    'k-path': k_path,
    'triangle': triangle,
    'square': square,
    'opposite-square': opposite_square,
    'negated-path': negated_path,
    'open-triangle': open_triangle,
    'double-triangle': double_triangle,
    'star-path': star_path,
}

PARAMETRIZED = ('k-star', 'k-path')


def family_text(name: str, k: Optional[int] = None) -> str:
    try:
        factory = QUERY_FAMILIES[name]
    except KeyError:
        raise ValidationError(
            _('Unknown query family %(name)s; choose one of %(choices)s.'),
            code='invalid_config',
            params={'name': name, 'choices': ', '.join(QUERY_FAMILIES)}
        )
    if name in PARAMETRIZED:
        if k is None or k < 2:
            raise ValidationError(
                _('Family %(name)s needs k >= 2.'), code='invalid_config',
                params={'name': name}
            )
        return factory(k)
    return factory(None)


def family_query(name: str, k: Optional[int] = None) -> AdornedQuery:
    return parse_query(family_text(name, k))
