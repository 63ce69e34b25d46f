"""
Seeded synthetic instances. Every generator returns raw rows in the
``{name: (variables, rows)}`` shape accepted by ``Database.from_rows`` and
``write_database``; the same seed always yields the same rows.
"""
import logging
import math
from typing import Dict, Sequence, Tuple, List, Optional, Set

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

__all__ = [
    'set_family', 'random_digraph', 'layered_path', 'adversarial_heavy',
    'GENERATORS', 'EDGE_SCHEMA', 'MEMBERSHIP_SCHEMA',
]

logger = logging.getLogger(__name__)

RawInstance = Dict[str, Tuple[Tuple[str, ...], List[Tuple[str, ...]]]]

EDGE_SCHEMA = ('src', 'dst')
MEMBERSHIP_SCHEMA = ('element', 'set')


def _inconsistent(msg, **params):
    return ValidationError(msg, code='invalid_config', params=params)


def _fill_pairs(rng: np.random.Generator, target: int, draw) -> Set[Tuple[int, int]]:
    """Draw batches of pairs until ``target`` distinct ones are collected."""
    pairs: Set[Tuple[int, int]] = set()
    while len(pairs) < target:
        batch = max(target - len(pairs), 16)
        for pair in zip(*draw(rng, batch)):
            pair = (int(pair[0]), int(pair[1]))
            pairs.add(pair)
            if len(pairs) == target:
                break
    return pairs


def set_family(m: int, universe: int, memberships: int, seed: int,
               skew: Optional[str] = 'zipf', exponent: float = 1.1) -> RawInstance:
    """
    m sets over a universe of elements with exactly ``memberships``
    (element, set) pairs in R(element, set). Elements are drawn Zipf
    distributed (truncated to the universe) or uniformly.
    """
    if min(m, universe, memberships) < 1:
        raise _inconsistent(_('Set family parameters must be positive.'))
    if memberships > m * universe:
        raise _inconsistent(
            _('Cannot place %(n)d memberships in %(m)d sets over %(u)d '
              'elements.'), n=memberships, m=m, u=universe
        )
    rng = np.random.default_rng(seed)
    if skew == 'zipf':
        weights = 1.0 / np.arange(1, universe + 1) ** exponent
        p = weights / weights.sum()
    else:
        p = None

    def draw(rng, n):
        elements = rng.choice(universe, size=n, p=p)
        sets = rng.integers(0, m, size=n)
        return elements, sets

    pairs = _fill_pairs(rng, memberships, draw)
    rows = sorted(('e%d' % e, 's%d' % s) for e, s in pairs)
    return {'R': (MEMBERSHIP_SCHEMA, rows)}


def random_digraph(n: int, m: int, seed: int) -> RawInstance:
    """m distinct directed edges without self loops over n vertices."""
    if n < 2 or m < 1:
        raise _inconsistent(_('A random digraph needs n >= 2 and m >= 1.'))
    if m > n * (n - 1):
        raise _inconsistent(
            _('%(m)d edges do not fit in a simple digraph on %(n)d '
              'vertices.'), m=m, n=n
        )
    rng = np.random.default_rng(seed)
    pairs = _fill_pairs(rng, m, lambda rng, k: _non_loop_pairs(rng, n, k))
    rows = sorted(('v%d' % a, 'v%d' % b) for a, b in pairs)
    return {'R': (EDGE_SCHEMA, rows)}


def _non_loop_pairs(rng: np.random.Generator, n: int, k: int):
    src = rng.integers(0, n, size=k)
    # shifting by 1..n-1 never lands on the source
    dst = (src + rng.integers(1, n, size=k)) % n
    return src, dst


def layered_path(k: int, widths: Sequence[int], seed: int,
                 out_degree: int = 2) -> RawInstance:
    """
    k + 1 layers of the given widths with every vertex linked to
    ``out_degree`` random vertices of the next layer, all in one relation R.
    """
    if len(widths) != k + 1:
        raise _inconsistent(
            _('A layered path of length %(k)d needs %(n)d layer widths, got '
              '%(got)d.'), k=k, n=k + 1, got=len(widths)
        )
    if any(w < 1 for w in widths) or out_degree < 1:
        raise _inconsistent(_('Layer widths and out-degree must be positive.'))
    rng = np.random.default_rng(seed)
    rows = set()
    for layer in range(k):
        nxt = widths[layer + 1]
        fan = min(out_degree, nxt)
        for i in range(widths[layer]):
            for j in rng.choice(nxt, size=fan, replace=False):
                rows.add(('l%d_%d' % (layer, i), 'l%d_%d' % (layer + 1, int(j))))
    return {'R': (EDGE_SCHEMA, sorted(rows))}


def adversarial_heavy(n: int, m: int, seed: int,
                      spike: Optional[int] = None) -> RawInstance:
    """
    A random digraph plus a hub vertex whose in- and out-degree both exceed
    √|D|, so a 4-path middle variable has a heavy value.
    """
    base = random_digraph(n, m, seed)
    rows = set(base['R'][1])
    if spike is None:
        # (s)^2 > m + 2s holds once s >= √m + 2
        spike = math.isqrt(m) + 3
    if spike > n:
        raise _inconsistent(
            _('Spike degree %(spike)d exceeds the %(n)d vertices.'),
            spike=spike, n=n
        )
    rng = np.random.default_rng(seed + 1)
    hub = 'hub'
    for v in rng.choice(n, size=spike, replace=False):
        rows.add(('v%d' % int(v), hub))
    for v in rng.choice(n, size=spike, replace=False):
        rows.add((hub, 'v%d' % int(v)))
    total = len(rows)
    if spike <= math.isqrt(total):
        logger.warning(
            'Hub degree %(spike)d does not exceed √|D| for |D|=%(total)d',
            {'spike': spike, 'total': total}
        )
    return {'R': (EDGE_SCHEMA, sorted(rows))}


GENERATORS = {
    'set-family': set_family,
    'random-digraph': random_digraph,
    'layered-path': layered_path,
    'adversarial-heavy': adversarial_heavy,
}
