import csv
import functools
import logging
import math
from fractions import Fraction
from typing import Generator, TypeVar, Any, List, Tuple, Iterable, Sequence

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

__all__ = [
    'drain', 'parse_fraction', 'format_fraction',
    'format_exponent', 'write_csv_rows', 'lcm_of_denominators',
]

logger = logging.getLogger(__name__)

T = TypeVar('T')
S = TypeVar('S')


def drain(generator: Generator[T, Any, S]) -> Tuple[List[T], S]:
    """
    Run ``generator`` to completion. Returns everything it yielded together
    with its return value.
    """
    yielded: List[T] = []
    while True:
        try:
            yielded.append(next(generator))
        except StopIteration as stop:
            return yielded, stop.value


def parse_fraction(value) -> Fraction:
    """
    Parse a rational rendered as "p/q" (or an integer / decimal literal).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise ValidationError(
            _('Invalid rational number %(value)s, expected p/q.'),
            code='invalid_config', params={'value': value}
        )


def format_fraction(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return '%d/%d' % (value.numerator, value.denominator)


def format_exponent(base: str, exponent: Fraction) -> str:
    """
    Render base^exponent the way tradeoffs are printed: no exponent for 1,
    plain digits for integers, braces for proper fractions.
    """
    exponent = Fraction(exponent)
    if exponent == 1:
        return base
    if exponent.denominator == 1:
        return '%s^%d' % (base, exponent.numerator)
    return '%s^{%s}' % (base, format_fraction(exponent))


def lcm_of_denominators(values: Iterable[Fraction]) -> int:
    return functools.reduce(
        lambda acc, d: acc * d // math.gcd(acc, d),
        (Fraction(v).denominator for v in values), 1
    )


def write_csv_rows(stream, rows: Iterable[Sequence], headers: Sequence[str]):
    # lineterminator pinned so output is byte-identical across platforms
    w = csv.writer(
        stream, delimiter=',', quotechar='"', quoting=csv.QUOTE_MINIMAL,
        lineterminator='\n'
    )
    w.writerow(list(headers))
    w.writerows(rows)
