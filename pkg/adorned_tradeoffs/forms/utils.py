import abc
from typing import Optional, List, Tuple

from django import forms
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

__all__ = [
    'ErrorList', 'ErrorMixin', 'ParserErrorAggregator', 'FractionField',
    'IntegerListField', 'FractionListField', 'raise_collected',
]

ErrorList = List[Tuple[List[int], str]]


class ErrorMixin(abc.ABC):

    def error_at_line(self, line_no: int, msg: str, params: Optional[dict]=None,
                      code: Optional[str]=None):
        self.error_at_lines([line_no], msg, params, code=code)

    @abc.abstractmethod
    def error_at_lines(self, line_nos: List[int], msg: str,
                       params: Optional[dict]=None, code: Optional[str]=None):
        pass


class ParserErrorAggregator(ErrorMixin):
    """
    Collects errors from any number of parsers (one per data file), keyed by
    the source they came from. An error without its own code takes the code
    passed to :func:`raise_collected`.
    """

    def __init__(self):
        self._errors: List[Tuple[str, List[int], str, Optional[str]]] = []
        self.source = ''

    def error_at_lines(self, line_nos: List[int], msg: str,
                       params: Optional[dict]=None, code: Optional[str]=None):
        if params is not None:
            msg = msg % params
        self._errors.append((self.source, sorted(line_nos), msg, code))

    def absorb(self, source: str, parser):
        self.source = source
        for line_no, msg, code in parser.errors:
            self.error_at_line(line_no, msg, code=code)

    @property
    def errors(self):
        # sort by source, then line number(s)
        return sorted(self._errors, key=lambda t: (t[0], t[1]))

    def __bool__(self):
        return bool(self._errors)


def raise_collected(aggregator: ParserErrorAggregator, code: str):
    if not aggregator:
        return
    raise ValidationError([
        ValidationError(
            _('%(source)s, line %(lines)s: %(msg)s'), code=own_code or code,
            params={
                'source': source, 'msg': msg,
                'lines': ', '.join(map(str, line_nos))
            }
        ) for source, line_nos, msg, own_code in aggregator.errors
    ])


class FractionField(forms.CharField):
    """
    Form field for rationals written as "p/q".
    """

    def to_python(self, value):
        from adorned_tradeoffs.utils import parse_fraction
        value = super().to_python(value)
        if value in self.empty_values:
            return None
        return parse_fraction(value)


class IntegerListField(forms.Field):

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if isinstance(value, str):
            value = [v for v in value.split(',') if v.strip()]
        try:
            return [int(v) for v in value]
        except (TypeError, ValueError):
            raise ValidationError(
                _('Expected a list of integers, got %(value)s.'),
                code='invalid_config', params={'value': value}
            )


class FractionListField(forms.Field):

    def to_python(self, value):
        from adorned_tradeoffs.utils import parse_fraction
        if value in self.empty_values:
            return []
        if isinstance(value, str):
            value = [v for v in value.split(',') if v.strip()]
        return [parse_fraction(v) for v in value]
