from django import forms
from django.core.exceptions import ValidationError
from django.core.validators import RegexValidator
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.forms.utils import (
    FractionField, IntegerListField, FractionListField,
)

__all__ = [
    'IDENTIFIER_PATTERN', 'identifier_validator', 'ManifestRelationForm',
    'BenchConfigForm', 'BENCH_FAMILIES', 'NEGATED_FAMILIES', 'STRATEGY_CHOICES',
    'THRESHOLD_STRATEGIES', 'PATH_STRATEGIES', 'BuildOptionsForm',
    'form_errors_to_validation_error', 'errors_of',
]

IDENTIFIER_PATTERN = r'[A-Za-z0-9_]+'

identifier_validator = RegexValidator(
    regex=r'^%s\Z' % IDENTIFIER_PATTERN,
    message=_('Identifiers may only contain ASCII letters, digits and '
              'underscores.'),
    code='syntax',
)


def form_errors_to_validation_error(form, code):
    return ValidationError([
        ValidationError(
            _('%(field)s: %(msg)s'), code=code,
            params={'field': field, 'msg': msg}
        )
        for field, msgs in form.errors.items() for msg in msgs
    ])


class VariableListField(forms.Field):

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if not isinstance(value, (list, tuple)):
            raise ValidationError(
                _('Expected a list of variable names.'), code='bad_manifest'
            )
        return [str(v) for v in value]

    def validate(self, value):
        super().validate(value)
        for v in value:
            identifier_validator(v)


class ManifestRelationForm(forms.Form):
    """
    One entry of the "relations" list in a database manifest.
    """
    name = forms.CharField(validators=[identifier_validator])
    vars = VariableListField()
    file = forms.CharField()


BENCH_FAMILIES = (
    ('k-star', _('k-set disjointness / k-star')),
    ('k-path', _('k-path reachability')),
    ('triangle', _('edge triangle detection')),
    ('square', _('edge square detection')),
    ('opposite-square', _('opposite corners of a square')),
    ('negated-path', _('5-path with two negated edges')),
    ('open-triangle', _('triangle with a negated edge')),
    ('custom', _('custom query file')),
)

# families whose query has negated atoms
NEGATED_FAMILIES = ('negated-path', 'open-triangle')

STRATEGY_CHOICES = (
    ('adstruct', _('heavy/light answer index')),
    ('decomp', _('budgeted tree decomposition')),
    ('negation', _('decomposition with negation leaves')),
    ('path', _('recursive heavy/light path structure')),
    ('bfs', _('breadth-first search')),
)

THRESHOLD_STRATEGIES = ('adstruct', 'decomp', 'negation')
PATH_STRATEGIES = ('path', 'bfs')


class StrategyListField(forms.MultipleChoiceField):
    """Accepts a list of strategies or a comma separated string."""

    def to_python(self, value):
        if isinstance(value, str):
            value = [v.strip() for v in value.split(',') if v.strip()]
        return super().to_python(value)


class BenchConfigForm(forms.Form):
    family = forms.ChoiceField(choices=BENCH_FAMILIES)
    k = forms.IntegerField(min_value=2, required=False)
    strategies = StrategyListField(choices=STRATEGY_CHOICES, required=False)
    query = forms.CharField(required=False)
    sizes = IntegerListField()
    thresholds = IntegerListField(required=False)
    time_exponents = FractionListField(required=False)
    deltas = IntegerListField(required=False)
    seeds = IntegerListField()
    sets = forms.IntegerField(min_value=1, required=False)
    universe = forms.IntegerField(min_value=1, required=False)
    skew = forms.ChoiceField(
        choices=(('zipf', 'zipf'), ('uniform', 'uniform')), required=False
    )
    nodes = forms.IntegerField(min_value=2, required=False)
    adversarial = forms.BooleanField(required=False)
    sample_requests = forms.IntegerField(min_value=1, required=False)
    jobs = forms.IntegerField(min_value=1, required=False)
    timing = forms.BooleanField(required=False)
    output = forms.CharField(required=False)

    def clean_sizes(self):
        sizes = self.cleaned_data['sizes']
        if not sizes or any(s <= 0 for s in sizes):
            raise ValidationError(
                _('The size grid must be a non-empty list of positive '
                  'integers.'), code='invalid_config'
            )
        return sizes

    def clean_seeds(self):
        seeds = self.cleaned_data['seeds']
        if not seeds:
            raise ValidationError(
                _('At least one seed is required.'), code='invalid_config'
            )
        return seeds

    def clean(self):
        cleaned = super().clean()
        family = cleaned.get('family')
        negated = family in NEGATED_FAMILIES
        strategies = cleaned.get('strategies') or (
            ['negation'] if negated else ['adstruct']
        )
        cleaned['strategies'] = strategies
        if family in ('k-star', 'k-path') and cleaned.get('k') is None:
            raise ValidationError(
                _('Family %(family)s needs k.'), code='invalid_config',
                params={'family': family}
            )
        if 'path' in strategies and not cleaned.get('deltas'):
            raise ValidationError(
                _('The path strategy needs a non-empty delta grid.'),
                code='invalid_config'
            )
        if any(s in THRESHOLD_STRATEGIES for s in strategies) and not (
                cleaned.get('thresholds') or cleaned.get('time_exponents')):
            raise ValidationError(
                _('A non-empty threshold or time exponent grid is required.'),
                code='invalid_config'
            )
        if family == 'custom' and not cleaned.get('query'):
            raise ValidationError(
                _('The custom family needs a query.'), code='invalid_config'
            )
        for strategy in strategies:
            if negated and strategy != 'negation':
                raise ValidationError(
                    _('Family %(family)s has negated atoms and needs the '
                      'negation strategy, not %(strategy)s.'),
                    code='strategy_mismatch',
                    params={'family': family, 'strategy': strategy}
                )
            if strategy in PATH_STRATEGIES and family not in ('k-path', 'custom'):
                raise ValidationError(
                    _('Strategy %(strategy)s only applies to path queries.'),
                    code='strategy_mismatch', params={'strategy': strategy}
                )
        return cleaned


class BuildOptionsForm(forms.Form):
    strategy = forms.ChoiceField(choices=STRATEGY_CHOICES)
    threshold = forms.IntegerField(min_value=0, required=False)
    time_exponent = FractionField(required=False)
    delta = forms.IntegerField(min_value=1, required=False)
    grid_q = forms.IntegerField(min_value=1, required=False)

    def clean_time_exponent(self):
        value = self.cleaned_data['time_exponent']
        if value is not None and value < 0:
            raise ValidationError(
                _('The time exponent must be non-negative.'),
                code='invalid_config'
            )
        return value


def errors_of(form) -> ValidationError:
    """All errors of an invalid form, keeping their codes."""
    return ValidationError([
        e for errors in form.errors.as_data().values() for e in errors
    ])
