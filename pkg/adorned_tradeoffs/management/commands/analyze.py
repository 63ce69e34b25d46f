from fractions import Fraction

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.analysis import analyze
from adorned_tradeoffs.management.base import TradeoffCommand, fraction_arg


def parse_sizes(value):
    sizes = {}
    if not value:
        return sizes
    for part in value.split(','):
        name, sep, size = part.partition('=')
        try:
            if not sep:
                raise ValueError
            sizes[name.strip()] = int(size)
        except ValueError:
            raise ValidationError(
                _('Cannot parse relation size %(part)r; expected NAME=SIZE.'),
                code='invalid_config', params={'part': part}
            )
    return sizes


class Command(TradeoffCommand):
    help = (
        'Print the cover numbers, space/time tradeoffs and decomposition '
        'profiles of an adorned query as JSON.'
    )

    def add_arguments(self, parser):
        self.add_query_arguments(parser)
        parser.add_argument(
            '--sizes', help='Relation sizes as NAME=SIZE,... (default: all '
                            'relations have size |D|).'
        )
        parser.add_argument('--grid-q', type=int, dest='grid_q')
        parser.add_argument(
            '--time-exponent', type=fraction_arg, dest='time_exponent',
            default=Fraction(1, 2),
            help='Time exponent used to pick a path strategy.'
        )
        parser.add_argument('--out', help='Write the report to this file.')

    def run(self, **options):
        q = self.load_query(options)
        report = analyze(
            q, sizes=parse_sizes(options.get('sizes')),
            grid_q=options.get('grid_q'),
            time_exponent=options['time_exponent'],
        )
        self.emit_json(report, options.get('out'))
