from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.decompositions import load_decomposition
from adorned_tradeoffs.forms.config import BuildOptionsForm, errors_of
from adorned_tradeoffs.management.base import TradeoffCommand
from adorned_tradeoffs.relations import load_database
from adorned_tradeoffs.serialization import write_structure
from adorned_tradeoffs.strategies import STRATEGIES, build_strategy


class Command(TradeoffCommand):
    help = 'Build an answering structure over a database and save it.'

    def add_arguments(self, parser):
        self.add_query_arguments(parser)
        parser.add_argument('--db', required=True, metavar='MANIFEST',
                            help='Database manifest.')
        parser.add_argument('--strategy', choices=STRATEGIES,
                            default='adstruct')
        parser.add_argument('--decomposition', metavar='FILE',
                            help='Decomposition JSON for the decomp strategy.')
        parser.add_argument('--threshold')
        parser.add_argument('--time-exponent', dest='time_exponent')
        parser.add_argument('--delta')
        parser.add_argument('--grid-q', dest='grid_q')
        parser.add_argument('--out', required=True, metavar='FILE')

    def clean_options(self, options) -> dict:
        form = BuildOptionsForm(data={
            key: options.get(key) for key in (
                'strategy', 'threshold', 'time_exponent', 'delta', 'grid_q',
            ) if options.get(key) is not None
        })
        if not form.is_valid():
            raise errors_of(form)
        return form.cleaned_data

    def run(self, **options):
        cleaned = self.clean_options(options)
        q = self.load_query(options)
        decomposition = None
        if options.get('decomposition'):
            if cleaned['strategy'] != 'decomp':
                raise ValidationError(
                    _('A decomposition file only applies to the decomp '
                      'strategy.'), code='strategy_mismatch'
                )
            decomposition = load_decomposition(options['decomposition'])
        db = load_database(options['db'])
        built = build_strategy(
            cleaned['strategy'], q, db, threshold=cleaned.get('threshold'),
            time_exponent=cleaned.get('time_exponent'),
            delta=cleaned.get('delta'), decomposition=decomposition,
            grid_q=cleaned.get('grid_q'),
        )
        write_structure(built, options['db'], options['out'])
        self.emit_json(built.summary())
