import sys

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.forms.tsv import RelationTSVParser
from adorned_tradeoffs.forms.utils import ParserErrorAggregator, raise_collected
from adorned_tradeoffs.management.base import TradeoffCommand
from adorned_tradeoffs.query import intern_request
from adorned_tradeoffs.serialization import load_structure
from adorned_tradeoffs.wcoj import CostMeter


class Command(TradeoffCommand):
    help = (
        'Answer access requests against a saved structure. Requests are read '
        'one per line, bound values separated by tabs in head order.'
    )

    def add_arguments(self, parser):
        parser.add_argument('structure', help='Structure file written by build.')
        parser.add_argument('--requests', metavar='FILE',
                            help='Request file (default: standard input).')
        parser.add_argument('--db', metavar='MANIFEST',
                            help='Read the database from this manifest instead.')
        parser.add_argument('--meter', action='store_true',
                            help='Append the step count of each answer.')
        parser.add_argument('--out', metavar='FILE')

    def read_requests(self, path, arity):
        if path:
            try:
                f = open(path, encoding='utf-8')
            except FileNotFoundError:
                raise ValidationError(
                    _('Request file %(path)s does not exist.'),
                    code='missing_file', params={'path': path}
                )
            source = path
        else:
            f = sys.stdin
            source = '<stdin>'
        try:
            parser = RelationTSVParser(f, arity)
            aggregator = ParserErrorAggregator()
            aggregator.absorb(source, parser)
            raise_collected(aggregator, 'request_arity')
            return parser.parsed_data
        finally:
            if path:
                f.close()

    def run(self, **options):
        built = load_structure(options['structure'], options.get('db'))
        q = built.query
        rows = self.read_requests(options.get('requests'), len(q.bound_vars))
        lines = []
        for raw in rows:
            meter = CostMeter()
            result = built.answer(intern_request(q, built.db, raw), meter)
            cells = list(raw) + ['true' if result else 'false']
            if options['meter']:
                cells.append(str(meter.steps))
            lines.append('\t'.join(cells))
        if options.get('out'):
            with open(options['out'], 'w', encoding='utf-8') as f:
                f.writelines(line + '\n' for line in lines)
        else:
            for line in lines:
                self.stdout.write(line)
