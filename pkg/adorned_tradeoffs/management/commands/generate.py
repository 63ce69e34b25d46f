from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.generators import GENERATORS
from adorned_tradeoffs.management.base import TradeoffCommand
from adorned_tradeoffs.relations import write_database


def _required(options, *names):
    missing = [n for n in names if options.get(n) is None]
    if missing:
        raise ValidationError(
            _('Missing generator parameters: %(names)s.'),
            code='invalid_config',
            params={'names': ', '.join('--' + n.replace('_', '-') for n in missing)}
        )
    return [options[n] for n in names]


class Command(TradeoffCommand):
    help = 'Write a seeded synthetic database (TSV files plus manifest).'

    def add_arguments(self, parser):
        parser.add_argument('generator', choices=sorted(GENERATORS))
        parser.add_argument('--out', required=True, metavar='DIR')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--sets', type=int)
        parser.add_argument('--universe', type=int)
        parser.add_argument('--memberships', type=int)
        parser.add_argument('--skew', choices=('zipf', 'uniform'),
                            default='zipf')
        parser.add_argument('--nodes', type=int)
        parser.add_argument('--edges', type=int)
        parser.add_argument('--k', type=int)
        parser.add_argument('--widths',
                            help='Comma separated layer widths.')
        parser.add_argument('--out-degree', type=int, dest='out_degree',
                            default=2)
        parser.add_argument('--spike', type=int)

    def generate(self, options):
        name = options['generator']
        seed = options['seed']
        if name == 'set-family':
            m, universe, memberships = _required(
                options, 'sets', 'universe', 'memberships'
            )
            return GENERATORS[name](
                m, universe, memberships, seed, options['skew']
            )
        if name == 'layered-path':
            k, widths = _required(options, 'k', 'widths')
            try:
                widths = [int(w) for w in widths.split(',')]
            except ValueError:
                raise ValidationError(
                    _('Layer widths must be integers.'), code='invalid_config'
                )
            return GENERATORS[name](k, widths, seed, options['out_degree'])
        n, m = _required(options, 'nodes', 'edges')
        if name == 'adversarial-heavy':
            return GENERATORS[name](n, m, seed, options.get('spike'))
        return GENERATORS[name](n, m, seed)

    def run(self, **options):
        spec = self.generate(options)
        manifest = write_database(spec, options['out'])
        self.stdout.write(manifest)
