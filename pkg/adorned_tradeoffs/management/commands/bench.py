import json

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.bench import (
    check_bounds, clean_bench_config, fit_slopes, plot_data, run_bench,
    write_rows,
)
from adorned_tradeoffs.forms.config import BENCH_FAMILIES, STRATEGY_CHOICES
from adorned_tradeoffs.management.base import TradeoffCommand

# options that map one-to-one onto configuration keys
CONFIG_OPTIONS = (
    'family', 'k', 'sizes', 'thresholds', 'time_exponents', 'deltas', 'seeds',
    'sets', 'universe', 'skew', 'nodes', 'sample_requests', 'jobs',
)


class Command(TradeoffCommand):
    help = (
        'Sweep build budgets over synthetic instances and write one CSV row '
        'per grid point. Exits with status 3 when an asserted bound fails.'
    )

    def add_arguments(self, parser):
        parser.add_argument('--config', metavar='FILE',
                            help='JSON configuration; options override it.')
        parser.add_argument('--family', choices=[c for c, _l in BENCH_FAMILIES])
        parser.add_argument('--k', type=int)
        parser.add_argument('--strategy', action='append', dest='strategies',
                            choices=[c for c, _l in STRATEGY_CHOICES])
        parser.add_argument('--query', metavar='FILE',
                            help='Query file for the custom family.')
        parser.add_argument('--inline', metavar='QUERY',
                            help='Query text for the custom family.')
        parser.add_argument('--sizes', help='Comma separated sizes.')
        parser.add_argument('--thresholds')
        parser.add_argument('--time-exponents', dest='time_exponents')
        parser.add_argument('--deltas')
        parser.add_argument('--seeds')
        parser.add_argument('--sets', type=int)
        parser.add_argument('--universe', type=int)
        parser.add_argument('--skew', choices=('zipf', 'uniform'))
        parser.add_argument('--nodes', type=int)
        parser.add_argument('--adversarial', action='store_true', default=None)
        parser.add_argument('--sample-requests', type=int,
                            dest='sample_requests')
        parser.add_argument('--jobs', type=int)
        parser.add_argument('--timing', action='store_true', default=None,
                            help='Add a wall-clock build_millis column.')
        parser.add_argument('--bound-constant', type=float,
                            dest='bound_constant')
        parser.add_argument('--out', metavar='FILE', help='CSV output file.')
        parser.add_argument('--plot', metavar='FILE',
                            help='Write log-log plot series as JSON.')

    def load_config(self, options) -> dict:
        data = {}
        if options.get('config'):
            try:
                with open(options['config'], encoding='utf-8') as f:
                    data = json.load(f)
            except FileNotFoundError:
                raise ValidationError(
                    _('Configuration file %(path)s does not exist.'),
                    code='missing_file', params={'path': options['config']}
                )
            except (json.JSONDecodeError, UnicodeDecodeError) as e:
                raise ValidationError(
                    _('Configuration file %(path)s is not valid JSON: '
                      '%(err)s'), code='invalid_config',
                    params={'path': options['config'], 'err': e}
                )
            if not isinstance(data, dict):
                raise ValidationError(
                    _('The configuration must be a JSON object.'),
                    code='invalid_config'
                )
        for key in CONFIG_OPTIONS + ('strategies', 'adversarial', 'timing'):
            if options.get(key) is not None:
                data[key] = options[key]
        if options.get('inline'):
            data['query'] = options['inline']
        elif options.get('query'):
            data['query'] = str(self.load_query({'query': options['query']}))
        if options.get('out'):
            data['output'] = options['out']
        return clean_bench_config(data)

    def run(self, **options):
        config = self.load_config(options)
        rows = run_bench(config)
        output = config.get('output')
        if output:
            with open(output, 'w', encoding='utf-8', newline='') as f:
                write_rows(f, rows, config.get('timing'))
        else:
            write_rows(self.stdout, rows, config.get('timing'))
        if options.get('plot'):
            self.emit_json(plot_data(rows), options['plot'])
        if options['verbosity'] >= 1:
            for key, slope in sorted(fit_slopes(rows).items()):
                family, k, strategy, size = key
                self.stderr.write(
                    'slope %s k=%s %s |D|=%d: %s' % (
                        family, k or '-', strategy, size,
                        'n/a' if slope is None else '%.3f' % slope
                    )
                )
        check_bounds(rows, options.get('bound_constant'))
