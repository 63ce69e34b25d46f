import json
import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.bench import BoundViolation
from adorned_tradeoffs.families import QUERY_FAMILIES, family_query
from adorned_tradeoffs.query import AdornedQuery, parse_query
from adorned_tradeoffs.utils import parse_fraction

__all__ = ['TradeoffCommand', 'fraction_arg']

# -v 0..3
VERBOSITY_LEVELS = {
    0: logging.ERROR, 1: logging.WARNING, 2: logging.INFO, 3: logging.DEBUG,
}


def fraction_arg(value: str):
    try:
        return parse_fraction(value)
    except ValidationError as e:
        raise ValueError(' '.join(e.messages))


class TradeoffCommand(BaseCommand):
    """
    Validation errors become exit code 2 and failed bound assertions exit
    code 3.
    """

    def add_query_arguments(self, parser, required=True):
        group = parser.add_mutually_exclusive_group(required=required)
        group.add_argument('--query', metavar='FILE',
                           help='File holding the adorned query.')
        group.add_argument('--inline', metavar='QUERY',
                           help='Adorned query text.')
        group.add_argument('--family', choices=sorted(QUERY_FAMILIES),
                           help='Built-in query family.')
        parser.add_argument('--k', type=int,
                            help='Parameter of the k-star and k-path families.')

    def load_query(self, options) -> AdornedQuery:
        if options.get('family'):
            return family_query(options['family'], options.get('k'))
        if options.get('inline'):
            return parse_query(options['inline'])
        path = options['query']
        try:
            with open(path, encoding='utf-8') as f:
                text = f.read()
        except FileNotFoundError:
            raise ValidationError(
                _('Query file %(path)s does not exist.'), code='missing_file',
                params={'path': path}
            )
        except UnicodeDecodeError:
            raise ValidationError(
                _('Query file %(path)s is not valid UTF-8 text.'),
                code='encoding', params={'path': path}
            )
        return parse_query(text.strip())

    def emit_json(self, data, path=None):
        text = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False)
        if path:
            with open(path, 'w', encoding='utf-8') as f:
                f.write(text + '\n')
        else:
            self.stdout.write(text)

    def handle(self, *args, **options):
        level = VERBOSITY_LEVELS.get(options.get('verbosity', 1), logging.DEBUG)
        logging.getLogger('adorned_tradeoffs').setLevel(level)
        try:
            return self.run(**options)
        except ValidationError as e:
            raise CommandError('; '.join(e.messages), returncode=2)
        except BoundViolation as e:
            raise CommandError(str(e), returncode=3)

    def run(self, **options):
        raise NotImplementedError
