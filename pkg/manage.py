#!/usr/bin/env python
"""Command-line entry point: ``manage.py <command>`` or ``manage.py test``."""
import os
import sys


def main(argv):
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            'Django is not importable; install requirements.txt into the '
            'active environment first.'
        ) from exc
    from adorned_tradeoffs.conf import settings_module_for
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', settings_module_for(argv))
    execute_from_command_line(argv)


if __name__ == '__main__':
    main(sys.argv)
