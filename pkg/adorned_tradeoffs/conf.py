from django.conf import settings

__all__ = ['DEFAULTS', 'app_setting', 'settings_module_for']

DEFAULTS = {
    'GRID_Q': 8,
    'MAX_ENUMERATION_VARS': 10,
    'ENUMERATION_LIMIT': 64,
    'BOUND_CONSTANT': 8,
    'SIZE_SYMBOL': 'D',
    'BENCH_SAMPLE_REQUESTS': 2000,
}


def app_setting(name):
    """
    Look up a setting in the ADORNED_TRADEOFFS dict, falling back to
    the app defaults.
    """
    overrides = getattr(settings, 'ADORNED_TRADEOFFS', None) or {}
    try:
        return overrides[name]
    except KeyError:
        return DEFAULTS[name]


SETTINGS_MODULE = 'adorned_tradeoffs.settings'
TEST_SETTINGS_MODULE = 'adorned_tradeoffs.tests.test_settings'


def settings_module_for(argv) -> str:
    """``manage.py test`` runs on the test settings."""
    return TEST_SETTINGS_MODULE if argv[1:2] == ['test'] else SETTINGS_MODULE
