# Standalone settings for running the management commands through manage.py.
SECRET_KEY = 'adorned-tradeoffs-cli'

DEBUG = False

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'

INSTALLED_APPS = [
    'adorned_tradeoffs',
]

# the app never touches the ORM
DATABASES = {}

USE_TZ = True

ADORNED_TRADEOFFS = {
    'GRID_Q': 8,
    'BOUND_CONSTANT': 8,
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'adorned_tradeoffs': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
    },
}
