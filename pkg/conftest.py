import os

import django

from adorned_tradeoffs.conf import TEST_SETTINGS_MODULE

os.environ.setdefault('DJANGO_SETTINGS_MODULE', TEST_SETTINGS_MODULE)
django.setup()
