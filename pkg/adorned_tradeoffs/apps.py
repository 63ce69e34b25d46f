from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class AdornedTradeoffsConfig(AppConfig):
    name = 'adorned_tradeoffs'
    verbose_name = _('Space/time tradeoffs for Boolean adorned queries')
