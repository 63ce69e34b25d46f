default_app_config = 'adorned_tradeoffs.apps.AdornedTradeoffsConfig'
