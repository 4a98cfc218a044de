from django.apps import AppConfig


class LegendreConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'legendre'
