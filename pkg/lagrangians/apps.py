from django.apps import AppConfig


class LagrangiansConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'lagrangians'
