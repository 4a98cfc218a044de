from django.apps import AppConfig


class QuasiclassicsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'quasiclassics'
