from django.apps import AppConfig


class HamiltonJacobiConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'hamilton_jacobi'
