from django.apps import AppConfig


class MilpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'milp'
    verbose_name = 'MILP instances'
