from django.apps import AppConfig


class LpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'lp'
    verbose_name = 'LP relaxation solver'
