from django.apps import AppConfig


class BnbConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'bnb'
    verbose_name = 'Branch and bound'
