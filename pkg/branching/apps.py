from django.apps import AppConfig


class BranchingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'branching'
    verbose_name = 'Branching rules'
