from django.apps import AppConfig


class TreeMdpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'treemdp'
    verbose_name = 'Tree MDP episodes and returns'
