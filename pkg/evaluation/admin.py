from django.contrib import admin

from .models import EvalRun, Evaluation


@admin.register(Evaluation)
class EvaluationAdmin(admin.ModelAdmin):
    list_display = ('instance_dir', 'n_seeds', 'time_limit', 'seed', 'created_at')
    search_fields = ('instance_dir',)


@admin.register(EvalRun)
class EvalRunAdmin(admin.ModelAdmin):
    list_display = ('evaluation', 'instance', 'seed', 'method', 'node_count', 'wall_time', 'finished')
    list_filter = ('method', 'finished', 'status')
    search_fields = ('instance',)
