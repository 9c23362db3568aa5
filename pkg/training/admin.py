from django.contrib import admin

from .models import EpochRecord, TrainingRun


class EpochRecordInline(admin.TabularInline):
    model = EpochRecord
    extra = 0
    fields = ('epoch', 'samples_cumulative', 'mean_episode_nodes', 'loss', 'validation_gmean')
    readonly_fields = fields


@admin.register(TrainingRun)
class TrainingRunAdmin(admin.ModelAdmin):
    list_display = ('kind', 'regime', 'seed', 'status', 'best_validation', 'created_at')
    list_filter = ('kind', 'regime', 'status')
    search_fields = ('train_dir', 'policy_path')
    inlines = [EpochRecordInline]


@admin.register(EpochRecord)
class EpochRecordAdmin(admin.ModelAdmin):
    list_display = ('run', 'epoch', 'samples_cumulative', 'mean_episode_nodes', 'loss', 'validation_gmean')
    list_filter = ('run__regime',)
