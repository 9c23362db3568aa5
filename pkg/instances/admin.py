from django.contrib import admin

from .models import InstanceRecord


@admin.register(InstanceRecord)
class InstanceRecordAdmin(admin.ModelAdmin):
    list_display = ('name', 'family', 'seed', 'optimal_value', 'created_at')
    list_filter = ('family',)
    search_fields = ('name', 'path')
