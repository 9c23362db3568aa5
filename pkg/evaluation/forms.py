from django import forms
from django.conf import settings

from core.forms import CommandOptionsForm, DirectoryField, SeedField


class EvaluateForm(CommandOptionsForm):
    instance_dir = DirectoryField()
    methods = forms.CharField(help_text="comma-separated brancher specs")
    seeds = forms.IntegerField(min_value=1, required=False)
    time_limit = forms.FloatField(min_value=0, required=False)
    seed = SeedField()
    out = DirectoryField(must_exist=False, required=False)
    workers = forms.IntegerField(min_value=1, required=False)

    def clean_methods(self):
        methods = [m.strip() for m in self.cleaned_data['methods'].split(',') if m.strip()]
        if not methods:
            raise forms.ValidationError("Name at least one method.")
        if len(set(methods)) != len(methods):
            raise forms.ValidationError("Methods must be distinct.")
        return methods

    def clean(self):
        cleaned = super().clean()
        if cleaned.get('seeds') is None:
            cleaned['seeds'] = settings.TREEBRANCH['EVAL_SEEDS']
        if cleaned.get('time_limit') is None:
            cleaned['time_limit'] = settings.TREEBRANCH['EVAL_TIME_LIMIT']
        if cleaned.get('workers') is None:
            cleaned['workers'] = settings.TREEBRANCH['WORKERS']
        if not cleaned.get('out'):
            cleaned['out'] = settings.TREEBRANCH['REPORT_DIR']
        return cleaned
