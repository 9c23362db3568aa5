from pathlib import Path

from django import forms

from core.forms import CommandOptionsForm, SeedField

from .engine import ChildOrder, NodeSelection


class SolveForm(CommandOptionsForm):
    instance = forms.CharField()
    brancher = forms.CharField()
    seed = SeedField()
    node_selection = forms.ChoiceField(choices=NodeSelection.choices)
    child_order = forms.ChoiceField(choices=ChildOrder.choices)
    objective_limit = forms.FloatField(required=False)
    node_limit = forms.IntegerField(min_value=1, required=False)
    time_limit = forms.FloatField(min_value=0, required=False)
    out = forms.CharField(required=False)
    timings = forms.BooleanField(required=False)

    def clean_instance(self):
        path = self.cleaned_data['instance']
        if not Path(path).is_file():
            raise forms.ValidationError(f"{path} is not a file")
        return path

    def clean_time_limit(self):
        value = self.cleaned_data.get('time_limit')
        if value == 0:
            raise forms.ValidationError("Time limit must be positive.")
        return value
