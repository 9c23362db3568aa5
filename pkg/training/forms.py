from django import forms
from django.conf import settings

from core.forms import CommandOptionsForm, DirectoryField, SeedField

from .config import Regime


class TrainForm(CommandOptionsForm):
    regime = forms.ChoiceField(choices=Regime.choices)
    train_dir = DirectoryField()
    valid_dir = DirectoryField(required=False)
    epochs = forms.IntegerField(min_value=0)
    time_limit = forms.FloatField(min_value=0, required=False)
    entropy = forms.FloatField(min_value=0, required=False)
    lr = forms.FloatField(min_value=0, required=False)
    sample_rate = forms.FloatField(min_value=0, max_value=1, required=False)
    instances_per_epoch = forms.IntegerField(min_value=1, required=False)
    seed = SeedField()
    out = forms.CharField()
    log = forms.CharField(required=False)
    eval_interval = forms.IntegerField(min_value=1)
    eval_seeds = forms.IntegerField(min_value=1, required=False)
    baseline = forms.BooleanField(required=False)
    episode_node_limit = forms.IntegerField(min_value=1, required=False)
    workers = forms.IntegerField(min_value=1, required=False)

    def clean(self):
        cleaned = super().clean()
        defaults = settings.TREEBRANCH
        for name, key in (
            ('entropy', 'DEFAULT_ENTROPY'),
            ('lr', 'DEFAULT_LR'),
            ('sample_rate', 'DEFAULT_SAMPLE_RATE'),
            ('instances_per_epoch', 'INSTANCES_PER_EPOCH'),
            ('eval_seeds', 'EVAL_SEEDS'),
            ('workers', 'WORKERS'),
        ):
            if cleaned.get(name) is None:
                cleaned[name] = defaults[key]
        if cleaned.get('lr') == 0:
            self.add_error('lr', "Learning rate must be positive.")
        if cleaned.get('sample_rate') == 0:
            self.add_error('sample_rate', "Sample rate must be positive.")
        if cleaned.get('regime'):
            cleaned['regime'] = Regime(cleaned['regime'])
        return cleaned


class ImitateForm(CommandOptionsForm):
    train_dir = DirectoryField()
    node_cap = forms.IntegerField(min_value=1)
    epochs = forms.IntegerField(min_value=0)
    lr = forms.FloatField(min_value=0)
    batch_size = forms.IntegerField(min_value=1)
    seed = SeedField()
    out = forms.CharField()
    log = forms.CharField(required=False)

    def clean_lr(self):
        if self.cleaned_data['lr'] <= 0:
            raise forms.ValidationError("Learning rate must be positive.")
        return self.cleaned_data['lr']
