from pathlib import Path

from django import forms
from django.core.management.base import CommandError


class CommandOptionsForm(forms.Form):
    """Validates the options a management command was called with.

    Options left at ``None`` are dropped before binding so that optional
    fields clean to ``None`` instead of failing type coercion.
    """

    def __init__(self, options, *args, **kwargs):
        data = {key: value for key, value in options.items() if value is not None}
        super().__init__(data, *args, **kwargs)

    def cleaned_or_error(self):
        if not self.is_valid():
            raise CommandError(self.errors.as_text())
        return self.cleaned_data


class SeedField(forms.IntegerField):
    def __init__(self, **kwargs):
        kwargs.setdefault('min_value', 0)
        kwargs.setdefault('max_value', 2 ** 63 - 1)
        super().__init__(**kwargs)


class DirectoryField(forms.CharField):
    """A path that must name an existing directory."""

    def __init__(self, *, must_exist=True, **kwargs):
        self.must_exist = must_exist
        super().__init__(**kwargs)

    def validate(self, value):
        super().validate(value)
        if value and self.must_exist and not Path(value).is_dir():
            raise forms.ValidationError(f"{value} is not a directory")
