from django import forms

from core.forms import CommandOptionsForm, DirectoryField, SeedField

from .generators import PARAM_NAMES, SIZE_PRESETS
from .models import Family


def parse_size(text):
    """``"items=60,sets=120"`` -> ``{'items': 60, 'sets': 120}``."""
    sizes = {}
    for part in filter(None, (p.strip() for p in text.split(','))):
        key, sep, value = part.partition('=')
        if not sep:
            raise forms.ValidationError(f"'{part}' is not of the form name=value")
        try:
            sizes[key.strip()] = int(value)
        except ValueError:
            raise forms.ValidationError(f"'{value}' is not an integer") from None
    return sizes


class GenerateForm(CommandOptionsForm):
    family = forms.ChoiceField(choices=Family.choices)
    count = forms.IntegerField(min_value=1)
    seed = SeedField()
    preset = forms.ChoiceField(choices=[(name, name) for name in SIZE_PRESETS])
    size = forms.CharField(required=False)
    out = DirectoryField(must_exist=False)

    def clean(self):
        cleaned = super().clean()
        family, preset = cleaned.get('family'), cleaned.get('preset')
        if family is None or preset is None:
            return cleaned
        family = Family(family)
        sizes = dict(SIZE_PRESETS[preset][family])
        if cleaned.get('size'):
            overrides = parse_size(cleaned['size'])
            unknown = set(overrides) - set(PARAM_NAMES[family])
            if unknown:
                raise forms.ValidationError(
                    f"{family.value} takes {', '.join(PARAM_NAMES[family])}, not {', '.join(sorted(unknown))}"
                )
            sizes.update(overrides)
        cleaned['family'] = family
        cleaned['size_params'] = sizes
        return cleaned


class PresolveForm(CommandOptionsForm):
    instance_dir = DirectoryField()
    node_limit = forms.IntegerField(min_value=1, required=False)
