from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from django.db import transaction

from core.exceptions import InvalidConfig
from instances.forms import GenerateForm
from instances.generators import GenConfig, generate
from instances.manifest import Manifest, ManifestEntry, write_manifest
from instances.models import InstanceRecord
from milp.io import write_instance


class Command(BaseCommand):
    help = 'Generates seeded benchmark instances and a manifest listing their seeds'

    def add_arguments(self, parser):
        parser.add_argument('--family', required=True, help='cauctions, setcover, indset, facilities or knapsack')
        parser.add_argument('--count', type=int, default=20)
        parser.add_argument('--seed', type=int, default=0, help='seed of the first instance; the rest follow consecutively')
        parser.add_argument('--preset', default='desk', help='size preset: tiny, desk, train or transfer')
        parser.add_argument('--size', help='size overrides, e.g. items=60,sets=120')
        parser.add_argument('--out', required=True, help='output directory')

    def handle(self, *args, **options):
        opts = GenerateForm(options).cleaned_or_error()
        out = Path(opts['out'])
        out.mkdir(parents=True, exist_ok=True)

        manifest = Manifest(family=opts['family'].value, size_params=opts['size_params'])
        self.stdout.write(f"Generating {opts['count']} {opts['family'].label} instances into {out}...")
        with transaction.atomic():
            for k in range(opts['count']):
                seed = opts['seed'] + k
                try:
                    instance = generate(GenConfig(opts['family'], opts['size_params'], seed))
                except InvalidConfig as exc:
                    raise CommandError(str(exc)) from exc
                filename = f"{instance.name}.json"
                write_instance(instance, out / filename)
                manifest.entries.append(ManifestEntry(file=filename, seed=seed))
                InstanceRecord.objects.update_or_create(
                    path=str((out / filename).resolve()),
                    defaults={
                        'name': instance.name,
                        'family': opts['family'],
                        'size_params': opts['size_params'],
                        'seed': seed,
                        'optimal_value': None,
                    },
                )
            write_manifest(manifest, out)

        self.stdout.write(self.style.SUCCESS(f"Wrote {opts['count']} instances and {out / 'manifest.json'}"))
