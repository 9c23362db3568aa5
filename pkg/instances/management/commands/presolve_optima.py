from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from django.db import transaction

from bnb.engine import NodeSelection, SolveConfig, SolveStatus, solve
from branching.rules import StrongBranchingRule
from core.exceptions import NumericalBreakdown, ParseError
from instances.forms import PresolveForm
from instances.manifest import read_manifest, write_manifest
from instances.models import InstanceRecord
from milp.io import read_instance


class Command(BaseCommand):
    help = 'Solves every instance of a directory with strong branching and stores the optima in its manifest'

    def add_arguments(self, parser):
        parser.add_argument('--instance-dir', required=True)
        parser.add_argument('--node-limit', type=int, help='give up on an instance after this many nodes')

    def handle(self, *args, **options):
        opts = PresolveForm(options).cleaned_or_error()
        directory = Path(opts['instance_dir'])
        try:
            manifest = read_manifest(directory)
        except ParseError as exc:
            raise CommandError(str(exc)) from exc

        solved = 0
        for entry in manifest.entries:
            path = directory / entry.file
            try:
                instance = read_instance(path)
                report = solve(instance, SolveConfig(
                    branching_rule=StrongBranchingRule(),
                    node_selection=NodeSelection.BEST_FIRST,
                    node_limit=opts['node_limit'],
                    rng_seed=entry.seed or 0,
                ))
            except ParseError as exc:
                raise CommandError(str(exc)) from exc
            except NumericalBreakdown as exc:
                self.stdout.write(self.style.WARNING(f"{entry.file}: LP breakdown ({exc}), optimum left unset"))
                continue
            if report.status != SolveStatus.OPTIMAL:
                self.stdout.write(self.style.WARNING(f"{entry.file}: {report.status.label}, optimum left unset"))
                continue
            entry.optimum = report.obj
            solved += 1
            self.stdout.write(f"{entry.file}: {report.obj:.6g} ({report.node_count} nodes)")

        with transaction.atomic():
            write_manifest(manifest, directory)
            for entry in manifest.entries:
                InstanceRecord.objects.filter(path=str((directory / entry.file).resolve())).update(
                    optimal_value=entry.optimum,
                )

        message = f"Stored optima for {solved} of {len(manifest.entries)} instances"
        style = self.style.SUCCESS if solved == len(manifest.entries) else self.style.WARNING
        self.stdout.write(style(message))
