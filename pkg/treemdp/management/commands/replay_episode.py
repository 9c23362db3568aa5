from django.core.management.base import BaseCommand, CommandError

from bnb.report import read_report
from core.exceptions import InvalidConfig, NumericalBreakdown, ParseError, PolicyNotFound
from treemdp.replay import render_tree, replay


class Command(BaseCommand):
    help = 'Re-solves a saved report and checks the processed tree reproduces, or prints the recorded tree'

    def add_arguments(self, parser):
        parser.add_argument('--report', required=True, help='solve report written by the solve command')
        parser.add_argument('--show', action='store_true', help='print the recorded tree instead of replaying')

    def handle(self, *args, **options):
        try:
            payload = read_report(options['report'])
        except (ParseError, OSError) as exc:
            raise CommandError(str(exc)) from exc

        if options['show']:
            for line in render_tree(payload):
                self.stdout.write(line)
            return

        try:
            result = replay(payload)
        except (InvalidConfig, ParseError, PolicyNotFound, NumericalBreakdown) as exc:
            raise CommandError(str(exc)) from exc
        if not result.matches:
            raise CommandError(
                f"Replay diverged at processing step {result.first_difference} "
                f"({result.recorded_nodes} recorded nodes, {result.replayed_nodes} replayed)"
            )
        self.stdout.write(self.style.SUCCESS(f"Replay reproduced all {result.recorded_nodes} nodes"))
