from django.core.management.base import BaseCommand, CommandError

from bnb.engine import ChildOrder, NodeSelection, SolveConfig, solve
from bnb.forms import SolveForm
from bnb.report import dumps_report
from branching.registry import BRANCHER_HELP, parse_brancher
from core.exceptions import InvalidConfig, NumericalBreakdown, ParseError, PolicyNotFound
from milp.io import read_instance


class Command(BaseCommand):
    help = 'Solves one instance by branch and bound and writes the JSON solve report'

    def add_arguments(self, parser):
        parser.add_argument('--instance', required=True, help='instance file')
        parser.add_argument('--brancher', default='pseudocost', help=BRANCHER_HELP)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--node-selection', default=NodeSelection.BEST_FIRST.value, help='best-first or dfs')
        parser.add_argument('--child-order', default=ChildOrder.LEFT_FIRST.value, help='left-first or right-first')
        parser.add_argument('--objective-limit', type=float, help='initial upper bound, e.g. the known optimum')
        parser.add_argument('--node-limit', type=int)
        parser.add_argument('--time-limit', type=float)
        parser.add_argument('--out', help='report file; printed when omitted')
        parser.add_argument('--timings', action='store_true', help='include wall-clock time in the report')

    def handle(self, *args, **options):
        opts = SolveForm(options).cleaned_or_error()
        try:
            instance = read_instance(opts['instance'])
            config = SolveConfig(
                branching_rule=parse_brancher(opts['brancher']),
                node_selection=NodeSelection(opts['node_selection']),
                objective_limit=opts['objective_limit'],
                node_limit=opts['node_limit'],
                time_limit=opts['time_limit'],
                rng_seed=opts['seed'],
                child_order=ChildOrder(opts['child_order']),
            )
            report = solve(instance, config)
        except (InvalidConfig, ParseError, PolicyNotFound, NumericalBreakdown) as exc:
            raise CommandError(str(exc)) from exc

        text = dumps_report(report, timings=opts['timings'], instance_path=opts['instance'])
        if not opts['out']:
            self.stdout.write(text, ending='')
            return
        with open(opts['out'], 'w') as fh:
            fh.write(text)

        summary = f"{report.instance_name}: {report.status.label}, {report.node_count} nodes"
        if report.obj is not None:
            summary += f", objective {report.obj:.6g}"
        style = self.style.SUCCESS if report.complete else self.style.WARNING
        self.stdout.write(style(summary))
