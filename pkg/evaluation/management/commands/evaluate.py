from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from django.db import transaction

from branching.registry import BRANCHER_HELP
from core.exceptions import InvalidConfig, ParseError, PolicyNotFound
from evaluation.forms import EvaluateForm
from evaluation.aggregate import BREAKDOWN_STATUS
from evaluation.harness import evaluate
from evaluation.models import EvalRun, Evaluation
from instances.manifest import load_instance_set


class Command(BaseCommand):
    help = 'Solves an instance set with several branching rules and writes CSV and Markdown reports'

    def add_arguments(self, parser):
        parser.add_argument('--instance-dir', required=True)
        parser.add_argument('--methods', required=True, help=f'comma-separated list of: {BRANCHER_HELP}')
        parser.add_argument('--seeds', type=int, help='solver seeds per instance')
        parser.add_argument('--time-limit', type=float, help='seconds per run')
        parser.add_argument('--seed', type=int, default=0, help='master seed')
        parser.add_argument('--out', help='report directory')
        parser.add_argument('--workers', type=int)

    def handle(self, *args, **options):
        opts = EvaluateForm(options).cleaned_or_error()
        try:
            instances = [item.instance for item in load_instance_set(opts['instance_dir'])]
            report = evaluate(
                opts['methods'], instances, opts['seeds'],
                time_limit=opts['time_limit'] or None, seed=opts['seed'], workers=opts['workers'],
            )
        except (InvalidConfig, ParseError, PolicyNotFound) as exc:
            raise CommandError(str(exc)) from exc

        out = Path(opts['out'])
        out.mkdir(parents=True, exist_ok=True)
        csv_path, md_path = out / 'evaluation.csv', out / 'evaluation.md'
        report.write_csv(csv_path)
        markdown = report.render_markdown()
        md_path.write_text(markdown)

        with transaction.atomic():
            evaluation = Evaluation.objects.create(
                instance_dir=opts['instance_dir'],
                methods=opts['methods'],
                n_seeds=opts['seeds'],
                time_limit=opts['time_limit'] or None,
                seed=opts['seed'],
                csv_path=str(csv_path.resolve()),
                markdown_path=str(md_path.resolve()),
            )
            EvalRun.objects.bulk_create([EvalRun(evaluation=evaluation, **run._asdict()) for run in report.runs])

        self.stdout.write(markdown)
        breakdowns = sum(1 for run in report.runs if run.status == BREAKDOWN_STATUS)
        timeouts = sum(1 for run in report.runs if not run.finished) - breakdowns
        if timeouts:
            self.stdout.write(self.style.WARNING(f"{timeouts} runs hit the time limit"))
        if breakdowns:
            self.stdout.write(self.style.WARNING(f"{breakdowns} runs were abandoned after an LP breakdown"))
        self.stdout.write(self.style.SUCCESS(f"Wrote {csv_path} and {md_path}"))
