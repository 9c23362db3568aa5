from django.core.management.base import BaseCommand, CommandError

from core.exceptions import DepthCapExceeded, InvalidConfig
from treemdp.gradient_suite import exceedance_summary, run_suite, variance_diagnostic


class Command(BaseCommand):
    help = 'Checks the tree and temporal policy-gradient estimators against exact gradients on synthetic tree MDPs'

    def add_arguments(self, parser):
        parser.add_argument('--mdps', type=int, default=20)
        parser.add_argument('--episodes', type=int, default=200_000)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--rel-tol', type=float, default=0.05, help='relative L2 tolerance')
        parser.add_argument(
            '--z-max', type=float, default=None,
            help='componentwise standard-error tolerance (default: Bonferroni bound over all comparisons)',
        )
        parser.add_argument('--skip-variance', action='store_true')

    def handle(self, *args, **options):
        if options['mdps'] < 1 or options['episodes'] < 2:
            raise CommandError("--mdps must be at least 1 and --episodes at least 2")
        try:
            results = run_suite(
                options['mdps'], options['episodes'], options['seed'], options['rel_tol'], options['z_max'],
            )
        except (DepthCapExceeded, InvalidConfig) as exc:
            raise CommandError(str(exc)) from exc

        for result in results:
            cells = ', '.join(
                f"{check.estimator}: rel {check.relative_error:.3f} z {check.max_z:.2f}" for check in result.estimators
            )
            line = f"MDP {result.index:2d} depth {result.depth}: exact {result.exact_agreement:.1e}; {cells}"
            self.stdout.write(line if result.passed else self.style.ERROR(line))

        observed, expected = exceedance_summary(results)
        self.stdout.write(f"Components beyond 3 standard errors: {observed} (expected by chance {expected:.1f})")

        if not options['skip_variance']:
            variances = variance_diagnostic(seed=options['seed'])
            self.stdout.write(
                "Estimator variance on the nine-node tree: "
                + ', '.join(f"{name} {value:.4g}" for name, value in variances.items())
            )

        failed = [r.index for r in results if not r.passed]
        if failed:
            raise CommandError(f"{len(failed)} of {len(results)} MDPs failed: {', '.join(map(str, failed))}")
        self.stdout.write(self.style.SUCCESS(f"All {len(results)} MDPs passed"))
