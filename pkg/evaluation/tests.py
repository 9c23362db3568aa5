import csv
import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.contrib.auth.models import User
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse

from bnb.runs import realistic_run
from branching.rules import PolicyRule, RandomRule
from core.exceptions import InvalidConfig, NumericalBreakdown, PolicyNotFound
from instances.generators import SIZE_PRESETS, GenConfig, generate
from instances.models import Family
from policy.network import PolicyParams
from policy.storage import save_policy

from .aggregate import BREAKDOWN_STATUS, RunRecord, complete_pairs, geometric_mean, per_instance_std_pct, summarize
from .harness import CSV_COLUMNS, CSV_SCHEMA_VERSION, evaluate, evaluation_rule, method_label
from .models import EvalRun, Evaluation


def run(instance, seed, method, nodes, finished=True):
    return RunRecord(instance, seed, method, nodes, 0.5, finished, 'optimal' if finished else 'time_limit')


class AggregateTest(SimpleTestCase):

    def test_geometric_mean(self):
        self.assertAlmostEqual(geometric_mean([8, 2]), 4.0)
        self.assertAlmostEqual(geometric_mean([10, 1000]), 100.0)
        self.assertTrue(math.isnan(geometric_mean([])))

    def test_timeout_removes_the_pair_for_every_method(self):
        runs = [
            run('a', 0, 'strong', 10), run('a', 0, 'random', 40),
            run('a', 1, 'strong', 12), run('a', 1, 'random', 1000, finished=False),
            run('b', 0, 'strong', 20), run('b', 0, 'random', 80),
        ]
        self.assertEqual(complete_pairs(runs, ['strong', 'random']), {('a', 0), ('b', 0)})
        strong, random = summarize(runs, ['strong', 'random'])
        self.assertEqual(strong.runs, 2)
        self.assertAlmostEqual(strong.gmean_nodes, math.sqrt(10 * 20))
        self.assertAlmostEqual(random.gmean_nodes, math.sqrt(40 * 80))
        self.assertEqual((strong.timeouts, random.timeouts), (0, 1))

    def test_identical_runs_have_no_spread(self):
        self.assertEqual(per_instance_std_pct({'a': [7, 7, 7], 'b': [3, 3]}), 0.0)

    def test_spread_is_averaged_over_instances(self):
        # std of (1, 3) is 1 around a mean of 2, so 50 %
        self.assertAlmostEqual(per_instance_std_pct({'a': [1, 3], 'b': [5, 5]}), 25.0)


class HarnessTest(SimpleTestCase):

    def setUp(self):
        self.instances = [
            generate(GenConfig(Family.MAX_INDEP_SET, SIZE_PRESETS['tiny'][Family.MAX_INDEP_SET], seed))
            for seed in range(2)
        ]

    def test_method_labels(self):
        self.assertEqual(method_label('pseudocost'), 'pseudocost (reliability)')
        self.assertEqual(method_label('pseudocost:8'), 'pseudocost (reliability)')
        self.assertEqual(method_label('strong'), 'strong branching')
        self.assertEqual(method_label('policy:runs/objlim.npz'), 'policy (objlim)')
        self.assertEqual(method_label('random'), 'random')

    def test_policies_are_evaluated_greedily(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'p.npz'
            save_policy(PolicyParams.initial(0), path)
            rule = evaluation_rule(f'policy:{path}')
        self.assertIsInstance(rule, PolicyRule)
        self.assertTrue(rule.greedy)

    def test_cross_product(self):
        report = evaluate(['random', 'strong'], self.instances, n_seeds=2, seed=3)
        self.assertEqual(len(report.runs), 2 * 2 * 2)
        self.assertTrue(all(r.finished for r in report.runs))
        self.assertEqual(len(report.pairs), 4)
        again = evaluate(['random', 'strong'], self.instances, n_seeds=2, seed=3)
        self.assertEqual([r.node_count for r in report.runs], [r.node_count for r in again.runs])

    def test_csv_and_markdown(self):
        report = evaluate(['strong'], self.instances[:1], n_seeds=1)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'eval.csv'
            report.write_csv(path)
            with path.open(newline='') as fh:
                rows = list(csv.DictReader(fh))
        self.assertEqual(tuple(rows[0]), CSV_COLUMNS)
        self.assertEqual(rows[0]['schema_version'], str(CSV_SCHEMA_VERSION))
        self.assertEqual(rows[0]['method'], 'strong')
        markdown = report.render_markdown()
        self.assertIn('| strong branching |', markdown)
        self.assertIn('Runs that hit the time limit', markdown)

    def test_lp_breakdown_fails_only_its_own_run(self):
        broken = self.instances[0].name

        def flaky_run(instance, rule, seed, time_limit=None):
            if instance.name == broken and isinstance(rule, RandomRule):
                raise NumericalBreakdown("no acceptable pivot")
            return realistic_run(instance, rule, seed, time_limit)

        with mock.patch('evaluation.harness.realistic_run', side_effect=flaky_run):
            with self.assertLogs('evaluation.harness', level='WARNING'):
                report = evaluate(['random', 'strong'], self.instances, n_seeds=2)
        self.assertEqual(len(report.runs), 2 * 2 * 2)
        failed = [r for r in report.runs if not r.finished]
        self.assertEqual({(r.instance, r.method, r.status) for r in failed}, {(broken, 'random', BREAKDOWN_STATUS)})
        self.assertEqual(len(failed), 2)
        self.assertEqual({instance for instance, _ in report.pairs}, {self.instances[1].name})
        random_summary = next(s for s in report.summaries if s.method == 'random')
        self.assertEqual((random_summary.breakdowns, random_summary.timeouts), (2, 0))
        self.assertIn('| random | 0 | 2 |', report.render_markdown())

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidConfig):
            evaluate([], self.instances, 1)
        with self.assertRaises(InvalidConfig):
            evaluate(['random'], [], 1)
        with self.assertRaises(InvalidConfig):
            evaluate(['random'], self.instances, 0)
        with self.assertRaises(PolicyNotFound):
            evaluate(['random', 'policy:/nowhere/policy.npz'], self.instances, 1)


class EvaluateCommandTest(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        self.instance_dir = self.dir / 'instances'
        call_command('generate', family='knapsack', count=2, preset='tiny', out=str(self.instance_dir), stdout=StringIO())

    def evaluate(self, **options):
        out = StringIO()
        call_command(
            'evaluate', instance_dir=str(self.instance_dir), out=str(self.dir / 'reports'), stdout=out, **options,
        )
        return out.getvalue()

    def test_reports_and_records(self):
        output = self.evaluate(methods='random,strong', seeds=2, time_limit=30)
        self.assertIn('strong branching', output)
        self.assertTrue((self.dir / 'reports' / 'evaluation.csv').exists())
        self.assertTrue((self.dir / 'reports' / 'evaluation.md').exists())
        evaluation = Evaluation.objects.get()
        self.assertEqual(evaluation.methods, ['random', 'strong'])
        self.assertEqual(evaluation.runs.count(), 8)
        self.assertEqual(EvalRun.objects.filter(finished=False).count(), 0)

    def test_bad_methods(self):
        for methods in ('policy:/nowhere/policy.npz', 'strong,strong', ' , ', 'simplex'):
            with self.subTest(methods=methods), self.assertRaises(CommandError):
                self.evaluate(methods=methods, seeds=1)
        self.assertFalse(Evaluation.objects.exists())

    def test_admin_changelist(self):
        self.evaluate(methods='strong', seeds=1)
        self.client.force_login(User.objects.create_superuser('admin', 'admin@example.com', 'pw'))
        for name in ('evaluation', 'evalrun'):
            response = self.client.get(reverse(f'admin:evaluation_{name}_changelist'))
            self.assertEqual(response.status_code, 200)
