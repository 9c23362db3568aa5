import csv
import math
import tempfile
from dataclasses import asdict
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.conf import settings
from django.contrib.auth.models import User
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse

from bnb.engine import NodeSelection, SolveStatus
from bnb.runs import RunOutcome
from branching.rules import RandomRule
from core.exceptions import InvalidConfig, NumericalBreakdown, TrainingAborted
from core.seeding import make_rng
from instances.generators import SIZE_PRESETS, GenConfig, generate
from instances.manifest import LoadedInstance
from instances.models import Family
from milp.instance import MilpInstance
from milp.oracle import brute_force_solve
from policy.network import PolicyParams
from policy.storage import load_policy
from treemdp.returns import temporal_returns, tree_returns

from .config import ImitationConfig, Regime, TrainConfig, regime_returns, regime_solve_config
from .imitation import collect_imitation_pairs, fit_imitation, greedy_accuracy, imitation_loss_and_grad
from .log import CSV_COLUMNS, EpochStats, TrainLog, moving_average, read_log_csv, samples_to_reach
from .models import TrainingRun
from .reinforce import Sample, batch_loss_and_grad, collect_episode, extract_samples, train_reinforce
from .validation import validate

STEP = 1e-6


def tiny_set(family=Family.SET_COVER, seeds=range(3), with_optima=True):
    loaded = []
    for seed in seeds:
        inst = generate(GenConfig(family, SIZE_PRESETS['tiny'][family], seed))
        optimum = brute_force_solve(inst, settings.TREEBRANCH['ENUM_CAP']).obj_value if with_optima else None
        loaded.append(LoadedInstance(inst, Path(f"{inst.name}.json"), optimum, seed))
    return loaded


def random_samples(seed, n, n_features=3, k_max=5):
    rng = make_rng(seed)
    samples = []
    for _ in range(n):
        k = int(rng.integers(1, k_max + 1))
        samples.append(Sample(rng.normal(size=(k, n_features)), int(rng.integers(k)), -float(rng.integers(1, 20))))
    return samples


def numeric_gradient(fn, params):
    theta = params.flatten()
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        step = np.zeros_like(theta)
        step[k] = STEP
        grad[k] = (fn(params.like(theta + step)) - fn(params.like(theta - step))) / (2 * STEP)
    return grad


class TrainConfigTest(SimpleTestCase):

    def test_objective_limit_regime_needs_optima(self):
        with self.assertRaises(InvalidConfig):
            TrainConfig(regime=Regime.TREE_OBJLIM).validate(tiny_set(with_optima=False))
        TrainConfig(regime=Regime.TREE_DFS).validate(tiny_set(with_optima=False))

    def test_out_of_range_values(self):
        for overrides in ({'learning_rate': 0}, {'sample_rate': 0}, {'sample_rate': 1.5},
                          {'instances_per_epoch': 0}, {'entropy_bonus': -1}, {'time_limit': 0}):
            with self.subTest(**overrides), self.assertRaises(InvalidConfig):
                TrainConfig(**overrides).validate()

    def test_defaults(self):
        cfg = TrainConfig()
        self.assertEqual(
            (cfg.entropy_bonus, cfg.learning_rate, cfg.sample_rate, cfg.instances_per_epoch),
            (0.01, 1e-3, 0.2, 10),
        )
        self.assertFalse(cfg.baseline)

    def test_regimes_differ_only_in_selection_limit_and_returns(self):
        summaries = {
            regime: regime_solve_config(regime, RandomRule(), seed=3, optimum=-4.0).summary() for regime in Regime
        }
        for regime, summary in summaries.items():
            others = {k: v for k, v in summary.items() if k not in ('node_selection', 'objective_limit')}
            self.assertEqual(others, {
                k: v for k, v in summaries[Regime.TEMPORAL_MDP].items() if k not in ('node_selection', 'objective_limit')
            })
        self.assertEqual(summaries[Regime.TEMPORAL_MDP]['node_selection'], NodeSelection.BEST_FIRST)
        self.assertIsNone(summaries[Regime.TEMPORAL_MDP]['objective_limit'])
        self.assertEqual(summaries[Regime.TREE_DFS]['node_selection'], NodeSelection.DFS_LEFT_FIRST)
        self.assertIsNone(summaries[Regime.TREE_DFS]['objective_limit'])
        self.assertEqual(summaries[Regime.TREE_OBJLIM]['node_selection'], NodeSelection.BEST_FIRST)
        self.assertEqual(summaries[Regime.TREE_OBJLIM]['objective_limit'], -4.0)
        self.assertIs(regime_returns(Regime.TEMPORAL_MDP), temporal_returns)
        self.assertIs(regime_returns(Regime.TREE_DFS), tree_returns)
        self.assertIs(regime_returns(Regime.TREE_OBJLIM), tree_returns)


class BatchLossTest(SimpleTestCase):

    def test_gradient_matches_finite_differences(self):
        for seed in range(100):
            params = PolicyParams.initial(seed, n_features=3, hidden=4)
            samples = random_samples(seed, 1 + seed % 6)
            entropy_bonus = [0.0, 0.01, 0.5][seed % 3]
            baseline = seed % 2 == 1
            batch = batch_loss_and_grad(params, samples, entropy_bonus, baseline)
            numeric = numeric_gradient(lambda p: batch_loss_and_grad(p, samples, entropy_bonus, baseline).loss, params)
            np.testing.assert_allclose(batch.grad.flatten(), numeric, rtol=1e-4, atol=1e-7, err_msg=f"seed {seed}")

    def test_gradient_is_sum_of_scaled_per_sample_terms(self):
        params = PolicyParams.initial(1, n_features=3, hidden=4)
        samples = random_samples(2, 4)
        whole = batch_loss_and_grad(params, samples, 0.1).grad
        parts = sum(
            (batch_loss_and_grad(params, [s], 0.1).grad.flatten() for s in samples), np.zeros(params.size),
        ) / len(samples)
        np.testing.assert_allclose(whole.flatten(), parts, atol=1e-12)

    def test_empty_batch(self):
        params = PolicyParams.initial(1, n_features=3, hidden=4)
        batch = batch_loss_and_grad(params, [], 0.01)
        self.assertEqual(batch.loss, 0.0)
        np.testing.assert_array_equal(batch.grad.flatten(), 0.0)


class EpisodeCollectionTest(SimpleTestCase):

    def test_objective_limit_episodes_keep_a_constant_gub(self):
        params = PolicyParams.initial(0, hidden=8)
        for family in SIZE_PRESETS['tiny']:
            for item in tiny_set(family, seeds=range(2)):
                episode = collect_episode(item.instance, item.optimum, params, Regime.TREE_OBJLIM, seed=4)
                with self.subTest(instance=item.instance.name):
                    self.assertTrue(episode.usable)
                    self.assertEqual(episode.gub_violations, 0)
                    self.assertEqual(episode.node_count, len(episode.tree))

    def test_depth_first_episodes_pass_the_left_child_probe(self):
        params = PolicyParams.initial(1, hidden=8)
        for item in tiny_set(Family.COMB_AUCTION):
            episode = collect_episode(item.instance, None, params, Regime.TREE_DFS, seed=2)
            self.assertEqual(episode.gub_violations, 0)

    def test_node_limited_episode_is_not_usable(self):
        inst = generate(GenConfig(Family.SET_COVER, SIZE_PRESETS['desk'][Family.SET_COVER], 0))
        episode = collect_episode(inst, None, PolicyParams.initial(0, hidden=8), Regime.TEMPORAL_MDP, 1, node_limit=2)
        self.assertFalse(episode.usable)

    def test_breakdown_is_reported_not_raised(self):
        item = tiny_set(seeds=[0])[0]
        with mock.patch('training.reinforce.solve', side_effect=NumericalBreakdown('no pivot')):
            episode = collect_episode(item.instance, None, PolicyParams.initial(0), Regime.TREE_DFS, 1)
        self.assertFalse(episode.usable)
        self.assertEqual(episode.error, 'no pivot')

    def test_sample_count_and_returns(self):
        params = PolicyParams.initial(0, hidden=8)
        inst = generate(GenConfig(Family.COMB_AUCTION, {'items': 8, 'bids': 24}, 1))
        tree = collect_episode(inst, None, params, Regime.TEMPORAL_MDP, seed=0).tree
        non_leaf = tree.non_leaf_indices()
        for rate in (0.2, 1.0):
            samples = extract_samples(tree, Regime.TEMPORAL_MDP, rate, make_rng(0))
            self.assertEqual(len(samples), min(len(non_leaf), math.ceil(rate * len(tree))))
        samples = extract_samples(tree, Regime.TREE_DFS, 1.0, make_rng(0))
        self.assertEqual(sorted(s.ret for s in samples), sorted(tree_returns(tree)))


class TrainReinforceTest(SimpleTestCase):

    def config(self, **overrides):
        values = dict(regime=Regime.TREE_DFS, epochs=3, instances_per_epoch=2, seed=1, hidden=8,
                      eval_interval=2, eval_seeds=2, sample_rate=0.5)
        values.update(overrides)
        return TrainConfig(**values)

    def test_fixed_seed_gives_identical_logs(self):
        train = tiny_set()
        first_params, first = train_reinforce(train, self.config())
        second_params, second = train_reinforce(train, self.config())
        self.assertEqual([asdict(r) for r in first.records], [asdict(r) for r in second.records])
        self.assertTrue(first_params.equals(second_params))

    def test_samples_are_counted_as_processed_nodes(self):
        _, log = train_reinforce(tiny_set(), self.config(regime=Regime.TREE_OBJLIM))
        previous = 0
        for record in log.records:
            self.assertGreaterEqual(record.samples_cumulative, previous)
            if record.episodes:
                self.assertAlmostEqual(record.samples_cumulative - previous, record.mean_episode_nodes * record.episodes)
            previous = record.samples_cumulative

    def test_validation_cadence_and_best_checkpoint(self):
        train, valid = tiny_set(), tiny_set(Family.MULTI_KNAPSACK, seeds=range(2))
        start = PolicyParams.initial(5, hidden=8)
        params, log = train_reinforce(train, self.config(epochs=3, eval_interval=2), valid, params=start)
        self.assertEqual([r.epoch for r in log.records if r.validation_gmean is not None], [1, 2])
        self.assertIsNotNone(log.initial_validation)
        self.assertLessEqual(log.best_validation, log.initial_validation)
        if log.best_epoch == -1:
            self.assertTrue(params.equals(start))

    def test_zero_learning_signal_keeps_parameters(self):
        train = tiny_set()
        start = PolicyParams.initial(7, hidden=8)
        with mock.patch('training.reinforce.extract_samples', return_value=[]):
            params, log = train_reinforce(train, self.config(entropy_bonus=0.0), params=start)
        self.assertTrue(params.equals(start))
        self.assertEqual(len(log.records), 3)

    def test_persistent_breakdown_aborts(self):
        with mock.patch('training.reinforce.solve', side_effect=NumericalBreakdown('singular basis')):
            with self.assertRaises(TrainingAborted):
                train_reinforce(tiny_set(), self.config(epochs=5))

    def test_empty_training_set(self):
        with self.assertRaises(TrainingAborted):
            train_reinforce([], self.config())


class ValidationTest(SimpleTestCase):

    def test_greedy_policy_has_no_seed_spread(self):
        item = tiny_set(Family.FACILITY_LOC, seeds=[0])[0]
        result = validate(PolicyParams.initial(3, hidden=8), [item.instance], n_seeds=5)
        self.assertEqual(result.std_pct, 0.0)
        self.assertEqual(result.finished, 5)
        self.assertEqual(result.timeouts, 0)
        self.assertGreaterEqual(result.gmean, 1.0)

    def test_instances_sharing_a_name_are_kept_apart(self):
        small = MilpInstance('dup', [1.0], [[-1.0]], [-1.0], [0.0], [10.0], (0,))
        large = MilpInstance('dup', [2.0], [[-1.0]], [-2.0], [0.0], [10.0], (0,))

        def fixed_run(instance, rule, seed, time_limit=None):
            return RunOutcome(10 if instance is small else 40, 0.01, SolveStatus.OPTIMAL)

        with mock.patch('training.validation.realistic_run', side_effect=fixed_run):
            result = validate(PolicyParams.initial(3, hidden=8), [small, large], n_seeds=3)
        self.assertEqual(result.std_pct, 0.0)
        self.assertEqual(result.finished, 6)
        self.assertAlmostEqual(result.gmean, 20.0)


class ImitationTest(SimpleTestCase):

    def separable_pairs(self, seed, n):
        rng = make_rng(seed)
        pairs = []
        for _ in range(n):
            k = int(rng.integers(2, 5))
            features = 0.1 * rng.normal(size=(k, 3))
            label = int(rng.integers(k))
            features[:, 0] = 0.0
            features[label, 0] = 1.0
            pairs.append(Sample(features, label))
        return pairs

    def test_uniform_policy_cross_entropy_is_log_two(self):
        loss, _ = imitation_loss_and_grad(PolicyParams.zeros(3, 4), [Sample(np.ones((2, 3)), 0)])
        self.assertAlmostEqual(loss, math.log(2))

    def test_gradient_matches_finite_differences(self):
        params = PolicyParams.initial(4, n_features=3, hidden=4)
        pairs = random_samples(5, 6)
        _, grad = imitation_loss_and_grad(params, pairs)
        numeric = numeric_gradient(lambda p: imitation_loss_and_grad(p, pairs)[0], params)
        np.testing.assert_allclose(grad.flatten(), numeric, rtol=1e-4, atol=1e-7)

    def test_zero_epochs_returns_the_initial_parameters(self):
        start = PolicyParams.initial(2, n_features=3, hidden=4)
        params, log = fit_imitation(self.separable_pairs(0, 10), ImitationConfig(epochs=0, hidden=4), start)
        self.assertTrue(params.equals(start))
        self.assertEqual(log.records, [])

    def test_separable_labels_are_learned(self):
        train, held_out = self.separable_pairs(1, 100), self.separable_pairs(2, 200)
        cfg = ImitationConfig(epochs=300, learning_rate=0.5, batch_size=len(train), hidden=8, seed=3)
        params, log = fit_imitation(train, cfg)
        self.assertGreaterEqual(greedy_accuracy(params, held_out), 0.99)
        self.assertLess(log.records[-1].loss, log.records[0].loss)

    def test_strong_branching_pairs_respect_the_node_cap(self):
        instances = [item.instance for item in tiny_set(Family.COMB_AUCTION)]
        pairs = collect_imitation_pairs(instances, node_cap=2, seed=0)
        self.assertLessEqual(len(pairs), 2 * len(instances))
        for pair in pairs:
            self.assertEqual(pair.features.shape[1], 12)
            self.assertLess(pair.chosen, pair.features.shape[0])


class TrainLogTest(SimpleTestCase):

    def test_cumulative_samples_never_decrease(self):
        log = TrainLog()
        log.append(EpochStats(epoch=0, samples_cumulative=10))
        with self.assertRaises(ValueError):
            log.append(EpochStats(epoch=1, samples_cumulative=5))

    def test_csv_round_trip_keeps_empty_cells(self):
        log = TrainLog()
        log.append(EpochStats(epoch=0, samples_cumulative=12, episodes=2, mean_episode_nodes=6.0, loss=0.5))
        log.append(EpochStats(epoch=1, samples_cumulative=20, episodes=2, validation_gmean=7.5))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'train.csv'
            log.write_csv(path)
            with path.open() as fh:
                self.assertEqual(tuple(next(csv.reader(fh))), CSV_COLUMNS)
            self.assertEqual(read_log_csv(path).records, log.records)

    def test_moving_average(self):
        np.testing.assert_allclose(moving_average([4, 2, 6, 8], 2), [4, 3, 4, 7])
        self.assertEqual(moving_average([], 3).size, 0)

    def test_samples_to_reach(self):
        log = TrainLog()
        for epoch, (samples, value) in enumerate([(10, 50.0), (20, 40.0), (30, 30.0), (40, 20.0)]):
            log.append(EpochStats(epoch=epoch, samples_cumulative=samples, validation_gmean=value))
        self.assertEqual(samples_to_reach(log, 30.0), 30)
        self.assertEqual(samples_to_reach(log, 35.0, window=2), 30)
        self.assertIsNone(samples_to_reach(log, 5.0))


class TrainCommandTest(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        self.train_dir = self.dir / 'train'
        call_command('generate', family='setcover', count=2, preset='tiny', out=str(self.train_dir), stdout=StringIO())

    def test_train_writes_policy_log_and_records(self):
        out, log = self.dir / 'policy.npz', self.dir / 'train.csv'
        call_command(
            'train', regime='tmdp-dfs', train_dir=str(self.train_dir), epochs=2, instances_per_epoch=2,
            out=str(out), log=str(log), stdout=StringIO(),
        )
        load_policy(out)
        self.assertEqual(len(read_log_csv(log).records), 2)
        run = TrainingRun.objects.get()
        self.assertEqual(run.status, TrainingRun.Status.FINISHED)
        self.assertEqual(run.regime, Regime.TREE_DFS)
        self.assertEqual(run.epochs.count(), 2)
        self.assertEqual(run.config['instances_per_epoch'], 2)

    def test_objective_limit_needs_presolved_optima(self):
        with self.assertRaises(CommandError):
            call_command(
                'train', regime='tmdp-objlim', train_dir=str(self.train_dir), epochs=1,
                out=str(self.dir / 'p.npz'), stdout=StringIO(),
            )
        call_command('presolve_optima', instance_dir=str(self.train_dir), stdout=StringIO())
        call_command(
            'train', regime='tmdp-objlim', train_dir=str(self.train_dir), epochs=1, instances_per_epoch=1,
            out=str(self.dir / 'p.npz'), stdout=StringIO(),
        )
        self.assertEqual(TrainingRun.objects.filter(status=TrainingRun.Status.FINISHED).count(), 1)

    def test_invalid_options(self):
        for options in ({'regime': 'ppo'}, {'regime': 'mdp', 'lr': 0.0}, {'regime': 'mdp', 'sample_rate': 2.0}):
            with self.subTest(**options), self.assertRaises(CommandError):
                call_command(
                    'train', train_dir=str(self.train_dir), out=str(self.dir / 'p.npz'), stdout=StringIO(), **options,
                )

    def test_imitate(self):
        out = self.dir / 'il.npz'
        call_command('imitate', train_dir=str(self.train_dir), epochs=2, out=str(out), stdout=StringIO())
        load_policy(out)
        run = TrainingRun.objects.get(kind=TrainingRun.Kind.IMITATION)
        self.assertEqual(run.epochs.count(), 2)

    def test_admin_changelist(self):
        call_command('imitate', train_dir=str(self.train_dir), epochs=1, out=str(self.dir / 'il.npz'), stdout=StringIO())
        self.client.force_login(User.objects.create_superuser('admin', 'admin@example.com', 'pw'))
        response = self.client.get(reverse('admin:training_trainingrun_changelist'))
        self.assertEqual(response.status_code, 200)
        self.assertContains(response, 'Imitation of strong branching')
