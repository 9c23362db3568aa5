import dataclasses
import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from bnb.engine import ChildOrder, NodeSelection, SolveConfig, solve
from bnb.report import read_report, write_report
from branching.rules import RandomRule
from core.exceptions import DepthCapExceeded, InvalidConfig, MalformedTree
from core.seeding import make_rng
from instances.generators import SIZE_PRESETS, GenConfig, generate
from instances.models import Family
from milp.fixtures import counterexample_instance
from milp.instance import MilpInstance
from milp.io import write_instance
from policy.network import PolicyParams, policy_forward

from .episode import EpisodeNode, EpisodeTree, record_episode
from .gradient_suite import bonferroni_z, check_mdp, exceedance_summary, run_suite, variance_diagnostic
from .replay import render_tree, replay
from .returns import (
    OpCounter, credit_subset_violations, temporal_credit_set, temporal_returns, tree_credit_set, tree_returns,
)
from .synthetic import (
    Estimator, SyntheticTreeMdp, analytic_value_gradient, exact_value, exact_value_and_gradient, nine_node_mdp,
    initial_params, layered_mdp, mc_gradient_statistics, sample_episode,
)

A, B, C, D, E, F, G, H, I = range(9)
EXAMPLE_CHILDREN = {A: (B, C), B: (D, E), C: (F, G), F: (H, I)}


def build_tree(children, order, n):
    nodes = [EpisodeNode() for _ in range(n)]
    for parent, (left, right) in children.items():
        nodes[parent].leaf = False
        nodes[parent].left, nodes[parent].right = left, right
        nodes[left].parent = nodes[right].parent = parent
    return EpisodeTree(nodes, list(order)).validate()


def random_tree(seed, n_internal):
    """Random binary tree grown leaf by leaf, processed in a random parent-first order."""
    rng = make_rng(seed)
    children, leaves, n = {}, [0], 1
    for _ in range(n_internal):
        leaf = leaves.pop(int(rng.integers(len(leaves))))
        children[leaf] = (n, n + 1)
        leaves += [n, n + 1]
        n += 2
    order, frontier = [], [0]
    while frontier:
        i = frontier.pop(int(rng.integers(len(frontier))))
        order.append(i)
        frontier.extend(children.get(i, ()))
    tree = build_tree(children, order, n)
    for node in tree.nodes:
        node.reward = -float(rng.integers(1, 4))
    return tree


def enumerated_value(mdp, params):
    """Σ over complete trajectories of probability × total reward, without memoisation."""
    def trajectories(s):
        if mdp.leaf[s]:
            yield 1.0, mdp.reward[s]
            return
        probs, _ = policy_forward(params, mdp.features[s])
        for a, p in enumerate(probs):
            for left in np.flatnonzero(mdp.p_left[s, a]):
                for right in np.flatnonzero(mdp.p_right[s, a]):
                    weight = p * mdp.p_left[s, a, left] * mdp.p_right[s, a, right]
                    for p1, r1 in trajectories(left):
                        for p2, r2 in trajectories(right):
                            yield weight * p1 * p2, mdp.reward[s] + r1 + r2

    return sum(p0 * p * r for s, p0 in enumerate(mdp.p_init) if p0 > 0 for p, r in trajectories(s))


class ReturnsTest(SimpleTestCase):

    def setUp(self):
        self.tree = build_tree(EXAMPLE_CHILDREN, range(9), 9)

    def test_example_tree_credits(self):
        self.assertEqual(self.tree.non_leaf_indices(), [A, B, C, F])
        np.testing.assert_array_equal(tree_returns(self.tree), [-8, -2, -4, -2])
        np.testing.assert_array_equal(temporal_returns(self.tree), [-8, -7, -6, -3])
        self.assertEqual(tree_credit_set(self.tree, F), {H, I})
        self.assertEqual(temporal_credit_set(self.tree, F), {G, H, I})

    def test_root_return_is_all_other_nodes(self):
        for seed in range(20):
            tree = random_tree(seed, 15)
            for node in tree.nodes:
                node.reward = -1.0
            self.assertEqual(tree_returns(tree)[0], -(len(tree) - 1))
            self.assertEqual(temporal_returns(tree)[0], -(len(tree) - 1))

    def test_bottom_up_matches_descendant_enumeration(self):
        for seed in range(10):
            tree = random_tree(seed, 99)
            self.assertEqual(len(tree), 199)
            naive = [sum(tree.nodes[j].reward for j in tree_credit_set(tree, i)) for i in tree.non_leaf_indices()]
            np.testing.assert_allclose(tree_returns(tree), naive)

    def test_tree_credit_is_inside_temporal_credit(self):
        for seed in range(200):
            tree = random_tree(seed, int(make_rng(seed).integers(1, 30)))
            self.assertEqual(credit_subset_violations(tree), [], msg=f"seed {seed}")
            self.assertEqual(tree_returns(tree)[0], temporal_returns(tree)[0])

    def test_last_non_leaf_is_credited_with_everything_after_it(self):
        tree = build_tree({0: (1, 2), 2: (3, 4)}, [0, 1, 2, 3, 4], 5)
        np.testing.assert_array_equal(temporal_returns(tree), [-4, -2])

    def test_linear_work_on_a_long_path(self):
        n_internal = 50_000
        children = {2 * k: (2 * k + 1, 2 * k + 2) for k in range(n_internal)}
        n = 2 * n_internal + 1
        nodes = [EpisodeNode() for _ in range(n)]
        for parent, (left, right) in children.items():
            nodes[parent].leaf = False
            nodes[parent].left, nodes[parent].right = left, right
            nodes[left].parent = nodes[right].parent = parent
        tree = EpisodeTree(nodes, list(range(n)))
        counter = OpCounter()
        returns = tree_returns(tree, counter)
        self.assertLessEqual(counter.ops, 8 * n)
        self.assertEqual(returns[0], -(n - 1))
        self.assertEqual(returns[-1], -2)

    def test_incomplete_episode_has_no_returns(self):
        self.tree.complete = False
        with self.assertRaises(MalformedTree):
            tree_returns(self.tree)
        with self.assertRaises(MalformedTree):
            temporal_returns(self.tree)


class EpisodeValidationTest(SimpleTestCase):

    def test_child_before_parent(self):
        with self.assertRaises(MalformedTree):
            build_tree({0: (1, 2)}, [1, 0, 2], 3)

    def test_non_leaf_needs_two_children(self):
        tree = build_tree({0: (1, 2)}, [0, 1, 2], 3)
        tree.nodes[0].right = None
        with self.assertRaises(MalformedTree):
            tree.validate()

    def test_order_must_cover_every_node(self):
        with self.assertRaises(MalformedTree):
            build_tree({0: (1, 2)}, [0, 1], 3)

    def test_empty_episode(self):
        with self.assertRaises(MalformedTree):
            EpisodeTree().validate()


class RecordEpisodeTest(SimpleTestCase):

    def test_integral_root_is_one_leaf(self):
        inst = MilpInstance('integral', [1.0], [[-1.0]], [-1.0], [0.0], [10.0], (0,))
        tree = record_episode(solve(inst, SolveConfig(branching_rule=RandomRule())))
        self.assertEqual(len(tree), 1)
        self.assertTrue(tree.nodes[0].leaf)
        self.assertEqual(tree_returns(tree).size, 0)
        self.assertEqual(temporal_returns(tree).size, 0)

    def test_counterexample_depth_first(self):
        report = solve(counterexample_instance(), SolveConfig(
            branching_rule=RandomRule(), node_selection=NodeSelection.DFS_LEFT_FIRST,
        ))
        tree = record_episode(report)
        self.assertEqual(len(tree), 3)
        np.testing.assert_array_equal(tree_returns(tree), [-2])
        self.assertEqual(tree.nodes[0].action.var_index, 0)

    def test_one_episode_node_per_processed_node(self):
        for family, sizes in SIZE_PRESETS['tiny'].items():
            for selection in NodeSelection:
                report = solve(generate(GenConfig(family, sizes, 2)), SolveConfig(
                    branching_rule=RandomRule(), node_selection=selection, rng_seed=4,
                ))
                tree = report.tree
                with self.subTest(family=family, selection=selection):
                    self.assertEqual(len(tree), report.node_count)
                    self.assertEqual(tree.temporal_order, list(range(len(tree))))
                    self.assertTrue(all(node.reward == -1.0 for node in tree.nodes))
                    self.assertEqual(credit_subset_violations(tree), [])

    def test_right_first_order_is_recorded(self):
        report = solve(counterexample_instance(), SolveConfig(
            branching_rule=RandomRule(), child_order=ChildOrder.RIGHT_FIRST,
        ))
        tree = record_episode(report)
        self.assertEqual((tree.nodes[0].left, tree.nodes[0].right), (2, 1))

    def test_aborted_solve_is_flagged(self):
        inst = generate(GenConfig(Family.SET_COVER, SIZE_PRESETS['desk'][Family.SET_COVER], 0))
        tree = record_episode(solve(inst, SolveConfig(branching_rule=RandomRule(), node_limit=2)))
        self.assertFalse(tree.complete)


class SyntheticMdpTest(SimpleTestCase):

    def test_all_leaf_mdp(self):
        mdp = SyntheticTreeMdp(
            p_init=np.array([0.3, 0.7]),
            p_left=np.tile(np.eye(2)[:, None, :], (1, 2, 1)),
            p_right=np.tile(np.eye(2)[:, None, :], (1, 2, 1)),
            reward=np.array([-1.0, -3.0]),
            leaf=np.array([True, True]),
            features=np.zeros((2, 2, 3)),
            depth_cap=0,
        ).validate()
        params = PolicyParams.initial(0, n_features=3, hidden=4)
        value, grad = exact_value_and_gradient(mdp, params)
        self.assertAlmostEqual(value, -2.4)
        np.testing.assert_allclose(grad.flatten(), 0.0, atol=1e-9)

    def test_depth_one_closed_form(self):
        n = 5
        p_left, p_right = np.zeros((n, 2, n)), np.zeros((n, 2, n))
        p_left[0, 0, 1] = p_right[0, 0, 2] = 1.0
        p_left[0, 1, 3] = p_right[0, 1, 4] = 1.0
        for s in range(1, n):
            p_left[s, :, s] = p_right[s, :, s] = 1.0
        mdp = SyntheticTreeMdp(
            p_init=np.eye(n)[0], p_left=p_left, p_right=p_right,
            reward=np.array([-1.0, -1.0, -1.0, -2.0, -3.0]),
            leaf=np.array([False, True, True, True, True]),
            features=make_rng(1).normal(size=(n, 2, 3)),
            depth_cap=1,
        ).validate()
        params = PolicyParams.initial(2, n_features=3, hidden=4)
        probs, _ = policy_forward(params, mdp.features[0])
        self.assertAlmostEqual(exact_value(mdp, params), -1.0 + probs[0] * -2.0 + probs[1] * -5.0)

    def test_value_equals_trajectory_enumeration(self):
        for seed in range(5):
            mdp = layered_mdp(seed, depth=3)
            params = initial_params(mdp, seed)
            self.assertAlmostEqual(exact_value(mdp, params), enumerated_value(mdp, params), places=10)

    def test_analytic_gradient_matches_finite_differences(self):
        for seed in range(8):
            mdp = layered_mdp(seed, depth=1 + seed % 4)
            params = initial_params(mdp, seed + 100)
            _, fd = exact_value_and_gradient(mdp, params)
            np.testing.assert_allclose(
                analytic_value_gradient(mdp, params).flatten(), fd.flatten(), rtol=1e-5, atol=1e-8,
            )

    def test_estimators_are_unbiased(self):
        mdp = layered_mdp(3, depth=2)
        params = initial_params(mdp, 4)
        exact = analytic_value_gradient(mdp, params).flatten()
        for k, estimator in enumerate(Estimator):
            stats = mc_gradient_statistics(mdp, params, estimator, 20_000, make_rng(k))
            with self.subTest(estimator=estimator):
                self.assertLessEqual(stats.max_standard_scores(exact), 5.0)
                self.assertTrue(np.any(stats.std_error > 0))

    def test_degenerate_policy_is_exact_after_one_episode(self):
        mdp = layered_mdp(6, depth=3, width=1, n_actions=1)
        params = initial_params(mdp, 0)
        exact = analytic_value_gradient(mdp, params).flatten()
        for estimator in Estimator:
            stats = mc_gradient_statistics(mdp, params, estimator, 1, make_rng(0))
            np.testing.assert_allclose(stats.mean, exact, atol=1e-12)

    def test_example_mdp_unfolds_depth_first(self):
        mdp = nine_node_mdp()
        tree = sample_episode(mdp, initial_params(mdp, 0), make_rng(0))
        self.assertEqual([tree.nodes[i].state_ref for i in tree.temporal_order], [A, B, D, E, C, F, H, I, G])
        tree.validate()
        credited = dict(zip(tree.non_leaf_indices(), tree_returns(tree)))
        f = next(i for i, node in enumerate(tree.nodes) if node.state_ref == F)
        self.assertEqual(credited[f], -2)

    def test_depth_cap(self):
        mdp = dataclasses.replace(nine_node_mdp(), depth_cap=1)
        params = initial_params(mdp, 0)
        with self.assertRaises(DepthCapExceeded):
            exact_value(mdp, params)
        with self.assertRaises(DepthCapExceeded):
            sample_episode(mdp, params, make_rng(0))

    def test_transition_rows_must_be_distributions(self):
        mdp = nine_node_mdp()
        broken = mdp.p_left.copy()
        broken[0, 0, 1] = 0.5
        with self.assertRaises(InvalidConfig):
            dataclasses.replace(mdp, p_left=broken).validate()

    def test_unknown_estimator(self):
        mdp = nine_node_mdp()
        with self.assertRaises(InvalidConfig):
            mc_gradient_statistics(mdp, initial_params(mdp, 0), 'q-learning', 10, make_rng(0))


class GradientSuiteTest(SimpleTestCase):

    def two_outcome_mdp(self):
        """Action 0 ends in two zero-reward leaves, action 1 in two leaves worth -5 each."""
        n = 3
        p_left, p_right = np.zeros((n, 2, n)), np.zeros((n, 2, n))
        p_left[0, 0, 1] = p_right[0, 0, 1] = 1.0
        p_left[0, 1, 2] = p_right[0, 1, 2] = 1.0
        for s in range(1, n):
            p_left[s, :, s] = p_right[s, :, s] = 1.0
        return SyntheticTreeMdp(
            p_init=np.eye(n)[0], p_left=p_left, p_right=p_right,
            reward=np.array([0.0, 0.0, -5.0]),
            leaf=np.array([False, True, True]),
            features=make_rng(7).normal(size=(n, 2, 3)),
            depth_cap=1,
        ).validate()

    def test_check_mdp_passes_at_default_tolerances(self):
        mdp = self.two_outcome_mdp()
        agreement, checks = check_mdp(mdp, initial_params(mdp, 3), 100_000, seed=11)
        self.assertLess(agreement, 1e-4)
        for check in checks:
            with self.subTest(estimator=check.estimator):
                self.assertLess(check.relative_error, 0.05)
                self.assertTrue(check.passed)

    def test_output_bias_component_is_not_flagged(self):
        mdp = self.two_outcome_mdp()
        params = initial_params(mdp, 3)
        exact = analytic_value_gradient(mdp, params).flatten()
        self.assertLess(abs(exact[-1]), 1e-12)
        stats = mc_gradient_statistics(mdp, params, Estimator.TREE, 2000, make_rng(0))
        self.assertLessEqual(stats.standard_scores(exact)[-1], 1.0)

    def test_bonferroni_bound(self):
        self.assertAlmostEqual(bonferroni_z(1), 3.0, places=2)
        self.assertGreater(bonferroni_z(840), bonferroni_z(42))
        self.assertEqual(bonferroni_z(0), bonferroni_z(1))

    def test_exceedance_summary_counts_every_component(self):
        results = run_suite(n_mdps=2, n_episodes=200, rel_tol=math.inf, z_max=math.inf)
        observed, expected = exceedance_summary(results)
        components = sum(check.components for result in results for check in result.estimators)
        self.assertGreaterEqual(observed, 0)
        self.assertLessEqual(observed, components)
        self.assertAlmostEqual(expected, 0.0027 * components)

    def test_check_mdp_reports_both_estimators(self):
        mdp = layered_mdp(1, depth=2)
        agreement, checks = check_mdp(mdp, initial_params(mdp, 1), 5000, seed=2, rel_tol=math.inf, z_max=math.inf)
        self.assertLess(agreement, 1e-4)
        self.assertEqual([c.estimator for c in checks], ['tree', 'temporal'])
        self.assertTrue(all(c.passed for c in checks))

    def test_suite_cycles_through_depths(self):
        results = run_suite(n_mdps=4, n_episodes=200, rel_tol=math.inf, z_max=math.inf)
        self.assertEqual([r.depth for r in results], [1, 2, 3, 4])
        self.assertTrue(all(r.passed for r in results))

    def test_variance_diagnostic(self):
        variances = variance_diagnostic(n_batches=5, batch_episodes=200)
        self.assertEqual(set(variances), {'tree', 'temporal'})
        self.assertTrue(all(v >= 0 for v in variances.values()))

    def test_command_prints_a_summary(self):
        out = StringIO()
        call_command(
            'validate_gradient', mdps=2, episodes=500, rel_tol=1e9, z_max=1e9, skip_variance=True, stdout=out,
        )
        self.assertIn('All 2 MDPs passed', out.getvalue())
        self.assertIn('expected by chance', out.getvalue())

    def test_command_fails_on_impossible_tolerance(self):
        with self.assertRaises(CommandError):
            call_command('validate_gradient', mdps=1, episodes=50, rel_tol=0.0, skip_variance=True, stdout=StringIO())


class ReplayTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        self.instance = self.dir / 'inst.json'
        write_instance(generate(GenConfig('cauctions', {'items': 6, 'bids': 12}, 3)), self.instance)
        self.report = self.dir / 'report.json'
        call_command(
            'solve', instance=str(self.instance), brancher='random', seed=5, out=str(self.report), stdout=StringIO(),
        )

    def test_replay_reproduces_the_tree(self):
        result = replay(read_report(self.report))
        self.assertTrue(result.matches)
        self.assertEqual(result.recorded_nodes, result.replayed_nodes)

    def test_tampered_report_diverges(self):
        payload = read_report(self.report)
        payload['config']['brancher'] = 'strong'
        payload['nodes'][0]['status'] = 'pruned'
        result = replay(payload)
        self.assertFalse(result.matches)
        self.assertEqual(result.first_difference, 0)

    def test_report_without_instance_path(self):
        payload = read_report(self.report)
        payload['instance_path'] = None
        with self.assertRaises(InvalidConfig):
            replay(payload)

    def test_render_tree(self):
        payload = read_report(self.report)
        lines = render_tree(payload)
        self.assertEqual(len(lines), payload['node_count'])
        self.assertTrue(lines[0].startswith('#0 '))

    def test_commands(self):
        out = StringIO()
        call_command('replay_episode', report=str(self.report), stdout=out)
        self.assertIn('Replay reproduced', out.getvalue())
        out = StringIO()
        call_command('replay_episode', report=str(self.report), show=True, stdout=out)
        self.assertIn('#0 ', out.getvalue())

    def test_command_reports_divergence(self):
        payload = json.loads(self.report.read_text())
        payload['nodes'][0]['status'] = 'pruned'
        self.report.write_text(json.dumps(payload))
        with self.assertRaises(CommandError):
            call_command('replay_episode', report=str(self.report), stdout=StringIO())

    def test_report_written_directly_replays(self):
        report = solve(counterexample_instance(), SolveConfig(branching_rule=RandomRule(), rng_seed=2))
        path = self.dir / 'counter.json'
        inst_path = self.dir / 'counter-inst.json'
        write_instance(counterexample_instance(), inst_path)
        write_report(report, path, instance_path=inst_path)
        self.assertTrue(replay(read_report(path)).matches)
