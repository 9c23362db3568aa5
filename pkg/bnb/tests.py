import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st

from branching.rules import BranchingRule, PolicyRule, PseudocostRule, RandomRule, StrongBranchingRule
from core.constants import FEAS_TOL
from core.exceptions import InvalidConfig, VersionMismatch
from instances.generators import SIZE_PRESETS, GenConfig, generate
from instances.models import Family
from milp.fixtures import counterexample_instance
from milp.instance import MilpInstance, MilpSolution, check_feasible
from milp.io import write_instance
from milp.oracle import brute_force_solve
from policy.network import PolicyParams

from .engine import ChildOrder, NodeSelection, SolveConfig, SolveStatus, solve
from .nodes import BranchAction, NodeState, NodeStatus, child_states, fractional_candidates
from .probes import ProbeMode, gub_invariant_probe
from .pseudocosts import PseudocostTracker
from .report import dumps_report, read_report, report_to_dict, write_report


def node_with(lower, upper, x=None):
    node = NodeState(0, None, None, 0, (), np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))
    node.lp_solution = None if x is None else np.asarray(x, dtype=float)
    return node


def tiny_instances(seeds=range(3)):
    for family, sizes in SIZE_PRESETS['tiny'].items():
        for seed in seeds:
            yield generate(GenConfig(family, sizes, seed))


class FirstVariableRule(BranchingRule):
    spec = 'first-variable'

    def select(self, node, candidates, probe):
        return BranchAction(*candidates[0])


class NotACandidateRule(BranchingRule):
    spec = 'not-a-candidate'

    def select(self, node, candidates, probe):
        taken = {j for j, _ in candidates}
        j = next(k for k in range(self.instance.n_vars) if k not in taken)
        return BranchAction(j, 0.5)


class FractionalCandidatesTest(SimpleTestCase):

    def test_fractional_entries_in_index_order(self):
        node = node_with([0, 0, 0], [5, 5, 5], [0.5, 2.0, 1.3])
        self.assertEqual(fractional_candidates(node, (0, 1, 2)), [(0, 0.5), (2, 1.3)])

    def test_integral_solution_has_no_candidates(self):
        node = node_with([0, 0], [5, 5], [1.0, 3.0])
        self.assertEqual(fractional_candidates(node, (0, 1)), [])

    def test_value_within_tolerance_is_integral(self):
        node = node_with([0], [5], [2.0000004])
        self.assertEqual(fractional_candidates(node, (0,)), [])

    def test_continuous_variables_are_ignored(self):
        node = node_with([0, 0], [5, 5], [0.5, 0.5])
        self.assertEqual(fractional_candidates(node, (1,)), [(1, 0.5)])


class ChildStatesTest(SimpleTestCase):

    def test_counterexample_split(self):
        root = node_with([0], [10])
        left, right = child_states(root, BranchAction(0, 0.6), 1, 2)
        self.assertEqual((left.lower[0], left.upper[0]), (0, 0))
        self.assertEqual((right.lower[0], right.upper[0]), (1, 10))
        self.assertTrue(left.is_left_child)
        self.assertFalse(right.is_left_child)
        self.assertEqual(left.bound_changes, ((0, 'upper', 0.0),))
        self.assertEqual(right.bound_changes, ((0, 'lower', 1.0),))

    def test_existing_bounds_are_narrowed(self):
        parent = node_with([3, -1], [7, 1])
        left, right = child_states(parent, BranchAction(0, 5.5), 1, 2)
        self.assertEqual((left.lower[0], left.upper[0]), (3, 5))
        self.assertEqual((right.lower[0], right.upper[0]), (6, 7))
        np.testing.assert_array_equal(left.lower[1:], [-1])
        np.testing.assert_array_equal(right.upper[1:], [1])
        self.assertEqual(parent.upper[0], 7)

    def test_integral_split_is_rejected(self):
        with self.assertRaises(InvalidConfig):
            child_states(node_with([0], [10]), BranchAction(0, 3.0), 1, 2)

    def test_split_outside_domain_is_rejected(self):
        with self.assertRaises(InvalidConfig):
            child_states(node_with([4], [10]), BranchAction(0, 2.5), 1, 2)

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32))
    def test_repeated_branching_narrows_the_domain(self, seed):
        rng = np.random.default_rng(seed)
        node = node_with([0], [40])
        next_id = 1
        while node.upper[0] - node.lower[0] >= 1:
            width = node.upper[0] - node.lower[0]
            value = node.lower[0] + rng.integers(0, int(width)) + rng.uniform(0.1, 0.9)
            left, right = child_states(node, BranchAction(0, value), next_id, next_id + 1)
            next_id += 2
            node = left if rng.random() < 0.5 else right
            self.assertLess(node.upper[0] - node.lower[0], width)
        self.assertEqual(node.times_branched_on(0), len(node.bound_changes))


class CounterexampleTest(SimpleTestCase):

    def child_gubs(self, child_order, node_selection=NodeSelection.DFS_LEFT_FIRST):
        report = solve(counterexample_instance(), SolveConfig(
            branching_rule=FirstVariableRule(), node_selection=node_selection, child_order=child_order,
        ))
        left, right = (report.nodes[i] for i in report.nodes[0].children)
        return report, (left.gub_at_processing, right.gub_at_processing)

    def test_left_first_children_both_see_no_incumbent(self):
        report, gubs = self.child_gubs(ChildOrder.LEFT_FIRST)
        self.assertEqual(gubs, (math.inf, math.inf))
        self.assertEqual(report.node_count, 3)
        self.assertEqual(report.obj, 1.0)

    def test_right_first_left_child_sees_the_incumbent(self):
        _, gubs = self.child_gubs(ChildOrder.RIGHT_FIRST)
        self.assertEqual(gubs, (1.0, math.inf))

    def test_dfs_probe_flags_the_right_first_order(self):
        report, _ = self.child_gubs(ChildOrder.RIGHT_FIRST, NodeSelection.BEST_FIRST)
        violations = gub_invariant_probe(report, ProbeMode.DFS)
        self.assertEqual(len(violations), 1)
        self.assertEqual(violations[0].parent_id, 0)
        self.assertEqual((violations[0].expected, violations[0].found), (math.inf, 1.0))

    def test_left_first_passes_the_dfs_probe(self):
        report, _ = self.child_gubs(ChildOrder.LEFT_FIRST)
        self.assertEqual(gub_invariant_probe(report, ProbeMode.DFS), [])


class SolveTest(SimpleTestCase):

    def test_integral_root_is_a_single_node(self):
        inst = MilpInstance('integral', [1.0], [[-1.0]], [-1.0], [0.0], [10.0], (0,))
        report = solve(inst, SolveConfig(branching_rule=RandomRule()))
        self.assertEqual(report.node_count, 1)
        self.assertEqual(report.status, SolveStatus.OPTIMAL)
        self.assertEqual(report.nodes[0].status, NodeStatus.LEAF_INTEGER_FEASIBLE)
        self.assertEqual(report.obj, 1.0)

    def test_infeasible_instance(self):
        inst = MilpInstance('none', [1.0], [[1.0], [-1.0]], [0.7, -0.2], [0.0], [1.0], (0,))
        report = solve(inst, SolveConfig(branching_rule=RandomRule()))
        self.assertEqual(report.status, SolveStatus.INFEASIBLE)
        self.assertIsNone(report.obj)
        self.assertTrue(report.complete)

    def test_unbounded_relaxation_stops_the_solve(self):
        inst = MilpInstance('ray', [-1.0, 0.0], [[0.0, 1.0]], [1.0], [0.0, 0.0], [math.inf, math.inf], (1,))
        report = solve(inst, SolveConfig(branching_rule=RandomRule()))
        self.assertEqual(report.status, SolveStatus.UNBOUNDED)
        self.assertFalse(report.complete)

    def test_rounding_that_breaks_a_row_keeps_the_lp_point(self):
        inst = MilpInstance('tight', [-1.0], [[1000.0]], [999.9995], [0.0], [1.0], (0,))
        with self.assertLogs('bnb.engine', level='WARNING'):
            report = solve(inst, SolveConfig(branching_rule=RandomRule()))
        self.assertEqual(report.node_count, 1)
        self.assertEqual(report.status, SolveStatus.OPTIMAL)
        self.assertTrue(report.incumbent.is_feasible)
        self.assertTrue(check_feasible(inst, report.incumbent.x).is_feasible)
        self.assertAlmostEqual(report.obj, -0.9999995, places=9)

    def test_infeasible_leaf_point_is_not_an_incumbent(self):
        inst = MilpInstance('integral', [1.0], [[-1.0]], [-1.0], [0.0], [10.0], (0,))

        def rejected(instance, x):
            return MilpSolution(np.asarray(x, dtype=float), 1.0, False)

        with mock.patch('bnb.engine.make_solution', side_effect=rejected):
            with self.assertLogs('bnb.engine', level='WARNING'):
                report = solve(inst, SolveConfig(branching_rule=RandomRule()))
        self.assertIsNone(report.incumbent)
        self.assertIsNone(report.obj)
        self.assertEqual(report.status, SolveStatus.INFEASIBLE)

    def test_rule_must_pick_a_candidate(self):
        inst = MilpInstance('two', [1.0, 1.0], [[-1.0, 0.0]], [-0.6], [0.0, 0.0], [10.0, 10.0], (0, 1))
        with self.assertRaises(InvalidConfig):
            solve(inst, SolveConfig(branching_rule=NotACandidateRule()))

    def test_config_validation(self):
        with self.assertRaises(InvalidConfig):
            solve(counterexample_instance(), SolveConfig())
        with self.assertRaises(InvalidConfig):
            solve(counterexample_instance(), SolveConfig(branching_rule=RandomRule(), node_limit=0))
        with self.assertRaises(InvalidConfig):
            solve(counterexample_instance(), SolveConfig(branching_rule=RandomRule(), objective_limit=math.inf))

    def test_node_limit_reports_a_partial_tree(self):
        inst = generate(GenConfig(Family.SET_COVER, SIZE_PRESETS['desk'][Family.SET_COVER], 0))
        report = solve(inst, SolveConfig(branching_rule=RandomRule(), node_limit=2))
        self.assertEqual(report.status, SolveStatus.NODE_LIMIT)
        self.assertFalse(report.complete)
        self.assertEqual(report.node_count, 2)
        self.assertFalse(report.tree.complete)

    def test_fixed_seed_is_deterministic(self):
        inst = generate(GenConfig(Family.COMB_AUCTION, {'items': 8, 'bids': 20}, 2))
        config = dict(branching_rule=RandomRule(), rng_seed=7)
        first, second = solve(inst, SolveConfig(**config)), solve(inst, SolveConfig(**config))
        self.assertEqual(first.processed_order, second.processed_order)
        self.assertEqual(dumps_report(first), dumps_report(second))

    def test_processed_tree_is_well_formed(self):
        for inst in tiny_instances():
            report = solve(inst, SolveConfig(branching_rule=RandomRule(), rng_seed=1))
            gubs = [node.gub_at_processing for node in report.processed_nodes()]
            with self.subTest(instance=inst.name):
                self.assertTrue(all(a >= b for a, b in zip(gubs, gubs[1:])))
                for node in report.processed_nodes():
                    if node.status == NodeStatus.BRANCHED:
                        self.assertEqual(len(node.children), 2)
                        self.assertIsNotNone(node.action)
                    else:
                        self.assertIn(node.status, NodeStatus.leaves())
                        self.assertEqual(node.children, ())

    def test_bounds_sandwich_the_optimum(self):
        for inst in tiny_instances(range(2)):
            optimum = brute_force_solve(inst, settings.TREEBRANCH['ENUM_CAP']).obj_value
            report = solve(inst, SolveConfig(branching_rule=RandomRule(), record_bounds=True))
            with self.subTest(instance=inst.name):
                for glb, gub in report.bound_trace:
                    self.assertLessEqual(glb, optimum + FEAS_TOL)
                    self.assertGreaterEqual(gub, optimum - FEAS_TOL)
                self.assertAlmostEqual(report.glb, report.obj)


class OracleAgreementTest(SimpleTestCase):
    policy = PolicyParams.initial(4, hidden=8)
    rules = (
        RandomRule, StrongBranchingRule, PseudocostRule,
        lambda: PolicyRule(OracleAgreementTest.policy),
        lambda: PolicyRule(OracleAgreementTest.policy, greedy=True),
    )

    def test_every_configuration_finds_the_optimum(self):
        for inst in tiny_instances():
            optimum = brute_force_solve(inst, settings.TREEBRANCH['ENUM_CAP']).obj_value
            for node_selection in NodeSelection:
                for make_rule in self.rules:
                    for limit in (None, optimum + 0.5):
                        rule = make_rule()
                        report = solve(inst, SolveConfig(
                            branching_rule=rule, node_selection=node_selection, objective_limit=limit, rng_seed=3,
                        ))
                        label = dict(instance=inst.name, selection=node_selection, rule=rule.spec, limit=limit)
                        with self.subTest(**label):
                            self.assertEqual(report.status, SolveStatus.OPTIMAL)
                            self.assertAlmostEqual(report.obj, optimum, delta=1e-6)

    def test_objective_limit_at_the_optimum(self):
        for inst in tiny_instances():
            optimum = brute_force_solve(inst, settings.TREEBRANCH['ENUM_CAP']).obj_value
            report = solve(inst, SolveConfig(branching_rule=RandomRule(), objective_limit=optimum, rng_seed=5))
            with self.subTest(instance=inst.name):
                self.assertEqual(report.status, SolveStatus.OBJECTIVE_LIMIT)
                self.assertEqual(report.obj, optimum)
                self.assertEqual(report.glb, optimum)
                self.assertIsNone(report.incumbent)
                self.assertEqual(gub_invariant_probe(report, ProbeMode.OBJECTIVE_LIMIT), [])

    def test_depth_first_runs_pass_the_dfs_probe(self):
        for inst in tiny_instances():
            report = solve(inst, SolveConfig(
                branching_rule=RandomRule(), node_selection=NodeSelection.DFS_LEFT_FIRST, rng_seed=9,
            ))
            with self.subTest(instance=inst.name):
                self.assertEqual(gub_invariant_probe(report, ProbeMode.DFS), [])

    def test_objective_limit_probe_needs_a_limit(self):
        report = solve(counterexample_instance(), SolveConfig(branching_rule=RandomRule()))
        with self.assertRaises(InvalidConfig):
            gub_invariant_probe(report, ProbeMode.OBJECTIVE_LIMIT)


class PseudocostTrackerTest(SimpleTestCase):

    def test_gain_is_per_unit_distance(self):
        tracker = PseudocostTracker(3)
        tracker.record(1, True, 0.5, 2.25)
        tracker.record(1, False, 1.5, 2.25)
        self.assertAlmostEqual(tracker.estimate(1, is_left=True), 2.0)
        self.assertAlmostEqual(tracker.estimate(1, is_left=False), 2.0)
        self.assertEqual(tracker.count(1, is_left=True), 1)

    def test_unseen_variables_use_the_average(self):
        tracker = PseudocostTracker(3)
        self.assertEqual(tracker.estimate(0, is_left=True), 1.0)
        tracker.record(0, True, 1.0, 0.5)
        tracker.record(1, True, 3.0, 0.5)
        self.assertAlmostEqual(tracker.estimate(2, is_left=True), 4.0)

    def test_reliability_needs_both_sides(self):
        tracker = PseudocostTracker(1)
        for _ in range(4):
            tracker.record(0, True, 1.0, 0.5)
        self.assertFalse(tracker.is_reliable(0, 4))
        for _ in range(4):
            tracker.record(0, False, 1.0, 0.5)
        self.assertTrue(tracker.is_reliable(0, 4))


class ReportFileTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_report_lists_nodes_in_processing_order(self):
        report = solve(counterexample_instance(), SolveConfig(
            branching_rule=FirstVariableRule(), child_order=ChildOrder.RIGHT_FIRST,
        ))
        payload = report_to_dict(report)
        self.assertEqual([node['id'] for node in payload['nodes']], [0, 2, 1])
        self.assertEqual(payload['nodes'][0]['action']['var'], 0)
        self.assertAlmostEqual(payload['nodes'][0]['action']['split'], 0.6)
        self.assertEqual(payload['nodes'][2]['gub'], 1.0)
        self.assertEqual(payload['nodes'][1]['gub'], 'inf')
        self.assertNotIn('wall_time', payload)
        self.assertIn('wall_time', report_to_dict(report, timings=True))

    def test_read_back(self):
        report = solve(counterexample_instance(), SolveConfig(branching_rule=RandomRule()))
        path = self.dir / 'report.json'
        write_report(report, path, instance_path='fixtures/counterexample.json')
        payload = read_report(path)
        self.assertEqual(payload['node_count'], 3)
        self.assertEqual(payload['config']['brancher'], 'random')
        self.assertEqual(payload['instance_path'], 'fixtures/counterexample.json')

    def test_unknown_report_version(self):
        path = self.dir / 'report.json'
        path.write_text('{"format": 7}')
        with self.assertRaises(VersionMismatch):
            read_report(path)


class SolveCommandTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        self.instance = self.dir / 'inst.json'
        write_instance(generate(GenConfig(Family.SET_COVER, {'items': 5, 'sets': 8}, 1)), self.instance)

    def solve(self, out, **kwargs):
        call_command('solve', instance=str(self.instance), out=str(out), stdout=StringIO(), **kwargs)

    def test_same_seed_gives_identical_reports(self):
        self.solve(self.dir / 'a.json', brancher='random', seed=7)
        self.solve(self.dir / 'b.json', brancher='random', seed=7)
        self.assertEqual((self.dir / 'a.json').read_bytes(), (self.dir / 'b.json').read_bytes())

    def test_report_records_the_configuration(self):
        self.solve(self.dir / 'a.json', brancher='pseudocost:2', node_selection='dfs', seed=3)
        payload = read_report(self.dir / 'a.json')
        self.assertEqual(payload['config']['brancher'], 'pseudocost:2')
        self.assertEqual(payload['config']['node_selection'], 'dfs')
        self.assertEqual(payload['config']['rng_seed'], 3)

    def test_unknown_brancher(self):
        with self.assertRaises(CommandError):
            self.solve(self.dir / 'a.json', brancher='sideways')

    def test_missing_policy_file(self):
        with self.assertRaises(CommandError):
            self.solve(self.dir / 'a.json', brancher=f"policy:{self.dir / 'missing.npz'}")

    def test_missing_instance(self):
        with self.assertRaises(CommandError):
            call_command('solve', instance=str(self.dir / 'nope.json'), stdout=StringIO())

    def test_unknown_node_selection(self):
        with self.assertRaises(CommandError):
            self.solve(self.dir / 'a.json', node_selection='breadth-first')
