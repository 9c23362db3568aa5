import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from bnb.engine import NodeSelection, SolveConfig, solve
from bnb.nodes import NodeState, fractional_candidates
from bnb.probe import SolverProbe
from bnb.pseudocosts import PseudocostTracker
from core.constants import SB_EPSILON, SB_INFEASIBLE_GAIN
from core.exceptions import InvalidConfig, PolicyNotFound
from instances.generators import SIZE_PRESETS, GenConfig, generate
from lp.simplex import solve_lp
from milp.instance import MilpInstance, lp_relaxation
from policy.features import N_FEATURES
from policy.network import PolicyParams, policy_forward
from policy.storage import save_policy

from .registry import parse_brancher
from .rules import (
    PolicyRule, PseudocostRule, RandomRule, StrongBranchingRule, best_scored, product_score, strong_branching_labels,
)


def two_variable_instance():
    """``min −x0 − 3 x1  s.t.  2 x0 ≤ 1,  10 x1 ≤ 13``; the root LP sits at (0.5, 1.3)."""
    return MilpInstance('two', [-1.0, -3.0], [[2.0, 0.0], [0.0, 10.0]], [1.0, 13.0], [0.0, 0.0], [1.0, 2.0], (0, 1))


def root_node(instance):
    result = solve_lp(lp_relaxation(instance))
    node = NodeState(0, None, None, 0, (), instance.lower.copy(), instance.upper.copy(), local_lb=result.obj_value)
    node.lp_solution = result.x_star
    return node


class LabellingRandomRule(RandomRule):
    """Random branching that also computes strong-branching labels at every node."""

    def select(self, node, candidates, probe):
        self.labels.append(strong_branching_labels(node, candidates, probe))
        return super().select(node, candidates, probe)

    def begin_solve(self, instance, seed):
        super().begin_solve(instance, seed)
        self.labels = []


class ScoreTest(SimpleTestCase):

    def test_product_score(self):
        self.assertAlmostEqual(product_score(2.0, 3.0), 6.0)
        self.assertAlmostEqual(product_score(0.0, 2.0), SB_EPSILON * 2.0)
        self.assertEqual(product_score(math.inf, 0.5), SB_INFEASIBLE_GAIN * 0.5)

    def test_ties_go_to_the_lowest_variable(self):
        self.assertEqual(best_scored([(4, 1.0), (2, 3.0), (1, 3.0)]), 2)
        self.assertEqual(best_scored([(0, 5.0)]), 0)


class StrongBranchingTest(SimpleTestCase):

    def test_labels_from_child_lps(self):
        inst = two_variable_instance()
        node = root_node(inst)
        probe = SolverProbe(inst, lp_relaxation(inst), PseudocostTracker(2), lambda: math.inf)
        lower, upper = node.lower.copy(), node.upper.copy()
        labels = strong_branching_labels(node, [(0, 0.5), (1, 1.3)], probe)
        self.assertEqual([j for j, _ in labels], [0, 1])
        self.assertAlmostEqual(labels[0][1], 0.5 * SB_INFEASIBLE_GAIN)
        self.assertAlmostEqual(labels[1][1], 0.9 * SB_INFEASIBLE_GAIN)
        np.testing.assert_array_equal(node.lower, lower)
        np.testing.assert_array_equal(node.upper, upper)

    def test_labels_do_not_feed_the_pseudocosts(self):
        inst = two_variable_instance()
        tracker = PseudocostTracker(2)
        probe = SolverProbe(inst, lp_relaxation(inst), tracker, lambda: math.inf)
        strong_branching_labels(root_node(inst), [(0, 0.5), (1, 1.3)], probe)
        np.testing.assert_array_equal(tracker.counts, 0)
        np.testing.assert_array_equal(tracker.sums, 0.0)

    @settings(max_examples=10, deadline=None)
    @given(st.permutations([(0, 0.5), (1, 1.3)]))
    def test_labels_follow_the_variables_not_the_order(self, candidates):
        inst = two_variable_instance()
        probe = SolverProbe(inst, lp_relaxation(inst), PseudocostTracker(2), lambda: math.inf)
        labels = strong_branching_labels(root_node(inst), candidates, probe)
        self.assertEqual([j for j, _ in labels], [j for j, _ in candidates])
        scores = dict(labels)
        self.assertAlmostEqual(scores[0], 0.5 * SB_INFEASIBLE_GAIN)
        self.assertAlmostEqual(scores[1], 0.9 * SB_INFEASIBLE_GAIN)

    def test_shuffled_candidates_keep_their_scores(self):
        rng = np.random.default_rng(0)
        for family, sizes in SIZE_PRESETS['tiny'].items():
            inst = generate(GenConfig(family, sizes, 3))
            node = root_node(inst)
            if node.lp_solution is None:
                continue
            candidates = fractional_candidates(node, inst.int_set)
            probe = SolverProbe(inst, lp_relaxation(inst), PseudocostTracker(inst.n_vars), lambda: math.inf)
            shuffled = [candidates[k] for k in rng.permutation(len(candidates))]
            with self.subTest(family=family):
                self.assertEqual(
                    dict(strong_branching_labels(node, candidates, probe)),
                    dict(strong_branching_labels(node, shuffled, probe)),
                )

    def test_labelling_leaves_the_solve_untouched(self):
        inst = generate(GenConfig('setcover', {'items': 6, 'sets': 10}, 5))
        for selection in NodeSelection:
            config = dict(node_selection=selection, rng_seed=3, record_bounds=True)
            plain = solve(inst, SolveConfig(branching_rule=RandomRule(), **config))
            rule = LabellingRandomRule()
            labelled = solve(inst, SolveConfig(branching_rule=rule, **config))
            with self.subTest(selection=selection):
                self.assertEqual(len(rule.labels), sum(1 for n in plain.nodes if n.action is not None))
                self.assertEqual(labelled.node_count, plain.node_count)
                self.assertEqual(labelled.processed_order, plain.processed_order)
                self.assertEqual([n.status for n in labelled.nodes], [n.status for n in plain.nodes])
                self.assertEqual(labelled.bound_trace, plain.bound_trace)
                self.assertEqual((labelled.obj, labelled.glb), (plain.obj, plain.glb))

    def test_strong_branching_picks_the_larger_bound_gain(self):
        report = solve(two_variable_instance(), SolveConfig(branching_rule=StrongBranchingRule()))
        self.assertEqual(report.nodes[0].action.var_index, 1)
        self.assertIsNone(report.nodes[0].action.decision)
        self.assertAlmostEqual(report.obj, -3.0)

    def test_recorded_features_label_the_choice(self):
        report = solve(two_variable_instance(), SolveConfig(branching_rule=StrongBranchingRule(record_features=True)))
        decision = report.nodes[0].action.decision
        self.assertEqual(decision.features.shape, (2, N_FEATURES))
        self.assertEqual(decision.candidate_vars, (0, 1))
        self.assertEqual(decision.chosen, 1)

    def test_infinite_reliability_is_strong_branching(self):
        for family, sizes in SIZE_PRESETS['tiny'].items():
            inst = generate(GenConfig(family, sizes, 1))
            strong = solve(inst, SolveConfig(branching_rule=StrongBranchingRule()))
            pseudo = solve(inst, SolveConfig(branching_rule=PseudocostRule(math.inf)))
            with self.subTest(family=family):
                self.assertEqual(strong.processed_order, pseudo.processed_order)
                self.assertEqual(
                    [n.action.var_index for n in strong.processed_nodes() if n.action],
                    [n.action.var_index for n in pseudo.processed_nodes() if n.action],
                )


class PseudocostRuleTest(SimpleTestCase):

    def test_reliable_estimates_favour_the_most_fractional_variable(self):
        report = solve(two_variable_instance(), SolveConfig(branching_rule=PseudocostRule(0)))
        self.assertEqual(report.nodes[0].action.var_index, 0)

    def test_spec_strings(self):
        self.assertEqual(PseudocostRule().spec, 'pseudocost')
        self.assertEqual(PseudocostRule(8).spec, 'pseudocost:8')


class RandomRuleTest(SimpleTestCase):

    def test_only_candidates_are_chosen_and_seed_repeats(self):
        inst = generate(GenConfig('cauctions', {'items': 8, 'bids': 20}, 4))
        runs = [solve(inst, SolveConfig(branching_rule=RandomRule(), rng_seed=seed)) for seed in (1, 1, 2)]
        self.assertEqual(runs[0].processed_order, runs[1].processed_order)
        for report in runs:
            for node in report.processed_nodes():
                if node.action is not None:
                    self.assertNotEqual(node.lp_solution[node.action.var_index] % 1.0, 0.0)


class PolicyRuleTest(SimpleTestCase):

    def test_greedy_policy_takes_the_highest_logit(self):
        params = PolicyParams.initial(3, hidden=8)
        report = solve(two_variable_instance(), SolveConfig(branching_rule=PolicyRule(params, greedy=True)))
        decision = report.nodes[0].action.decision
        probs, logits = policy_forward(params, decision.features)
        self.assertEqual(decision.chosen, int(np.argmax(logits)))
        np.testing.assert_allclose(decision.probs, probs)
        self.assertAlmostEqual(float(decision.probs.sum()), 1.0)

    def test_sampling_depends_only_on_the_seed(self):
        params = PolicyParams.initial(5, hidden=8)
        inst = generate(GenConfig('setcover', {'items': 5, 'sets': 8}, 2))
        first = solve(inst, SolveConfig(branching_rule=PolicyRule(params), rng_seed=11))
        second = solve(inst, SolveConfig(branching_rule=PolicyRule(params), rng_seed=11))
        self.assertEqual(
            [n.action.decision.chosen for n in first.processed_nodes() if n.action],
            [n.action.decision.chosen for n in second.processed_nodes() if n.action],
        )


class ParseBrancherTest(SimpleTestCase):

    def test_builtin_rules(self):
        self.assertIsInstance(parse_brancher('random'), RandomRule)
        self.assertIsInstance(parse_brancher('strong'), StrongBranchingRule)
        self.assertEqual(parse_brancher('pseudocost').reliability, 4)
        self.assertEqual(parse_brancher('pseudocost:0').reliability, 0)
        self.assertEqual(parse_brancher('pseudocost:inf').reliability, math.inf)

    def test_policy_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'policy.npz'
            save_policy(PolicyParams.initial(0), path)
            rule = parse_brancher(f"policy-greedy:{path}")
            self.assertTrue(rule.greedy)
            self.assertEqual(rule.spec, f"policy-greedy:{path}")
            self.assertFalse(parse_brancher(f"policy:{path}").greedy)
            with self.assertRaises(PolicyNotFound):
                parse_brancher(f"policy:{Path(tmp) / 'other.npz'}")

    def test_rejected_specs(self):
        for spec in ('', 'strongest', 'random:3', 'pseudocost:-1', 'pseudocost:many', 'policy'):
            with self.subTest(spec=spec), self.assertRaises(InvalidConfig):
                parse_brancher(spec)
