import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from hypothesis import assume, given, settings, strategies as st

from bnb.nodes import NodeState
from bnb.pseudocosts import PseudocostTracker
from core.exceptions import ParseError, PolicyNotFound, VersionMismatch
from milp.instance import MilpInstance

from .features import FEATURE_NAMES, N_FEATURES, featurize, instance_stats
from .network import (
    PolicyParams, entropy_grad, greedy_action, logprob_grad, policy_forward, sample_action, sample_index,
)
from .storage import POLICY_VERSION, load_policy, save_policy

STEP = 1e-6


def numeric_gradient(fn, params):
    theta = params.flatten()
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        step = np.zeros_like(theta)
        step[k] = STEP
        grad[k] = (fn(params.like(theta + step)) - fn(params.like(theta - step))) / (2 * STEP)
    return grad


def random_case(seed):
    rng = np.random.default_rng(seed)
    n_features, hidden, k = int(rng.integers(1, 5)), int(rng.integers(1, 6)), int(rng.integers(1, 6))
    params = PolicyParams.initial(seed, n_features=n_features, hidden=hidden)
    return params, rng.normal(size=(k, n_features)), int(rng.integers(k))


class FixedDraw:
    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


class GradientTest(SimpleTestCase):

    def test_logprob_gradient_matches_finite_differences(self):
        for seed in range(100):
            params, features, chosen = random_case(seed)
            _, grad = logprob_grad(params, features, chosen)
            numeric = numeric_gradient(lambda p: logprob_grad(p, features, chosen)[0], params)
            np.testing.assert_allclose(grad.flatten(), numeric, rtol=1e-4, atol=1e-7, err_msg=f"seed {seed}")

    def test_entropy_gradient_matches_finite_differences(self):
        for seed in range(100):
            params, features, _ = random_case(seed)
            _, grad = entropy_grad(params, features)
            numeric = numeric_gradient(lambda p: entropy_grad(p, features)[0], params)
            np.testing.assert_allclose(grad.flatten(), numeric, rtol=1e-4, atol=1e-7, err_msg=f"seed {seed}")

    def test_output_bias_has_no_gradient(self):
        params, features, chosen = random_case(7)
        self.assertAlmostEqual(logprob_grad(params, features, chosen)[1].b2, 0.0)
        self.assertAlmostEqual(entropy_grad(params, features)[1].b2, 0.0)


class ForwardTest(SimpleTestCase):

    def test_zero_parameters_are_uniform(self):
        params = PolicyParams.zeros(n_features=3, hidden=4)
        probs, _ = policy_forward(params, np.ones((2, 3)))
        np.testing.assert_allclose(probs, [0.5, 0.5])
        logp, _ = logprob_grad(params, np.ones((2, 3)), 0)
        self.assertAlmostEqual(-logp, math.log(2))
        entropy, _ = entropy_grad(params, np.ones((2, 3)))
        self.assertAlmostEqual(entropy, math.log(2))

    def test_single_candidate_is_certain(self):
        params = PolicyParams.initial(1, n_features=3, hidden=4)
        probs, _ = policy_forward(params, np.ones((1, 3)))
        np.testing.assert_array_equal(probs, [1.0])
        entropy, grad = entropy_grad(params, np.ones((1, 3)))
        self.assertAlmostEqual(entropy, 0.0)
        np.testing.assert_allclose(grad.flatten(), 0.0, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32))
    def test_probabilities_form_a_distribution(self, seed):
        params, features, _ = random_case(seed)
        probs, _ = policy_forward(params, features * 50.0)
        self.assertTrue(np.all(probs > 0.0))
        self.assertAlmostEqual(float(probs.sum()), 1.0)

    def test_extreme_logits_keep_every_candidate_possible(self):
        params = PolicyParams(W1=np.eye(2), b1=np.zeros(2), w2=np.array([2000.0, 0.0]), b2=0.0)
        features = np.array([[1.0, 0.0], [-1.0, 0.0]])
        probs, logits = policy_forward(params, features)
        self.assertGreater(logits[0] - logits[1], 1000.0)
        self.assertTrue(np.all(probs > 0.0))
        self.assertAlmostEqual(float(probs.sum()), 1.0)
        logp, grad = logprob_grad(params, features, 1)
        self.assertTrue(math.isfinite(logp))
        self.assertTrue(np.all(np.isfinite(grad.flatten())))
        entropy, _ = entropy_grad(params, features)
        self.assertTrue(math.isfinite(entropy))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32), st.randoms(use_true_random=False))
    def test_permuting_candidates_permutes_probabilities(self, seed, random):
        params, features, _ = random_case(seed)
        order = list(range(features.shape[0]))
        random.shuffle(order)
        probs, _ = policy_forward(params, features)
        permuted, _ = policy_forward(params, features[order])
        np.testing.assert_allclose(permuted, probs[order], rtol=1e-12, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32), st.floats(min_value=-50.0, max_value=50.0))
    def test_logit_shift_leaves_probabilities_unchanged(self, seed, shift):
        params, features, _ = random_case(seed)
        moved = PolicyParams(params.W1, params.b1, params.w2, params.b2 + shift)
        np.testing.assert_allclose(
            policy_forward(moved, features)[0], policy_forward(params, features)[0], rtol=1e-9, atol=1e-12,
        )

    @settings(max_examples=50, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2 ** 32),
        st.floats(min_value=0.1, max_value=10.0),
        st.floats(min_value=-5.0, max_value=5.0),
    )
    def test_greedy_choice_survives_positive_affine_logits(self, seed, scale, offset):
        params, features, _ = random_case(seed)
        _, logits = policy_forward(params, features)
        ranked = np.sort(logits)
        assume(ranked.size < 2 or ranked[-1] - ranked[-2] > 1e-9)
        transformed = PolicyParams(params.W1, params.b1, params.w2 * scale, params.b2 * scale + offset)
        self.assertEqual(greedy_action(transformed, features), greedy_action(params, features))

    def test_inverse_cdf_sampling(self):
        probs = np.array([0.2, 0.3, 0.5])
        self.assertEqual(sample_index(probs, FixedDraw(0.1)), 0)
        self.assertEqual(sample_index(probs, FixedDraw(0.2)), 1)
        self.assertEqual(sample_index(probs, FixedDraw(0.6)), 2)
        self.assertEqual(sample_index(probs, FixedDraw(0.999999)), 2)

    def test_sample_frequencies_follow_the_policy(self):
        params, features, _ = random_case(3)
        probs, _ = policy_forward(params, features)
        rng = np.random.default_rng(0)
        counts = np.bincount([sample_action(params, features, rng) for _ in range(20000)], minlength=probs.size)
        np.testing.assert_allclose(counts / 20000, probs, atol=0.02)

    def test_greedy_ties_take_the_first_candidate(self):
        params = PolicyParams.zeros(n_features=2, hidden=3)
        self.assertEqual(greedy_action(params, np.zeros((4, 2))), 0)

    def test_flat_round_trip(self):
        params = PolicyParams.initial(9, n_features=4, hidden=5)
        self.assertTrue(params.like(params.flatten()).equals(params))
        self.assertEqual(params.size, 4 * 5 + 5 + 5 + 1)
        self.assertTrue((params + params.scaled(-1.0)).equals(PolicyParams.zeros(4, 5)))


class FeatureTest(SimpleTestCase):

    def setUp(self):
        self.instance = MilpInstance(
            'feat', [2.0, -4.0, 1.0], [[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]], [3.0, 2.0],
            [0.0, 0.0, 0.0], [1.0, 3.0, 1.0], (0, 1, 2),
        )
        self.stats = instance_stats(self.instance)
        self.node = NodeState(
            4, 1, True, 2, ((1, 'upper', 3.0), (1, 'lower', 1.0)),
            np.array([0.0, 1.0, 0.0]), np.array([1.0, 3.0, 1.0]),
        )

    def test_columns(self):
        features = featurize(self.node, [(0, 0.25), (1, 1.5)], self.stats, self.instance, gub=7.0)
        self.assertEqual(features.shape, (2, N_FEATURES))
        self.assertEqual(len(FEATURE_NAMES), N_FEATURES)
        np.testing.assert_allclose(features[:, 0], [0.25, 0.5])
        np.testing.assert_allclose(features[:, 1], [0.5, 1.0])
        np.testing.assert_allclose(features[:, 2], [2.0 / 5.0, -4.0 / 5.0])
        np.testing.assert_allclose(features[:, 6], [0.5, 1.0])
        np.testing.assert_allclose(features[:, 10], [0.0, 2.0 / 3.0])
        np.testing.assert_allclose(features[:, 11], [1.0, 1.0])
        np.testing.assert_allclose(features[:, 8:10], 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.permutations([(0, 0.25), (1, 1.5), (2, 0.5)]))
    def test_permuting_candidates_permutes_rows(self, candidates):
        tracker = PseudocostTracker(3)
        tracker.record(1, True, 2.0, 0.5)
        reference = [(0, 0.25), (1, 1.5), (2, 0.5)]
        expected = featurize(self.node, reference, self.stats, self.instance, tracker, gub=7.0)
        features = featurize(self.node, candidates, self.stats, self.instance, tracker, gub=7.0)
        order = [reference.index(candidate) for candidate in candidates]
        np.testing.assert_array_equal(features, expected[order])

    def test_pseudocost_columns_are_squashed(self):
        tracker = PseudocostTracker(3)
        tracker.record(0, False, 3.0, 0.25)
        features = featurize(self.node, [(0, 0.25)], self.stats, self.instance, tracker)
        self.assertAlmostEqual(features[0, 8], 4.0 / 5.0)
        self.assertAlmostEqual(features[0, 9], 0.5)
        self.assertEqual(features[0, 11], 0.0)

    def test_features_are_finite_with_unbounded_domains(self):
        inst = MilpInstance('free', [1.0], np.zeros((0, 1)), [], [-math.inf], [math.inf], (0,))
        node = NodeState(0, None, None, 0, (), inst.lower.copy(), inst.upper.copy())
        features = featurize(node, [(0, 0.5)], instance_stats(inst), inst)
        self.assertTrue(np.all(np.isfinite(features)))


class PolicyFileTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = Path(self.tmp.name) / 'policy.npz'

    def test_round_trip(self):
        params = PolicyParams.initial(2)
        save_policy(params, self.path)
        self.assertTrue(load_policy(self.path).equals(params))

    def test_missing_file(self):
        with self.assertRaises(PolicyNotFound):
            load_policy(self.path)

    def test_not_an_archive(self):
        self.path.write_bytes(b'not a policy')
        with self.assertRaises(ParseError):
            load_policy(self.path)

    def test_version_mismatch(self):
        params = PolicyParams.initial(2)
        with self.path.open('wb') as fh:
            np.savez(fh, format_version=np.array(POLICY_VERSION + 1), W1=params.W1, b1=params.b1, w2=params.w2, b2=0.0)
        with self.assertRaises(VersionMismatch):
            load_policy(self.path)

    def test_feature_count_must_match(self):
        save_policy(PolicyParams.initial(2, n_features=5), self.path)
        with self.assertRaises(ParseError):
            load_policy(self.path)
        self.assertEqual(load_policy(self.path, n_features=5).n_features, 5)
