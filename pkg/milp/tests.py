import math
import tempfile
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from django.conf import settings
from django.test import SimpleTestCase

from core.exceptions import DimensionMismatch, InvalidInstance, ParseError, TooLarge, VersionMismatch
from lp.problem import LpStatus
from lp.simplex import solve_lp

from .fixtures import counterexample_instance
from .instance import MilpInstance, check_feasible, lp_relaxation
from .io import dumps_instance, read_instance, write_instance
from .oracle import brute_force_solve


def random_instance(seed):
    rng = np.random.default_rng(seed)
    n_vars = int(rng.integers(1, 8))
    n_rows = int(rng.integers(0, 6))
    density = rng.uniform(0.2, 1.0)
    dense = rng.integers(-9, 10, size=(n_rows, n_vars)) * (rng.random((n_rows, n_vars)) < density)
    lower = rng.integers(-3, 2, size=n_vars).astype(float)
    upper = lower + rng.integers(0, 5, size=n_vars)
    if n_vars > 1:
        upper[rng.integers(n_vars)] = math.inf
        lower[rng.integers(n_vars)] = -math.inf
    int_set = tuple(j for j in range(n_vars) if rng.random() < 0.6)
    return MilpInstance(
        name=f"random-{seed}",
        obj=rng.normal(size=n_vars),
        rows=sp.csr_matrix(dense.astype(float)),
        rhs=rng.normal(size=n_rows) * 5,
        lower=lower,
        upper=upper,
        int_set=int_set,
    )


class LpRelaxationTest(SimpleTestCase):

    def test_counterexample_relaxation_drops_integrality(self):
        inst = counterexample_instance()
        relaxation = lp_relaxation(inst)
        np.testing.assert_array_equal(relaxation.obj, inst.obj)
        np.testing.assert_array_equal(relaxation.lower, [0.0])
        np.testing.assert_array_equal(relaxation.upper, [10.0])
        self.assertAlmostEqual(solve_lp(relaxation).obj_value, 0.6)

    def test_pure_lp_relaxation_is_identity(self):
        inst = MilpInstance('pure', [1.0, -2.0], [[1.0, 1.0]], [4.0], [0.0, 0.0], [3.0, 3.0])
        relaxation = lp_relaxation(inst)
        self.assertEqual(relaxation.n_vars, inst.n_vars)
        self.assertEqual(relaxation.n_rows, inst.n_rows)
        np.testing.assert_array_equal(relaxation.dense_rows(), inst.dense_rows())
        np.testing.assert_array_equal(relaxation.rhs, inst.rhs)


class InstanceValidationTest(SimpleTestCase):

    def test_int_set_must_increase(self):
        with self.assertRaises(InvalidInstance):
            MilpInstance('bad', [1.0, 1.0], np.zeros((0, 2)), [], [0, 0], [1, 1], (1, 0))

    def test_int_set_must_be_in_range(self):
        with self.assertRaises(InvalidInstance):
            MilpInstance('bad', [1.0], np.zeros((0, 1)), [], [0], [1], (1,))

    def test_integer_bounds_must_be_integral(self):
        with self.assertRaises(InvalidInstance):
            MilpInstance('bad', [1.0], np.zeros((0, 1)), [], [0.5], [1], (0,))


class CheckFeasibleTest(SimpleTestCase):

    def test_integral_point_is_feasible(self):
        check = check_feasible(counterexample_instance(), [1.0])
        self.assertTrue(check.is_feasible)
        self.assertEqual(check.max_violation, 0.0)

    def test_fractional_point_violates_integrality(self):
        check = check_feasible(counterexample_instance(), [0.6])
        self.assertFalse(check.is_feasible)
        self.assertAlmostEqual(check.max_violation, 0.4)

    def test_row_violation_reported(self):
        check = check_feasible(counterexample_instance(), [0.0])
        self.assertFalse(check.is_feasible)
        self.assertAlmostEqual(check.max_violation, 0.6)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            check_feasible(counterexample_instance(), [1.0, 2.0])


class BruteForceTest(SimpleTestCase):

    def test_counterexample_optimum(self):
        solution = brute_force_solve(counterexample_instance(), enum_cap=100)
        self.assertTrue(solution.is_feasible)
        self.assertEqual(solution.obj_value, 1.0)
        np.testing.assert_array_equal(solution.x, [1.0])

    def test_pure_lp_matches_solve_lp(self):
        inst = MilpInstance('pure', [1.0, -2.0], [[1.0, 1.0]], [4.0], [0.0, 0.0], [3.0, 3.0])
        solution = brute_force_solve(inst, enum_cap=1)
        self.assertAlmostEqual(solution.obj_value, solve_lp(lp_relaxation(inst)).obj_value)

    def test_mixed_instance_solves_continuous_remainder(self):
        inst = MilpInstance('mixed', [-1.0, -1.0], [[1.0, 1.0]], [2.5], [0.0, 0.0], [3.0, 0.7], (0,))
        solution = brute_force_solve(inst, enum_cap=10)
        self.assertAlmostEqual(solution.obj_value, -2.5)
        np.testing.assert_allclose(solution.x, [2.0, 0.5])

    def test_infeasible_instance_has_no_solution(self):
        inst = MilpInstance('none', [1.0], [[1.0], [-1.0]], [0.7, -0.2], [0.0], [1.0], (0,))
        self.assertIsNone(brute_force_solve(inst, enum_cap=10))

    def test_unbounded_continuous_part_makes_the_instance_unbounded(self):
        inst = MilpInstance('ray', [0.0, -1.0], [[1.0, -1.0]], [0.0], [0.0, 0.0], [1.0, math.inf], (0,))
        solution = brute_force_solve(inst, enum_cap=10)
        self.assertTrue(solution.is_unbounded)
        self.assertEqual(solution.obj_value, -math.inf)
        self.assertIsNone(solution.x)

    def test_unbounded_lp_without_integers(self):
        inst = MilpInstance('free', [-1.0], [[-1.0]], [0.0], [0.0], [math.inf])
        self.assertTrue(brute_force_solve(inst, enum_cap=1).is_unbounded)
        self.assertFalse(brute_force_solve(counterexample_instance(), enum_cap=100).is_unbounded)

    def test_enumeration_cap(self):
        inst = MilpInstance('big', np.ones(30), np.zeros((0, 30)), [], np.zeros(30), np.ones(30), tuple(range(30)))
        with self.assertRaises(TooLarge):
            brute_force_solve(inst, enum_cap=settings.TREEBRANCH['ENUM_CAP'])

    def test_pure_enumeration_agrees_with_mixed_path(self):
        compared = 0
        for seed in range(40):
            inst = random_instance(seed)
            if inst.n_vars > 4:
                continue
            compared += 1
            boxed = MilpInstance(
                inst.name, inst.obj, inst.rows, inst.rhs,
                np.where(np.isfinite(inst.lower), inst.lower, -2.0),
                np.where(np.isfinite(inst.upper), inst.upper, 2.0),
                tuple(range(inst.n_vars)),
            )
            fast = brute_force_solve(boxed, enum_cap=10 ** 6)
            relaxed_int = MilpInstance(
                boxed.name, np.append(boxed.obj, 0.0),
                sp.hstack([boxed.rows, sp.csr_matrix((boxed.n_rows, 1))]),
                boxed.rhs, np.append(boxed.lower, 0.0), np.append(boxed.upper, 0.0), boxed.int_set,
            )
            slow = brute_force_solve(relaxed_int, enum_cap=10 ** 6)
            with self.subTest(seed=seed):
                if fast is None:
                    self.assertIsNone(slow)
                else:
                    self.assertAlmostEqual(fast.obj_value, slow.obj_value, places=6)
        self.assertGreater(compared, 0)


class InstanceFileTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = Path(self.tmp.name) / 'inst.json'

    def test_round_trip_on_randomised_instances(self):
        for seed in range(1000):
            inst = random_instance(seed)
            write_instance(inst, self.path)
            self.assertEqual(read_instance(self.path), inst, msg=f"seed {seed}")

    def test_serialisation_is_deterministic(self):
        inst = random_instance(3)
        self.assertEqual(dumps_instance(inst), dumps_instance(random_instance(3)))

    def test_infinite_bounds_use_strings(self):
        inst = MilpInstance('free', [1.0], np.zeros((0, 1)), [], [-math.inf], [math.inf])
        text = dumps_instance(inst)
        self.assertIn('"lower": ["-inf"]', text)
        self.assertIn('"upper": ["inf"]', text)

    def test_hand_written_counterexample_file(self):
        path = Path(settings.BASE_DIR) / 'fixtures' / 'counterexample.json'
        inst = read_instance(path)
        self.assertEqual(inst, counterexample_instance())
        result = solve_lp(lp_relaxation(inst))
        self.assertEqual(result.status, LpStatus.OPTIMAL)
        self.assertAlmostEqual(result.obj_value, 0.6)

    def test_integer_index_out_of_range(self):
        text = dumps_instance(counterexample_instance()).replace('"int_set": [0]', '"int_set": [1]')
        self.path.write_text(text)
        with self.assertRaises(ParseError) as ctx:
            read_instance(self.path)
        self.assertEqual(ctx.exception.field, 'int_set')
        self.assertEqual(ctx.exception.line, 11)

    def test_malformed_json_reports_line(self):
        self.path.write_text('{\n  "format": 1,\n  "name": oops\n}\n')
        with self.assertRaises(ParseError) as ctx:
            read_instance(self.path)
        self.assertEqual(ctx.exception.line, 3)

    def test_binary_file_is_a_parse_error(self):
        self.path.write_bytes(b'{"format": 1, "name": "\xff\xfe"}')
        with self.assertRaises(ParseError) as ctx:
            read_instance(self.path)
        self.assertEqual(ctx.exception.path, self.path)
        self.assertIn(str(self.path), str(ctx.exception))

    def test_unknown_format_version(self):
        text = dumps_instance(counterexample_instance()).replace('"format": 1', '"format": 2')
        self.path.write_text(text)
        with self.assertRaises(VersionMismatch):
            read_instance(self.path)
