import itertools
import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from core.constants import FEAS_TOL
from core.exceptions import DimensionMismatch, InvalidInstance

from .problem import LpProblem, LpStatus
from .simplex import solve_lp

INF = math.inf


def enumerate_vertices(c, a, b, lower, upper):
    """Minimum of c·x over every basic feasible solution of a small boxed LP."""
    n = c.size
    g = np.vstack([a, -np.eye(n), np.eye(n)])
    h = np.concatenate([b, -lower, upper])
    best = None
    for active in itertools.combinations(range(g.shape[0]), n):
        system = g[list(active)]
        if abs(np.linalg.det(system)) < 1e-9:
            continue
        x = np.linalg.solve(system, h[list(active)])
        if np.all(g @ x <= h + 1e-9):
            value = float(c @ x)
            best = value if best is None else min(best, value)
    return best


def random_boxed_lp(seed, n_vars=3, n_rows=4):
    rng = np.random.default_rng(seed)
    c = rng.integers(-9, 10, size=n_vars).astype(float)
    a = rng.integers(-9, 10, size=(n_rows, n_vars)).astype(float)
    b = rng.integers(-9, 10, size=n_rows).astype(float)
    return LpProblem(c, a, b, np.zeros(n_vars), np.full(n_vars, 10.0))


class SolveLpExamplesTest(SimpleTestCase):

    def test_single_lower_row_gives_fractional_vertex(self):
        problem = LpProblem([1.0], [[-1.0]], [-0.6], [0.0], [INF])
        result = solve_lp(problem)
        self.assertEqual(result.status, LpStatus.OPTIMAL)
        self.assertAlmostEqual(result.x_star[0], 0.6, places=9)
        self.assertAlmostEqual(result.obj_value, 0.6, places=9)

    def test_no_rows_sits_at_lower_bound(self):
        problem = LpProblem([0.0], np.zeros((0, 1)), [], [2.0], [5.0])
        result = solve_lp(problem)
        self.assertEqual(result.status, LpStatus.OPTIMAL)
        self.assertEqual(result.x_star[0], 2.0)
        self.assertEqual(result.obj_value, 0.0)

    def test_no_rows_negative_cost_goes_to_upper_bound(self):
        problem = LpProblem([-1.0, 2.0], np.zeros((0, 2)), [], [0.0, -1.0], [4.0, 3.0])
        result = solve_lp(problem)
        np.testing.assert_allclose(result.x_star, [4.0, -1.0])
        self.assertAlmostEqual(result.obj_value, -6.0)

    def test_infeasible_rows(self):
        problem = LpProblem([1.0], [[-1.0], [1.0]], [-2.0, 1.0], [0.0], [INF])
        self.assertEqual(solve_lp(problem).status, LpStatus.INFEASIBLE)

    def test_crossed_bounds_are_infeasible(self):
        problem = LpProblem([1.0], [[1.0]], [5.0], [3.0], [2.0])
        self.assertEqual(solve_lp(problem).status, LpStatus.INFEASIBLE)

    def test_unbounded_ray(self):
        problem = LpProblem([-1.0, 0.0], [[0.0, 1.0]], [1.0], [0.0, 0.0], [INF, INF])
        self.assertEqual(solve_lp(problem).status, LpStatus.UNBOUNDED)

    def test_free_variable(self):
        problem = LpProblem([1.0], [[-1.0]], [3.0], [-INF], [INF])
        result = solve_lp(problem)
        self.assertEqual(result.status, LpStatus.OPTIMAL)
        self.assertAlmostEqual(result.x_star[0], -3.0)

    def test_upper_bounded_only_variable(self):
        problem = LpProblem([-1.0], [[1.0]], [7.0], [-INF], [4.0])
        result = solve_lp(problem)
        self.assertAlmostEqual(result.x_star[0], 4.0)

    def test_beale_cycling_example_terminates(self):
        c = np.array([-0.75, 20.0, -0.5, 6.0])
        a = np.array([
            [0.25, -8.0, -1.0, 9.0],
            [0.5, -12.0, -0.5, 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        b = np.array([0.0, 0.0, 1.0])
        result = solve_lp(LpProblem(c, a, b, np.zeros(4), np.full(4, INF)))
        self.assertEqual(result.status, LpStatus.OPTIMAL)
        self.assertAlmostEqual(result.obj_value, -1.25, places=7)

    def test_rejects_shape_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            LpProblem([1.0, 2.0], [[1.0]], [1.0], [0.0, 0.0], [1.0, 1.0])

    def test_rejects_non_finite_coefficients(self):
        with self.assertRaises(InvalidInstance):
            LpProblem([np.nan], [[1.0]], [1.0], [0.0], [1.0])


class SolveLpPropertiesTest(SimpleTestCase):

    def test_matches_vertex_enumeration(self):
        for seed in range(60):
            problem = random_boxed_lp(seed)
            expected = enumerate_vertices(
                problem.obj, problem.dense_rows(), problem.rhs, problem.lower, problem.upper
            )
            result = solve_lp(problem)
            with self.subTest(seed=seed):
                if expected is None:
                    self.assertEqual(result.status, LpStatus.INFEASIBLE)
                else:
                    self.assertEqual(result.status, LpStatus.OPTIMAL)
                    self.assertAlmostEqual(result.obj_value, expected, delta=1e-7)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32))
    def test_optimal_results_are_feasible_and_consistent(self, seed):
        problem = random_boxed_lp(seed, n_vars=5, n_rows=6)
        result = solve_lp(problem)
        if result.status != LpStatus.OPTIMAL:
            return
        x = result.x_star
        self.assertTrue(np.all(problem.dense_rows() @ x <= problem.rhs + FEAS_TOL))
        self.assertTrue(np.all(x >= problem.lower - FEAS_TOL))
        self.assertTrue(np.all(x <= problem.upper + FEAS_TOL))
        self.assertLessEqual(
            abs(problem.obj @ x - result.obj_value), FEAS_TOL * (1 + abs(result.obj_value))
        )

    def test_branching_bound_never_decreases_objective(self):
        checked = 0
        for seed in range(200):
            problem = random_boxed_lp(seed, n_vars=4, n_rows=3)
            result = solve_lp(problem)
            if result.status != LpStatus.OPTIMAL:
                continue
            for j, value in enumerate(result.x_star):
                for lower, upper in (
                    (problem.lower[j], math.floor(value)),
                    (math.ceil(value), problem.upper[j]),
                ):
                    new_lower, new_upper = problem.lower.copy(), problem.upper.copy()
                    new_lower[j], new_upper[j] = lower, upper
                    child = solve_lp(problem.with_bounds(new_lower, new_upper))
                    if child.status == LpStatus.OPTIMAL:
                        checked += 1
                        self.assertGreaterEqual(child.obj_value, result.obj_value - FEAS_TOL)
        self.assertGreater(checked, 0)

    def test_identical_input_gives_bitwise_identical_solution(self):
        problem = random_boxed_lp(11, n_vars=6, n_rows=5)
        first, second = solve_lp(problem), solve_lp(problem)
        self.assertEqual(first.status, second.status)
        if first.x_star is not None:
            self.assertEqual(first.x_star.tobytes(), second.x_star.tobytes())
