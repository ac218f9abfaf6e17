import unittest

import numpy as np

from packing_accel.core.lp import (
    DualSolution, PackingLp, check_feasible, dual_objective, min_b, objective, relative_error, row_loads,
)
from packing_accel.errors import DimensionError, InvalidReferenceError, ValidationError


def tiny_lp():
    # 2 x 3, column-major entries
    return PackingLp.from_entries(2, 3, [(0, 0, 0.5), (1, 0, 1.0), (0, 2, 0.25)], b=[1.0, 0.5], c=[3.0, 1.0, 2.0])


class TestPackingLp(unittest.TestCase):
    def test_invariants_rejected(self):
        with self.assertRaises(ValidationError):
            PackingLp.from_entries(1, 2, [(0, 0, 1.5)], b=[1.0], c=[1.0, 1.0])
        with self.assertRaises(ValidationError):
            PackingLp.from_entries(1, 2, [(0, 0, -0.1)], b=[1.0], c=[1.0, 1.0])
        with self.assertRaises(ValidationError):
            PackingLp.from_entries(1, 2, [(0, 0, 0.5)], b=[-1.0], c=[1.0, 1.0])
        with self.assertRaises(ValidationError):
            PackingLp.from_entries(1, 2, [(0, 0, 0.5)], b=[1.0], c=[1.0, -2.0])
        with self.assertRaises(ValidationError):
            PackingLp.from_entries(1, 2, [(0, 2, 0.5)], b=[1.0], c=[1.0, 1.0])

    def test_duplicate_entries_rejected(self):
        with self.assertRaises(ValidationError):
            PackingLp.from_entries(2, 2, [(0, 1, 0.5), (0, 1, 0.6)], b=[1.0, 1.0], c=[1.0, 1.0])

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            PackingLp.from_entries(2, 2, [], b=[1.0], c=[1.0, 1.0])
        with self.assertRaises(DimensionError):
            PackingLp.from_entries(2, 2, [], b=[1.0, 1.0], c=[1.0])

    def test_immutable(self):
        lp = tiny_lp()
        with self.assertRaises(AttributeError):
            lp.m = 5
        with self.assertRaises(ValueError):
            lp.b[0] = 7.0

    def test_column_access(self):
        lp = tiny_lp()
        rows, vals = lp.column(0)
        self.assertEqual(rows.tolist(), [0, 1])
        self.assertEqual(vals.tolist(), [0.5, 1.0])
        rows, vals = lp.column(1)
        self.assertEqual(rows.size, 0)
        with self.assertRaises(DimensionError):
            lp.column(3)

    def test_entries_and_equality(self):
        lp = tiny_lp()
        self.assertEqual(list(lp.entries()), [(0, 0, 0.5), (1, 0, 1.0), (0, 2, 0.25)])
        again = PackingLp.from_dense([[0.5, 0.0, 0.25], [1.0, 0.0, 0.0]], b=[1.0, 0.5], c=[3.0, 1.0, 2.0])
        self.assertEqual(lp, again)
        self.assertEqual(lp.fingerprint(), again.fingerprint())
        other = PackingLp.from_dense([[0.5, 0.0, 0.25], [1.0, 0.0, 0.0]], b=[1.0, 0.5], c=[3.0, 1.0, 2.5])
        self.assertNotEqual(lp, other)
        self.assertNotEqual(lp.fingerprint(), other.fingerprint())

    def test_restrict(self):
        lp = tiny_lp()
        sub = lp.restrict([0, 2], rhs=[0.1, 0.2])
        self.assertEqual((sub.m, sub.n), (2, 2))
        self.assertEqual(sub.c.tolist(), [3.0, 2.0])
        self.assertEqual(sub.b.tolist(), [0.1, 0.2])
        self.assertEqual(sub.A.toarray().tolist(), [[0.5, 0.25], [1.0, 0.0]])

    def test_perturbed(self):
        lp = tiny_lp()
        bumped = lp.perturbed(seed=3)
        self.assertTrue(np.all(bumped.c >= lp.c))
        self.assertTrue(np.all(bumped.c <= lp.c * (1 + 1e-9)))
        self.assertEqual(bumped, lp.perturbed(seed=3))


class TestLpOperations(unittest.TestCase):
    def test_objective(self):
        lp = PackingLp.from_dense(np.zeros((1, 3)), b=[1.0], c=[0.0, 0.0, 0.0])
        self.assertEqual(objective(lp, [1, 0.5, 1]), 0.0)

        ones = PackingLp.from_dense(np.zeros((1, 7)), b=[1.0], c=np.ones(7))
        self.assertEqual(objective(ones, np.ones(7)), 7.0)

    def test_objective_matches_scalar_loop(self):
        rng = np.random.default_rng(11)
        c = rng.uniform(1, 100, size=5)
        x = rng.uniform(0, 1, size=5)
        lp = PackingLp.from_dense(rng.uniform(0, 1, size=(2, 5)), b=[1.0, 1.0], c=c)
        total = 0.0
        for j in range(5):
            total += c[j] * x[j]
        self.assertAlmostEqual(objective(lp, x), total, delta=1e-12)

    def test_objective_dimension_error(self):
        with self.assertRaises(DimensionError):
            objective(tiny_lp(), [1.0, 1.0])

    def test_objective_linear(self):
        lp = tiny_lp()
        x = np.array([0.3, 0.9, 0.4])
        for scale in (0.0, 0.25, 0.5, 1.0):
            self.assertAlmostEqual(objective(lp, scale * x), scale * objective(lp, x), delta=1e-9)

    def test_zero_is_feasible(self):
        report = check_feasible(tiny_lp(), np.zeros(3), 0.0)
        self.assertTrue(report.feasible)
        self.assertTrue(report)
        self.assertEqual(report.slack.tolist(), [1.0, 0.5])

    def test_violation_reported(self):
        lp = tiny_lp()
        report = check_feasible(lp, np.ones(3))
        # row 0 load 0.75 <= 1, row 1 load 1.0 > 0.5
        self.assertFalse(report.feasible)
        self.assertEqual(report.violated_rows, (1,))
        self.assertAlmostEqual(report.worst_violation, 0.5)
        self.assertEqual(row_loads(lp, np.ones(3)).tolist(), [0.75, 1.0])

    def test_box_violation(self):
        lp = tiny_lp()
        self.assertFalse(check_feasible(lp, [0.0, 1.5, 0.0]).feasible)
        self.assertFalse(check_feasible(lp, [0.0, -0.01, 0.0]).feasible)
        self.assertTrue(check_feasible(lp, [0.0, 1.0 + 1e-8, 0.0]).feasible)

    def test_integral_check(self):
        lp = tiny_lp()
        report = check_feasible(lp, [0.0, 0.5, 1.0], integral=True)
        self.assertFalse(report.feasible)
        self.assertFalse(report.integral_ok)
        report = check_feasible(lp, [0.0, 1.0, 1.0], integral=True)
        self.assertTrue(report.feasible)
        self.assertTrue(report.integral_ok)
        self.assertIsNone(check_feasible(lp, [0.0, 1.0, 1.0]).integral_ok)

    def test_feasibility_matches_dense_recount(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            dense = rng.uniform(0, 1, size=(4, 8)) * (rng.random((4, 8)) < 0.7)
            b = rng.uniform(0.5, 3.0, size=4)
            lp = PackingLp.from_dense(dense, b=b, c=rng.uniform(1, 10, size=8))
            x = (rng.random(8) < 0.5).astype(float)
            expected = all(sum(dense[i, j] * x[j] for j in range(8)) <= b[i] + 1e-7 for i in range(4))
            self.assertEqual(check_feasible(lp, x).feasible, expected)

    def test_min_b(self):
        self.assertEqual(min_b(PackingLp.from_dense(np.zeros((3, 1)), b=[3, 1, 7], c=[1])), 1.0)
        self.assertEqual(min_b(PackingLp.from_dense(np.zeros((1, 1)), b=[5], c=[1])), 5.0)

    def test_relative_error(self):
        self.assertEqual(relative_error(100.0, 100.0), 0.0)
        self.assertAlmostEqual(relative_error(96.0, 100.0), 0.04)
        with self.assertRaises(InvalidReferenceError):
            relative_error(1.0, 0.0)
        with self.assertRaises(InvalidReferenceError):
            relative_error(1.0, -3.0)

    def test_dual_objective(self):
        lp = tiny_lp()
        dual = DualSolution(phi=np.array([2.0, 1.0]), psi=np.array([0.0, 1.0, 0.5]))
        self.assertAlmostEqual(dual_objective(lp, dual), 2.0 * 1.0 + 1.0 * 0.5 + 1.5)
        self.assertEqual(dual.y.tolist(), [2.0, 1.0, 0.0, 1.0, 0.5])


if __name__ == '__main__':
    unittest.main()
