import math
import unittest

import numpy as np

from packing_accel.config import AcceleratorConfig, ef_grid
from packing_accel.core.accelerator import (
    accelerate, accelerate_once, build_sample_lp, run_schedule, sample_size, sample_variables, theoretical_ef,
    theoretical_ef_flagged, threshold,
)
from packing_accel.core.generators import GeneratorSpec, generate_random
from packing_accel.core.helpers import make_rng
from packing_accel.core.lp import PackingLp, check_feasible, objective
from packing_accel.core.solvers import Solver, SimplexSolver, get_solver, simplex_solve
from packing_accel.errors import AcceleratorError, DimensionError, RunCancelled, SolverError, SpecError


class AlwaysFails(Solver):
    name = "always-fails"

    def _solve(self, lp):
        raise SolverError(self.name, "numerical failure", 0)


class CountingZeroPrices(Solver):
    name = "counting-zero-prices"

    def __init__(self):
        super().__init__()
        self.calls = 0

    def _solve(self, lp):
        self.calls += 1
        return np.zeros(lp.n), np.zeros(lp.m), lp.c.copy(), 0


def adversarial_lp(seed):
    """
    Four items, one row with b = 2, sample of two. The sampled items fit the
    sample LP at eps_f = 0 and 0.1, so every price is zero and thresholding
    takes all four items (load 2.64). At eps_f = 0.2 the sample row binds and
    its price excludes the two heavy unsampled items.
    """
    S = sample_variables(4, 0.5, make_rng(seed))
    a = np.full(4, 0.9)
    c = np.full(4, 1.0)
    a[S] = 0.42
    c[S[1]] = 1.2
    return PackingLp.from_dense(a.reshape(1, 4), b=[2.0], c=c)


class TestSampling(unittest.TestCase):
    def test_full_sample(self):
        self.assertEqual(sample_variables(7, 1.0, make_rng(0)).tolist(), list(range(7)))

    def test_ceiling(self):
        S = sample_variables(10, 0.25, make_rng(1))
        self.assertEqual(S.size, 3)
        self.assertEqual(S.tolist(), sorted(set(S.tolist())))
        self.assertEqual(sample_size(100, 0.07), 7)
        self.assertEqual(sample_size(3, 0.01), 1)

    def test_invalid(self):
        with self.assertRaises(SpecError):
            sample_variables(10, 0.0, make_rng(0))
        with self.assertRaises(SpecError):
            sample_variables(10, 1.5, make_rng(0))

    def test_uniformity(self):
        n, trials = 10_000, 10_000
        rng = make_rng(2024)
        counts = np.zeros(n)
        for _ in range(trials):
            counts[sample_variables(n, 0.01, rng)] += 1
        freq = counts / trials
        self.assertTrue(np.all(np.abs(freq - 0.01) <= 0.006))
        self.assertGreaterEqual(np.mean(np.abs(freq - 0.01) <= 0.003), 0.99)


class TestSampleLp(unittest.TestCase):
    def setUp(self):
        self.lp = generate_random(GeneratorSpec(m=3, n=100, b_rule=1000.0, seed=5))

    def test_identity_scaling(self):
        sample = build_sample_lp(self.lp, np.arange(100), 1.0, 0.0, 1.0)
        self.assertTrue(np.array_equal(sample.lp.b, self.lp.b))
        self.assertEqual(sample.s, 100)

    def test_scaled_rhs(self):
        sample = build_sample_lp(self.lp, [5], 0.01, 0.1, 1.0)
        self.assertTrue(np.allclose(sample.lp.b, 9.0, rtol=1e-12))
        halved = build_sample_lp(self.lp, [5], 0.01, 0.1, 2.0)
        self.assertTrue(np.allclose(halved.lp.b, 4.5, rtol=1e-12))

    def test_columns_preserved(self):
        S = [3, 17, 42]
        sample = build_sample_lp(self.lp, S, 0.03, 0.0, 1.0)
        self.assertTrue(np.array_equal(sample.lp.A.toarray(), self.lp.A[:, S].toarray()))
        self.assertTrue(np.array_equal(sample.lp.c, self.lp.c[S]))
        self.assertEqual(sample.index_map.tolist(), S)

    def test_rhs_monotone(self):
        S = [1, 2, 3]
        base = build_sample_lp(self.lp, S, 0.03, 0.1, 1.0).lp.b
        self.assertTrue(np.all(build_sample_lp(self.lp, S, 0.03, 0.2, 1.0).lp.b < base))
        self.assertTrue(np.all(build_sample_lp(self.lp, S, 0.03, 0.1, 1.5).lp.b < base))
        self.assertTrue(np.all(build_sample_lp(self.lp, [1, 2, 3, 4], 0.04, 0.1, 1.0).lp.b > base))

    def test_bad_sample(self):
        with self.assertRaises(DimensionError):
            build_sample_lp(self.lp, [100], 0.01, 0.0, 1.0)
        with self.assertRaises(DimensionError):
            build_sample_lp(self.lp, [1, 2], 0.01, 0.0, 1.0)
        with self.assertRaises(SpecError):
            build_sample_lp(self.lp, [1], 0.01, 1.0, 1.0)


class TestThreshold(unittest.TestCase):
    def test_basic_rule(self):
        lp = PackingLp.from_dense([[0.5, 0.5, 0.0]], b=[1.0], c=[5.0, 0.0, 0.0])
        self.assertEqual(threshold(lp, [0.0]).tolist(), [1.0, 0.0, 0.0])

    def test_tie_goes_to_zero(self):
        lp = PackingLp.from_dense([[0.5, 0.25]], b=[1.0], c=[1.0, 1.0])
        # 0.5 * 2 == 1 exactly
        self.assertEqual(threshold(lp, [2.0]).tolist(), [0.0, 1.0])

    def test_dense_oracle(self):
        lp = generate_random(GeneratorSpec(m=2, n=4, p=1.0, b_rule=1.0, seed=8))
        sample = build_sample_lp(lp, [0, 1], 0.5, 0.0, 1.0)
        phi = simplex_solve(sample.lp).dual.phi
        dense = lp.A.toarray()
        x_hat = threshold(lp, phi)
        for j in range(4):
            priced = sum(dense[i, j] * phi[i] for i in range(2))
            # basic sample columns price at c_j up to rounding; only clear margins are compared
            if abs(priced - lp.c[j]) > 1e-9:
                self.assertEqual(x_hat[j], 1.0 if priced < lp.c[j] else 0.0)
        self.assertTrue(set(x_hat.tolist()) <= {0.0, 1.0})

    def test_scale_invariance(self):
        lp = generate_random(GeneratorSpec(m=4, n=50, seed=3))
        phi = make_rng(1).random(4) * 40
        base = threshold(lp, phi)
        for scale in (0.5, 2.0, 8.0):
            scaled = PackingLp(lp.A, lp.b, lp.c * scale)
            self.assertTrue(np.array_equal(threshold(scaled, phi * scale), base))

    def test_workers_agree(self):
        lp = generate_random(GeneratorSpec(m=5, n=1000, seed=6))
        phi = make_rng(2).random(5) * 50
        single = threshold(lp, phi)
        self.assertTrue(set(np.unique(single)) <= {0.0, 1.0})
        for workers in (2, 3, 8):
            self.assertTrue(np.array_equal(threshold(lp, phi, workers=workers), single))

    def test_dimension(self):
        with self.assertRaises(DimensionError):
            threshold(PackingLp.from_dense([[0.5]], b=[1.0], c=[1.0]), [1.0, 2.0])


class TestAccelerateOnce(unittest.TestCase):
    def test_zero_costs(self):
        lp = PackingLp.from_dense(np.full((2, 10), 0.5), b=[1.0, 1.0], c=np.zeros(10))
        run = accelerate_once(lp, SimplexSolver(), 0.5, 0.0, make_rng(0))
        self.assertEqual(run.x_hat.tolist(), [0.0] * 10)

    def test_no_constraints(self):
        lp = PackingLp.from_dense(np.zeros((2, 10)), b=[1.0, 1.0], c=np.arange(1, 11, dtype=float))
        run = accelerate_once(lp, SimplexSolver(), 0.3, 0.0, make_rng(0))
        self.assertEqual(run.x_hat.tolist(), [1.0] * 10)
        self.assertEqual(run.sample.s, 3)
        self.assertGreaterEqual(run.solve_time, 0.0)
        self.assertGreaterEqual(run.threshold_time, 0.0)

    def test_quality_when_feasible(self):
        hits = 0
        for seed in range(20):
            lp = generate_random(GeneratorSpec(m=2, n=20, b_rule=4.0, seed=seed))
            opt = simplex_solve(lp).primal.objective
            run = accelerate_once(lp, SimplexSolver(), 0.5, 0.2, make_rng(seed))
            if check_feasible(lp, run.x_hat).feasible:
                hits += 1
                self.assertGreaterEqual(objective(lp, run.x_hat) / opt, 1 - 3 * 0.2)
        self.assertGreater(hits, 0)


class TestAccelerate(unittest.TestCase):
    def test_first_point_feasible(self):
        lp = PackingLp.from_dense(np.zeros((1, 20)), b=[1.0], c=np.ones(20))
        x_hat, eps_f_used, report = accelerate(lp, SimplexSolver(), AcceleratorConfig(eps_s=0.2))
        self.assertEqual(eps_f_used, 0.0)
        self.assertEqual(objective(lp, x_hat), 20.0)
        self.assertFalse(report.fallback)
        self.assertTrue(report.feasible)

    def test_zero_costs(self):
        lp = PackingLp.from_dense(np.full((1, 10), 0.5), b=[1.0], c=np.zeros(10))
        x_hat, eps_f_used, _ = accelerate(lp, SimplexSolver(), AcceleratorConfig(eps_s=0.5))
        self.assertEqual(x_hat.tolist(), [0.0] * 10)
        self.assertEqual(eps_f_used, 0.0)

    def test_adversarial_schedule(self):
        for seed in (0, 1, 2):
            lp = adversarial_lp(seed)
            config = AcceleratorConfig(eps_s=0.5, ef_schedule=(0.0, 0.1, 0.2), seed=seed, resample_per_ef=False)
            run = run_schedule(lp, SimplexSolver(), config)
            self.assertEqual(run.eps_f_used, 0.2)
            self.assertEqual([status for _, status in run.trace], ["infeasible", "infeasible", "feasible"])
            self.assertTrue(check_feasible(lp, run.x_hat).feasible)

    def test_fallback(self):
        lp = adversarial_lp(0)
        config = AcceleratorConfig(eps_s=0.5, ef_schedule=(0.0, 0.1), seed=0, resample_per_ef=False)
        x_hat, eps_f_used, report = accelerate(lp, SimplexSolver(), config)
        self.assertEqual(x_hat.tolist(), [0.0] * 4)
        self.assertEqual(eps_f_used, 1.0)
        self.assertTrue(report.fallback)
        self.assertTrue(report.feasible)

    def test_max_schedule_points(self):
        lp = adversarial_lp(1)
        config = AcceleratorConfig(eps_s=0.5, ef_schedule=(0.0, 0.1, 0.2), seed=1, resample_per_ef=False,
                                   max_schedule_points=2)
        run = run_schedule(lp, SimplexSolver(), config)
        self.assertTrue(run.fallback)
        self.assertEqual(len(run.trace), 2)

    def test_every_point_fails(self):
        lp = generate_random(GeneratorSpec(m=2, n=50, seed=1))
        with self.assertRaises(AcceleratorError) as ctx:
            accelerate(lp, AlwaysFails(), AcceleratorConfig(eps_s=0.1, ef_schedule=(0.0, 0.5)))
        self.assertEqual([ef for ef, _ in ctx.exception.diagnostics], [0.0, 0.5])

    def test_stop_predicate(self):
        lp = generate_random(GeneratorSpec(m=1, n=200, p=1.0, b_rule=1.0, seed=4))
        solver = CountingZeroPrices()
        with self.assertRaises(RunCancelled):
            run_schedule(lp, solver, AcceleratorConfig(eps_s=0.05), should_stop=lambda: solver.calls >= 1)
        self.assertEqual(solver.calls, 1)

        solver = CountingZeroPrices()
        run = run_schedule(lp, solver, AcceleratorConfig(eps_s=0.05, ef_schedule=(0.0, 0.5)),
                           should_stop=lambda: False)
        self.assertTrue(run.fallback)
        self.assertEqual(solver.calls, 2)

    def test_deterministic(self):
        lp = generate_random(GeneratorSpec(m=5, n=2000, seed=12))
        config = AcceleratorConfig(eps_s=0.02, seed=99)
        first = accelerate(lp, SimplexSolver(), config)
        second = accelerate(lp, SimplexSolver(), config)
        self.assertTrue(np.array_equal(first[0], second[0]))
        self.assertEqual(first[1], second[1])

    def test_solver_by_name(self):
        lp = generate_random(GeneratorSpec(m=5, n=500, seed=13))
        x_hat, _, report = accelerate(lp, None, AcceleratorConfig(eps_s=0.1, solver="dual-ascent"))
        self.assertTrue(check_feasible(lp, x_hat, integral=True).feasible)
        self.assertEqual(report.alpha_d, 1.0)

    def test_output_always_binary_and_feasible(self):
        for seed in range(30):
            spec = GeneratorSpec(m=2 + seed % 6, n=200 + 37 * seed, p=0.5 + 0.1 * (seed % 5), seed=seed)
            lp = generate_random(spec)
            config = AcceleratorConfig(eps_s=(0.02, 0.05, 0.2)[seed % 3], seed=seed,
                                       resample_per_ef=bool(seed % 2))
            x_hat, _, _ = accelerate(lp, get_solver(("simplex", "dual-ascent", "highs")[seed % 3]), config)
            self.assertTrue(check_feasible(lp, x_hat, tol=1e-7, integral=True).feasible, msg=f"seed {seed}")


class TestSampleAgreement(unittest.TestCase):
    """Thresholding on the sample's own prices changes at most m of the sample LP's values."""

    def test_at_most_m_disagreements(self):
        solver = SimplexSolver(tol=1e-11)
        for seed in range(100):
            m = 2 + seed % 9
            lp = generate_random(GeneratorSpec(m=m, n=400, p=0.8, seed=seed)).perturbed(seed)
            S = sample_variables(lp.n, 0.5, make_rng(seed))
            sample = build_sample_lp(lp, S, 0.5, 0.0, 1.0)
            outcome = solver.solve(sample.lp)
            thresholded = threshold(sample.lp, outcome.dual.phi)
            differ = int(np.sum(np.abs(thresholded - outcome.primal.x) > 1e-9))
            self.assertLessEqual(differ, m, msg=f"seed {seed}")


class TestTheoreticalBound(unittest.TestCase):
    def test_reference_value(self):
        value, out_of_regime = theoretical_ef_flagged(100, 10 ** 6, 0.01, 1e5)
        self.assertAlmostEqual(value, 8.72, delta=0.01)
        self.assertAlmostEqual(value, 3 * math.sqrt(6 * 102 * math.log(1e6) / 1000))
        self.assertTrue(out_of_regime)

    def test_quadrupled_sampling_halves(self):
        self.assertAlmostEqual(theoretical_ef(10, 1000, 0.04, 500.0) * 2, theoretical_ef(10, 1000, 0.01, 500.0),
                               places=12)

    def test_large_budget(self):
        value, out_of_regime = theoretical_ef_flagged(10, 1000, 0.1, 1e12)
        self.assertLess(value, 1e-3)
        self.assertFalse(out_of_regime)

    def test_invalid(self):
        with self.assertRaises(SpecError):
            theoretical_ef(10, 1, 0.1, 100.0)


class TestSchedule(unittest.TestCase):
    def test_default_grid(self):
        grid = ef_grid(0.01)
        self.assertEqual(len(grid), 100)
        self.assertEqual(grid[0], 0.0)
        self.assertEqual(grid[-1], 0.99)

    def test_config_validation(self):
        with self.assertRaises(SpecError):
            AcceleratorConfig(ef_schedule=(0.0, 0.0))
        with self.assertRaises(SpecError):
            AcceleratorConfig(ef_schedule=(0.0, 1.0))
        with self.assertRaises(SpecError):
            AcceleratorConfig(eps_s=0.0)
        with self.assertRaises(SpecError):
            AcceleratorConfig(alpha_d=0.5)


if __name__ == '__main__':
    unittest.main()
