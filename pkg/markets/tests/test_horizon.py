import math

import numpy as np
from scipy import stats

from django.test import SimpleTestCase

from ..exceptions import DomainError
from ..horizon import (
    VERDICTS, asymptotic_ratio_experiment, binomial_interval,
    critical_horizon, detection_thresholds, horizon_report, horizon_verdict,
    lil_experiment, monte_carlo_outperformance, outperformance_probability)
from ..market_model import MarketSpec, market_with_discrepancy
from ..normal import inverse_normal_cdf, normal_cdf, upper_quantile
from ..simulation import SimulationConfig


class NormalTestCase(SimpleTestCase):
    def test_quantile_values(self):
        self.assertAlmostEqual(inverse_normal_cdf(0.975), 1.959964, places=6)
        self.assertAlmostEqual(inverse_normal_cdf(0.5), 0.0, places=15)
        self.assertAlmostEqual(upper_quantile(0.025), 1.959964, places=6)
        self.assertAlmostEqual(float(normal_cdf(0.5)), 0.691462, places=6)

    def test_quantile_matches_scipy(self):
        p = np.array([1e-12, 1e-6, 0.01, 0.02425, 0.3, 0.5, 0.9, 0.999999])
        np.testing.assert_allclose(inverse_normal_cdf(p), stats.norm.ppf(p),
                                   rtol=1e-9, atol=1e-12)

    def test_quantile_is_symmetric(self):
        upper = 1.0 - np.logspace(-15, -1, 60)
        self.assertTrue(np.array_equal(inverse_normal_cdf(upper),
                                       -inverse_normal_cdf(1.0 - upper)))

    def test_quantile_precision_near_one(self):
        """
        The upper tail is as accurate as the lower one.
        """
        upper = 1.0 - np.array([1e-14, 1e-12, 1e-9, 1e-6])
        np.testing.assert_allclose(inverse_normal_cdf(upper),
                                   -stats.norm.ppf(1.0 - upper), rtol=1e-13)
        self.assertAlmostEqual(upper_quantile(1e-14),
                               -stats.norm.ppf(1e-14), places=12)
        self.assertEqual(upper_quantile(0.5), 0.0)

    def test_quantile_round_trip(self):
        p = np.linspace(0.001, 0.999, 999)
        self.assertLess(np.max(np.abs(normal_cdf(inverse_normal_cdf(p)) - p)),
                        1e-12)

    def test_quantile_shape_independence(self):
        p = np.linspace(0.01, 0.99, 12)
        batch = inverse_normal_cdf(p.reshape(3, 4))
        self.assertEqual(batch.shape, (3, 4))
        self.assertTrue(np.array_equal(batch.ravel(), inverse_normal_cdf(p)))
        self.assertIsInstance(inverse_normal_cdf(0.3), float)

    def test_quantile_domain(self):
        for p in (0.0, 1.0, -0.1, 1.5, float('nan')):
            with self.assertRaises(DomainError):
                inverse_normal_cdf(p)
        # DomainError is also a ValueError
        with self.assertRaises(ValueError):
            upper_quantile(0.0)


class HorizonTestCase(SimpleTestCase):
    def setUp(self):
        self.market = MarketSpec(r=0.02, mu=[0.08, 0.05],
                                 sigma=[[0.2, 0.0], [0.1, 0.3]])

    def test_detection_thresholds(self):
        thresholds = detection_thresholds(0.5, 0.5, 100.0)
        self.assertAlmostEqual(thresholds.weak, 0.1177410, places=6)
        self.assertAlmostEqual(
            detection_thresholds(0.025, 0.025, 400.0).improved, 0.1959964,
            places=6)
        self.assertAlmostEqual(detection_thresholds(0.5, 0.5, 200.0).weak,
                               0.08326, places=5)

    def test_threshold_ordering(self):
        """
        improved <= weak <= loose whenever delta <= 1/2.
        """
        for epsilon in (0.5, 0.1, 0.01):
            for delta in (0.5, 0.1, 0.01):
                t = detection_thresholds(epsilon, delta, 50.0)
                self.assertLessEqual(t.improved, t.weak + 1e-15)
                self.assertLessEqual(t.weak, t.loose + 1e-15)

    def test_thresholds_scale_with_horizon(self):
        short = detection_thresholds(0.05, 0.1, 25.0)
        long = detection_thresholds(0.05, 0.1, 100.0)
        for a, b in zip(short, long):
            self.assertAlmostEqual(a / b, 2.0)

    def test_threshold_domain(self):
        with self.assertRaises(DomainError):
            detection_thresholds(0.0, 0.5, 10.0)
        with self.assertRaises(DomainError):
            detection_thresholds(0.5, 1.0, 10.0)
        with self.assertRaises(DomainError):
            detection_thresholds(0.5, 0.5, 0.0)

    def test_outperformance_probability(self):
        self.assertAlmostEqual(outperformance_probability(0.1, 100.0, 1.0),
                               0.691462, places=6)
        self.assertEqual(outperformance_probability(0.0, 100.0, 1.0), 0.5)
        self.assertEqual(outperformance_probability(0.0, 100.0, 0.5), 0.0)

    def test_weak_threshold_is_exact(self):
        """
        At the weak threshold the outperformance probability is 1 - epsilon.
        """
        for epsilon, delta, horizon in [(0.5, 0.5, 100.0), (0.1, 0.025, 25.0),
                                        (0.025, 0.1, 400.0)]:
            weak = detection_thresholds(epsilon, delta, horizon).weak
            self.assertAlmostEqual(
                outperformance_probability(weak, horizon, delta),
                1.0 - epsilon, places=9)

    def test_dichotomy_over_random_parameters(self):
        """
        disc_norm >= threshold_weak exactly when p_outperform >= 1 - epsilon.
        """
        rng = np.random.default_rng(31)
        for _ in range(500):
            epsilon = rng.uniform(0.01, 0.5)
            delta = rng.uniform(0.01, 0.5)
            horizon = 10.0 ** rng.uniform(0.0, 3.0)
            weak = detection_thresholds(epsilon, delta, horizon).weak
            disc_norm = weak * rng.uniform(0.5, 2.0)
            if abs(disc_norm - weak) <= 1e-9 * weak:
                continue
            p_outperform = outperformance_probability(disc_norm, horizon,
                                                      delta)
            self.assertEqual(disc_norm >= weak,
                             p_outperform >= 1.0 - epsilon)
            _, verdict = horizon_verdict(disc_norm, epsilon, delta, horizon)
            self.assertEqual(verdict == VERDICTS.outperforms,
                             disc_norm >= weak)

    def test_probability_grows_with_scaled_discrepancy(self):
        rng = np.random.default_rng(32)
        for delta in (0.01, 0.1, 0.5, 0.9):
            disc_norm = np.sort(rng.uniform(1e-4, 1.0, 200))
            horizon = rng.uniform(1.0, 500.0)
            p = [outperformance_probability(d, horizon, delta)
                 for d in disc_norm]
            self.assertTrue(np.all(np.diff(p) >= 0.0))
        # the same in T at fixed disc_norm
        p = [outperformance_probability(0.05, t, 0.2)
             for t in np.linspace(1.0, 5000.0, 200)]
        self.assertTrue(np.all(np.diff(p) >= 0.0))

    def test_verdict_at_the_weak_threshold(self):
        """
        A discrepancy sitting on the weak threshold outperforms; just below
        it does not.
        """
        rng = np.random.default_rng(33)
        for _ in range(200):
            epsilon = rng.uniform(0.01, 0.5)
            delta = rng.uniform(0.01, 0.5)
            horizon = 10.0 ** rng.uniform(0.0, 3.0)
            weak = detection_thresholds(epsilon, delta, horizon).weak
            p_outperform, verdict = horizon_verdict(weak, epsilon, delta,
                                                    horizon)
            self.assertEqual(verdict, VERDICTS.outperforms)
            self.assertAlmostEqual(p_outperform, 1.0 - epsilon, places=10)
            _, verdict = horizon_verdict(weak * (1.0 - 1e-6), epsilon, delta,
                                         horizon)
            self.assertEqual(verdict, VERDICTS.scapm)

    def test_report_verdict_agrees_with_probability(self):
        weak = detection_thresholds(0.1, 0.05, 100.0).weak
        for scale in (0.9, 1.0, 1.1):
            market = market_with_discrepancy(0.02, [[0.2]], [weak * scale])
            report = horizon_report(market, 0.1, 0.05, 100.0)
            self.assertEqual(
                report.verdict == VERDICTS.outperforms,
                report.p_outperform >= 1.0 - 0.1 - 1e-12)
        self.assertEqual(report.verdict, VERDICTS.outperforms)

    def test_critical_horizon(self):
        horizon = critical_horizon(0.1, 0.5, 0.5)
        self.assertAlmostEqual(horizon, 2.0 * math.log(2.0) / 0.01)
        self.assertAlmostEqual(detection_thresholds(0.5, 0.5, horizon).weak,
                               0.1)
        self.assertEqual(critical_horizon(0.0, 0.5, 0.5), math.inf)

    def test_horizon_report(self):
        """
        The example market flips verdict between T = 100 and T = 200.
        """
        short = horizon_report(self.market, 0.5, 0.5, 100.0)
        self.assertEqual(short.verdict, VERDICTS.scapm)
        self.assertAlmostEqual(short.disc_norm, 0.1)
        long = horizon_report(self.market, 0.5, 0.5, 200.0)
        self.assertEqual(long.verdict, VERDICTS.outperforms)
        self.assertAlmostEqual(long.threshold_weak, 0.08326, places=5)
        self.assertAlmostEqual(long.critical_horizon, 138.6294361, places=6)
        self.assertEqual(long.as_dict()['verdict'], 'outperforms')

    def test_horizon_report_for_scapm_market(self):
        market = market_with_discrepancy(0.02, self.market.sigma)
        report = horizon_report(market, 0.01, 0.01, 1e6)
        self.assertEqual(report.disc_norm, 0.0)
        self.assertEqual(report.p_outperform, 0.0)
        self.assertEqual(report.verdict, VERDICTS.scapm)

    def test_binomial_interval(self):
        low, high = binomial_interval(50, 100)
        self.assertLess(low, 0.5)
        self.assertGreater(high, 0.5)
        self.assertEqual(binomial_interval(0, 10)[0], 0.0)
        self.assertEqual(binomial_interval(10, 10)[1], 1.0)

    def test_monte_carlo_outperformance(self):
        weak = detection_thresholds(0.1, 0.5, 25.0).weak
        market = market_with_discrepancy(0.02, [[0.2]], [weak])
        cfg = SimulationConfig(25.0, 1, 20000, seed=7)
        estimate = monte_carlo_outperformance(market, cfg, 0.5)
        self.assertEqual(estimate.n_paths, 20000)
        # 0.9 +/- 4 standard errors
        self.assertLess(abs(estimate.probability - 0.9), 0.009)
        self.assertLessEqual(estimate.ci_low, estimate.probability)
        self.assertGreaterEqual(estimate.ci_high, estimate.probability)

    def test_asymptotic_ratio_experiment(self):
        cfg = SimulationConfig(1000.0, 100, 4000, seed=3)
        summaries = asymptotic_ratio_experiment(self.market, cfg,
                                                [100.0, 1000.0])
        self.assertEqual([s.t for s in summaries], [100.0, 1000.0])
        for summary in summaries:
            self.assertAlmostEqual(summary.expected_mean, 0.5)
            self.assertTrue(summary.mean_within(4.0))
            self.assertTrue(summary.sd_within(0.10))
        self.assertIn('q50', summaries[0].as_dict()['quantiles'])

    def test_ratio_experiment_rejects_scapm_market(self):
        market = market_with_discrepancy(0.02, self.market.sigma)
        cfg = SimulationConfig(10.0, 10, 10)
        with self.assertRaises(DomainError):
            asymptotic_ratio_experiment(market, cfg, [10.0])

    def test_lil_experiment(self):
        cfg = SimulationConfig(2000.0, 20, 4000, seed=11)
        summaries = lil_experiment(self.market, cfg, [1000.0, 2000.0])
        for summary in summaries:
            self.assertAlmostEqual(summary.expected_mean, 0.0)
            self.assertTrue(summary.mean_within(4.0))
            self.assertTrue(summary.sd_within(0.10))
        with self.assertRaises(DomainError):
            lil_experiment(self.market, cfg, [100.0])
