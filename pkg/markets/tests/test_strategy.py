import math

import numpy as np

from django.test import SimpleTestCase

from ..exceptions import DomainError, MarketStructureError, ScapmError
from ..market_model import (
    MarketSpec, market_with_discrepancy, replication_weights, risk_profile)
from ..simulation import MarketSchedule, SimulationConfig, simulate_prices
from ..strategy import (
    central_identity_residual, discrepancy_integral, lil_statistic,
    log_wealth_path, replicate_and_compare, replication_refinement)
from ..verification import random_markets


class StrategyTestCase(SimpleTestCase):
    def setUp(self):
        self.market = MarketSpec(r=0.02, mu=[0.08, 0.05],
                                 sigma=[[0.2, 0.0], [0.1, 0.3]])

    def create_bundle(self, market=None, horizon=1.0, n_steps=50, n_paths=20,
                      seed=0):
        market = market or self.market
        cfg = SimulationConfig(horizon, n_steps, n_paths, seed)
        return log_wealth_path(market, simulate_prices(market, cfg))

    def test_log_wealth_closed_form(self):
        """
        ln K_T = rT + theta . W_T + ||theta||^2 T / 2.
        """
        bundle = self.create_bundle(horizon=4.0)
        theta = risk_profile(self.market).theta
        W_T = bundle.brownian()[:, -1, :]
        expected = 0.02 * 4.0 + W_T @ theta + 0.5 * float(theta @ theta) * 4.0
        np.testing.assert_allclose(bundle.log_K[:, -1], expected, atol=1e-13)
        np.testing.assert_array_equal(bundle.log_K[:, 0], 0.0)

    def test_central_identity(self):
        bundle = self.create_bundle(horizon=10.0, n_steps=200)
        residual = central_identity_residual(self.market, bundle)
        self.assertEqual(residual.shape, (20, 201))
        self.assertLess(np.max(np.abs(residual)), 1e-12)

    def test_central_identity_on_random_markets(self):
        for i, market in enumerate(random_markets(10, seed=42)):
            bundle = self.create_bundle(market, horizon=5.0, seed=i)
            residual = central_identity_residual(market, bundle)
            self.assertLess(np.max(np.abs(residual)), 1e-9)

    def test_central_identity_on_schedule(self):
        other = market_with_discrepancy(0.03, self.market.sigma, [0.0, 0.2])
        schedule = MarketSchedule(((1.0, self.market), (1.0, other)))
        bundle = self.create_bundle(schedule, horizon=2.0, n_steps=40)
        residual = central_identity_residual(schedule, bundle)
        self.assertLess(np.max(np.abs(residual)), 1e-12)

    def test_scapm_wealth_is_the_index(self):
        """
        In a SCAPM market log K and log S^0 are the same numbers.
        """
        market = market_with_discrepancy(0.02, self.market.sigma)
        bundle = self.create_bundle(market, horizon=10.0, n_steps=100)
        self.assertTrue(np.array_equal(bundle.log_K, bundle.log_S[:, :, 0]))
        np.testing.assert_array_equal(
            central_identity_residual(market, bundle), 0.0)

    def test_bundle_must_match_market(self):
        bundle = self.create_bundle()
        index_only = MarketSpec(r=0.02, mu=[0.06], sigma=[[0.2]])
        with self.assertRaises(MarketStructureError):
            log_wealth_path(index_only, bundle)
        cfg = SimulationConfig(1.0, 10, 2)
        with self.assertRaises(ScapmError):
            central_identity_residual(self.market,
                                      simulate_prices(self.market, cfg))

    def test_discrepancy_integral(self):
        self.assertAlmostEqual(discrepancy_integral(self.market, 50.0), 0.5)
        other = market_with_discrepancy(0.02, self.market.sigma, [0.0, 0.2])
        schedule = MarketSchedule(((2.0, self.market), (3.0, other)))
        self.assertAlmostEqual(discrepancy_integral(schedule, 1.0), 0.01)
        self.assertAlmostEqual(discrepancy_integral(schedule, 4.0),
                               0.02 + 0.08)
        self.assertAlmostEqual(discrepancy_integral(schedule, 5.0),
                               0.02 + 0.12)

    def test_replication(self):
        bundle = self.create_bundle(n_steps=1000)
        result = replicate_and_compare(self.market, bundle)
        self.assertEqual(result.scheme, 'milstein')
        self.assertEqual(result.censored, 0)
        self.assertEqual(result.max_discrepancy.shape, (20,))
        self.assertLess(result.mean_max_discrepancy, 1e-3)
        euler = replicate_and_compare(self.market, bundle, scheme='euler')
        self.assertLess(euler.mean_max_discrepancy, 0.05)
        self.assertLess(result.mean_max_discrepancy,
                        euler.mean_max_discrepancy)
        with self.assertRaises(ValueError):
            replicate_and_compare(self.market, bundle, scheme='runge-kutta')

    def test_replication_censoring(self):
        """
        Paths whose one-step wealth factor is not positive become NaN.
        """
        market = market_with_discrepancy(0.0, [[1.0]], [-3.0])
        bundle = self.create_bundle(market, n_steps=1, n_paths=2000)
        with self.assertLogs('markets.strategy', 'WARNING'):
            result = replicate_and_compare(market, bundle, scheme='euler')
        self.assertGreater(result.censored, 0)
        self.assertEqual(int(np.isnan(result.max_discrepancy).sum()),
                         result.censored)
        self.assertTrue(math.isfinite(result.mean_max_discrepancy))

    def test_replication_refinement(self):
        """
        Halving the step roughly halves the replication error.
        """
        cfg = SimulationConfig(1.0, 2 ** 11, 64, seed=5)
        result = replication_refinement(self.market, cfg, levels=3)
        self.assertEqual(result.n_steps, (512, 1024, 2048))
        self.assertEqual(len(result.ratios), 2)
        for ratio in result.ratios:
            self.assertGreater(ratio, 1.4)
            self.assertLess(ratio, 3.0)
        with self.assertRaises(ValueError):
            replication_refinement(self.market, SimulationConfig(1.0, 6, 2),
                                   levels=3)

    def test_lil_statistic(self):
        bundle = self.create_bundle(horizon=1000.0, n_steps=10, n_paths=50)
        statistic = lil_statistic(self.market, bundle, 1000.0)
        self.assertEqual(statistic.shape, (50,))
        self.assertTrue(np.all(np.isfinite(statistic)))
        with self.assertRaises(DomainError):
            lil_statistic(self.market, bundle, 100.0)

    def test_lil_statistic_arithmetic(self):
        """
        At V = e^2 the normaliser is sqrt(2 e^2 ln 2).
        """
        market = market_with_discrepancy(0.02, [[0.2]], [0.1])
        horizon = 100.0 * math.e ** 2
        bundle = self.create_bundle(market, horizon=horizon, n_steps=1,
                                    n_paths=10)
        self.assertAlmostEqual(discrepancy_integral(market, horizon),
                               math.e ** 2, places=12)
        excess = bundle.log_K[:, -1] - bundle.log_S[:, -1, 0]
        expected = ((excess - 0.5 * math.e ** 2)
                    / math.sqrt(2.0 * math.e ** 2 * math.log(2.0)))
        np.testing.assert_allclose(lil_statistic(market, bundle, horizon),
                                   expected, rtol=1e-12, atol=1e-12)


class RiskFreeMarketTestCase(SimpleTestCase):
    """
    mu = r makes theta vanish: the strategy is the bond.
    """
    def setUp(self):
        self.market = MarketSpec(r=0.02, mu=[0.02, 0.02],
                                 sigma=[[0.2, 0.0], [0.1, 0.3]])
        cfg = SimulationConfig(5.0, 50, 8, seed=4)
        self.bundle = log_wealth_path(self.market,
                                      simulate_prices(self.market, cfg))

    def test_log_wealth_is_deterministic(self):
        np.testing.assert_array_equal(self.bundle.log_K[:, 0], 0.0)
        expected = np.broadcast_to(0.02 * self.bundle.times,
                                   self.bundle.log_K.shape)
        np.testing.assert_allclose(self.bundle.log_K, expected, rtol=1e-13,
                                   atol=1e-15)
        self.assertGreater(risk_profile(self.market).disc_norm, 0.0)

    def test_replication_holds_no_stock(self):
        np.testing.assert_array_equal(
            replication_weights(self.market), 0.0)
        result = replicate_and_compare(self.market, self.bundle)
        self.assertEqual(result.censored, 0)
        step = 0.02 * self.bundle.dt
        expected = 50 * (step - math.log1p(step))
        np.testing.assert_allclose(result.max_discrepancy, expected,
                                   rtol=1e-9)
        self.assertEqual(len(set(result.max_discrepancy.tolist())), 1)
