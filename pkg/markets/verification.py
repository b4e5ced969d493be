"""
Acceptance suite run by ``manage.py verify``.

Every check returns a CheckResult; a check that raises is reported as
failed with the error message instead of aborting the suite.
"""
import io
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .exceptions import MarketStructureError, ScapmError
from .horizon import (
    asymptotic_ratio_experiment, detection_thresholds,
    monte_carlo_outperformance, outperformance_probability)
from .market_model import market_with_discrepancy, risk_profile
from .normal import inverse_normal_cdf, normal_cdf
from .reports import RunManifest, write_path_statistics
from .simulation import (
    MarketSchedule, SimulationConfig, iter_path_chunks, schedule_simulate)
from .strategy import (
    central_identity_residual, log_wealth_path, replication_refinement)

logger = logging.getLogger(__name__)

LEVELS = {
    'quick': {
        'random_specs': 20,
        'random_paths': 20,
        'random_steps': 200,
        'ratio_paths': 2000,
        'dichotomy_paths': 4000,
        'growth_paths': 10000,
        'replication_steps': 2 ** 12,
        'replication_paths': 100,
        'determinism_paths': 64,
        'determinism_steps': 32,
    },
    'full': {
        'random_specs': 100,
        'random_paths': 100,
        'random_steps': 1000,
        'ratio_paths': 10000,
        'dichotomy_paths': 100000,
        'growth_paths': 100000,
        'replication_steps': 2 ** 14,
        'replication_paths': 100,
        'determinism_paths': 256,
        'determinism_steps': 64,
    },
}

IDENTITY_TOLERANCE = 1e-9
SCAPM_TOLERANCE = 1e-12
DICHOTOMY_PROBABILITIES = (0.5, 0.1, 0.025)
DICHOTOMY_HORIZONS = (25.0, 100.0, 400.0)
RATIO_BUDGETS = (10.0, 100.0, 1000.0)
REFINEMENT_BAND = (1.5, 2.5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def as_dict(self):
        return {'name': self.name, 'passed': self.passed,
                'detail': self.detail, 'seconds': self.seconds}


def primary_market(market):
    """
    The market single-market checks run on: the first segment of a
    schedule.
    """
    if isinstance(market, MarketSchedule):
        return market.segments[0][1]
    return market


def random_markets(count, seed, max_stocks=8):
    """
    Viable markets with K <= max_stocks and D_b <= K + 1, both SCAPM and
    not.
    """
    rng = np.random.default_rng(seed)
    markets = []
    while len(markets) < count:
        n_stocks = int(rng.integers(0, max_stocks + 1))
        dim = int(rng.integers(1, n_stocks + 2))
        sigma = rng.normal(0.0, 0.2, size=(n_stocks + 1, dim))
        disc = rng.normal(0.0, 0.1, size=dim)
        if len(markets) % 5 == 0:
            disc = None
        try:
            markets.append(market_with_discrepancy(
                float(rng.uniform(0.0, 0.05)), sigma, disc))
        except MarketStructureError:
            continue
    return markets


def check_central_identity(market, sizes, seed, workers):
    worst = 0.0
    horizon = 10.0
    candidates = [market] + random_markets(sizes['random_specs'], seed)
    for i, candidate in enumerate(candidates):
        if isinstance(candidate, MarketSchedule):
            horizon_T = candidate.total_duration
        else:
            horizon_T = horizon
        cfg = SimulationConfig(horizon_T, sizes['random_steps'],
                               sizes['random_paths'], seed + i)
        for bundle in iter_path_chunks(candidate, cfg, workers=workers):
            bundle = log_wealth_path(candidate, bundle)
            residual = central_identity_residual(candidate, bundle)
            worst = max(worst, float(np.max(np.abs(residual))))
    return worst <= IDENTITY_TOLERANCE, {
        'max_residual': worst, 'markets': len(candidates),
        'tolerance': IDENTITY_TOLERANCE}


def check_asymptotic_rate(market, sizes, seed, workers):
    profile = risk_profile(market)
    if profile.is_scapm:
        return True, {'skipped': "zero discrepancy: the rate is undefined"}
    checkpoints = [budget / profile.disc_norm_sq for budget in RATIO_BUDGETS]
    cfg = SimulationConfig(checkpoints[-1], 100, sizes['ratio_paths'], seed)
    summaries = asymptotic_ratio_experiment(market, cfg, checkpoints, workers)
    passed = all(s.mean_within(4.0) and s.sd_within(0.10) for s in summaries)
    return passed, {'checkpoints': [s.as_dict() for s in summaries]}


def check_dichotomy(sizes, seed, workers):
    rows = []
    closed_ok = True
    misses = 0
    i = 0
    for epsilon in DICHOTOMY_PROBABILITIES:
        for delta in DICHOTOMY_PROBABILITIES:
            for horizon_T in DICHOTOMY_HORIZONS:
                weak = detection_thresholds(epsilon, delta, horizon_T).weak
                closed = outperformance_probability(weak, horizon_T, delta)
                closed_error = abs(closed - (1.0 - epsilon))
                closed_ok = closed_ok and closed_error <= 1e-9
                market = market_with_discrepancy(0.02, [[0.2]], [weak])
                cfg = SimulationConfig(horizon_T, 1, sizes['dichotomy_paths'],
                                       seed + i)
                estimate = monte_carlo_outperformance(market, cfg, delta,
                                                      workers=workers)
                covered = estimate.covers(1.0 - epsilon)
                misses += 0 if covered else 1
                rows.append({'epsilon': epsilon, 'delta': delta,
                             'horizon_T': horizon_T, 'threshold_weak': weak,
                             'closed_form_error': closed_error,
                             'estimate': estimate.as_dict(),
                             'covered': covered})
                i += 1
    # each 99% interval misses with probability 1%
    allowed = int(stats.binom.ppf(0.999, len(rows), 0.01))
    return closed_ok and misses <= allowed, {
        'cases': rows, 'misses': misses, 'allowed_misses': allowed}


def check_threshold_arithmetic():
    weak = detection_thresholds(0.5, 0.5, 100.0).weak
    improved = detection_thresholds(0.025, 0.025, 400.0).improved
    passed = abs(weak - 0.1177410) <= 1e-6 and abs(improved - 0.1959964) <= 1e-6
    return passed, {'threshold_weak': weak, 'threshold_improved': improved}


def check_scapm_fixed_point(market, sizes, seed, workers):
    scapm = market_with_discrepancy(market.r, market.sigma, None,
                                    market.labels)
    profile = risk_profile(scapm)
    cfg = SimulationConfig(10.0, 100, sizes['random_paths'], seed)
    bundle = log_wealth_path(scapm, schedule_simulate(scapm, cfg, workers))
    identical = bool(np.array_equal(bundle.log_K, bundle.log_S[:, :, 0]))
    max_disc = float(np.max(np.abs(profile.disc)))
    max_residual = float(np.max(np.abs(profile.scapm_residuals)))
    passed = (identical and max_disc <= SCAPM_TOLERANCE
              and max_residual <= SCAPM_TOLERANCE)
    return passed, {'max_disc': max_disc, 'max_scapm_residual': max_residual,
                    'log_K_equals_log_S0': identical}


def check_growth_identity(market, sizes, seed, workers):
    profile = risk_profile(market)
    horizon = 10.0
    cfg = SimulationConfig(horizon, 1, sizes['growth_paths'], seed)
    n_columns = market.n_assets + 1
    total = np.zeros(n_columns)
    total_sq = np.zeros(n_columns)
    for bundle in iter_path_chunks(market, cfg, workers=workers):
        bundle = log_wealth_path(market, bundle)
        terminal = np.column_stack([bundle.log_S[:, -1, :],
                                    bundle.log_K[:, -1]])
        total += terminal.sum(axis=0)
        total_sq += (terminal ** 2).sum(axis=0)
    n = cfg.n_paths
    mean = total / n
    variance = np.maximum(total_sq / n - mean ** 2, 0.0) * n / (n - 1)
    rates = mean / horizon
    se = np.sqrt(variance / n) / horizon
    expected = np.append(profile.optimal_growth_rate - profile.deficits,
                         profile.optimal_growth_rate)
    # deterministic securities have zero SE
    passed = bool(np.all(np.abs(rates - expected) <= 4.0 * se + 1e-12))
    labels = list(market.labels) + ['wealth']
    return passed, {'securities': [
        {'label': label, 'rate': rate, 'expected': exp, 'se': s}
        for label, rate, exp, s in zip(labels, rates.tolist(),
                                       expected.tolist(), se.tolist())]}


def check_replication(market, sizes, seed, workers):
    cfg = SimulationConfig(1.0, sizes['replication_steps'],
                           sizes['replication_paths'], seed)
    result = replication_refinement(market, cfg, levels=3, workers=workers)
    low, high = REFINEMENT_BAND
    passed = all(low <= ratio <= high for ratio in result.ratios)
    return passed, {'n_steps': list(result.n_steps),
                    'mean_errors': list(result.mean_errors),
                    'ratios': list(result.ratios),
                    'censored': result.censored}


def check_determinism(market, sizes, seed, workers):
    cfg = SimulationConfig(1.0, sizes['determinism_steps'],
                           sizes['determinism_paths'], seed)
    payloads = []
    for run_workers in (1, 1, max(2, workers)):
        manifest = RunManifest(command='simulate', config_path='<verify>',
                               seed=cfg.seed, simulation=cfg.as_dict())
        stream = io.StringIO()
        write_path_statistics(stream, market, cfg, manifest,
                              workers=run_workers, chunk_size=16)
        payloads.append(stream.getvalue())
    identical = all(payload == payloads[0] for payload in payloads)
    return identical, {'runs': len(payloads), 'identical': identical,
                       'bytes': len(payloads[0])}


def check_quantile_grid():
    lower = np.logspace(-6, math.log10(0.5), 200)
    grid = np.concatenate([lower, 1.0 - lower])
    worst = float(np.max(np.abs(normal_cdf(inverse_normal_cdf(grid)) - grid)))
    return worst <= 1e-9, {'max_error': worst, 'points': int(grid.size)}


def _run(name, check, *args):
    started = time.perf_counter()
    try:
        passed, detail = check(*args)
    except ScapmError as e:
        passed, detail = False, {'error': str(e)}
    seconds = time.perf_counter() - started
    logger.info("%s: %s (%.1fs)", name, "pass" if passed else "FAIL", seconds)
    return CheckResult(name=name, passed=bool(passed), detail=detail,
                       seconds=seconds)


def run_acceptance(market, level='quick', seed=0, workers=1):
    """
    Run every acceptance check against `market` (a MarketSpec or a
    MarketSchedule) and return the list of CheckResults.
    """
    if level not in LEVELS:
        raise ValueError("unknown level {!r}".format(level))
    sizes = LEVELS[level]
    single = primary_market(market)
    return [
        _run('central_identity', check_central_identity, market, sizes, seed,
             workers),
        _run('asymptotic_rate', check_asymptotic_rate, single, sizes, seed,
             workers),
        _run('finite_horizon_dichotomy', check_dichotomy, sizes, seed,
             workers),
        _run('threshold_arithmetic', check_threshold_arithmetic),
        _run('scapm_fixed_point', check_scapm_fixed_point, single, sizes,
             seed, workers),
        _run('growth_identity', check_growth_identity, single, sizes, seed,
             workers),
        _run('replication_refinement', check_replication, single, sizes,
             seed, workers),
        _run('determinism', check_determinism, single, sizes, seed, workers),
        _run('quantile_quality', check_quantile_grid),
    ]
