"""
Finite-horizon dichotomy: over a horizon T the wealth process beats the
index by a factor of more than 1/delta with probability at least
1 - epsilon unless ||disc|| is below a threshold of order T^(-1/2).

Also the Monte Carlo counterparts of the closed forms: the outperformance
frequency, the asymptotic ratio (ln K_t - ln S^0_t) / int ||disc||^2 and
the iterated-logarithm statistic.
"""
import logging
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from model_utils import Choices
from scipy import stats

from .exceptions import DomainError
from .market_model import risk_profile
from .normal import normal_cdf, upper_quantile
from .simulation import as_schedule, grid_index, iter_path_chunks
from .strategy import discrepancy_integral, log_wealth_path

logger = logging.getLogger(__name__)

VERDICTS = Choices(('OUTPERFORMS_WHP', 'outperforms', 'Outperforms w.h.p.'),
                   ('SCAPM_APPROX_HOLDS', 'scapm', 'SCAPM approx. holds'))

DetectionThresholds = namedtuple('DetectionThresholds',
                                 ['weak', 'loose', 'improved'])

QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)


def _check_probability(name, value, upper_closed=False):
    ok = 0.0 < value <= 1.0 if upper_closed else 0.0 < value < 1.0
    if not ok:
        raise DomainError("{} must lie in (0, 1{}, got {}".format(
            name, ']' if upper_closed else ')', value))


def outperformance_probability(disc_norm, horizon_T, delta):
    """
    P(K_T / S^0_T > 1/delta), using ln K_T - ln S^0_T ~
    Normal(||disc||^2 T / 2, ||disc||^2 T).

    With disc_norm = 0 the wealth is the index itself: 0 for delta < 1 and
    1/2 at the delta = 1 tie.
    """
    if disc_norm < 0 or horizon_T <= 0:
        raise DomainError("need disc_norm >= 0 and horizon_T > 0")
    _check_probability('delta', delta, upper_closed=True)
    log_factor = math.log(1.0 / delta)
    if disc_norm == 0:
        return 0.5 if delta == 1.0 else 0.0
    scale = disc_norm * math.sqrt(horizon_T)
    return float(normal_cdf(0.5 * scale - log_factor / scale))


def detection_thresholds(epsilon, delta, horizon_T):
    """
    Return the weak, loose and improved discrepancy thresholds.
    """
    _check_probability('epsilon', epsilon)
    _check_probability('delta', delta)
    if horizon_T <= 0:
        raise DomainError("horizon_T must be positive")
    z_eps = upper_quantile(epsilon)
    z_delta = upper_quantile(delta)
    log_factor = math.log(1.0 / delta)
    root_T = math.sqrt(horizon_T)
    return DetectionThresholds(
        weak=(z_eps + math.sqrt(z_eps ** 2 + 2.0 * log_factor)) / root_T,
        loose=(2.0 * z_eps + math.sqrt(2.0 * log_factor)) / root_T,
        improved=(z_eps + z_delta) / root_T,
    )


def critical_horizon(disc_norm, epsilon, delta):
    """
    Horizon beyond which the weak threshold drops below `disc_norm`.
    """
    if disc_norm <= 0:
        return math.inf
    z_eps = upper_quantile(epsilon)
    root = z_eps + math.sqrt(z_eps ** 2 + 2.0 * math.log(1.0 / delta))
    return (root / disc_norm) ** 2


@dataclass(frozen=True)
class HorizonReport:
    epsilon: float
    delta: float
    horizon_T: float
    z_epsilon: float
    z_delta: float
    threshold_weak: float
    threshold_loose: float
    threshold_improved: float
    disc_norm: float
    p_outperform: float
    critical_horizon: float
    verdict: str

    def as_dict(self):
        return dict(self.__dict__)


# Rounding slack on p_outperform >= 1 - epsilon; it decides exact ties.
TIE_TOLERANCE = 1e-12


def horizon_verdict(disc_norm, epsilon, delta, horizon_T):
    """
    Return ``(p_outperform, verdict)``.

    The verdict is OUTPERFORMS_WHP when p_outperform >= 1 - epsilon, which
    is disc_norm >= threshold_weak in exact arithmetic; a discrepancy at
    the threshold counts as outperforming.
    """
    _check_probability('epsilon', epsilon)
    p_outperform = outperformance_probability(disc_norm, horizon_T, delta)
    if p_outperform >= 1.0 - epsilon - TIE_TOLERANCE:
        return p_outperform, VERDICTS.outperforms
    return p_outperform, VERDICTS.scapm


def horizon_report(spec, epsilon, delta, horizon_T, tol=None):
    """
    Analyse a viable market over one (epsilon, delta, T) combination.
    """
    profile = risk_profile(spec, tol)
    disc_norm = 0.0 if profile.is_scapm else profile.disc_norm
    thresholds = detection_thresholds(epsilon, delta, horizon_T)
    p_outperform, verdict = horizon_verdict(disc_norm, epsilon, delta,
                                            horizon_T)
    return HorizonReport(
        epsilon=epsilon,
        delta=delta,
        horizon_T=horizon_T,
        z_epsilon=upper_quantile(epsilon),
        z_delta=upper_quantile(delta),
        threshold_weak=thresholds.weak,
        threshold_loose=thresholds.loose,
        threshold_improved=thresholds.improved,
        disc_norm=disc_norm,
        p_outperform=p_outperform,
        critical_horizon=critical_horizon(disc_norm, epsilon, delta),
        verdict=verdict,
    )


@dataclass(frozen=True)
class OutperformanceEstimate:
    probability: float
    ci_low: float
    ci_high: float
    hits: int
    n_paths: int
    confidence: float

    def covers(self, value):
        return self.ci_low <= value <= self.ci_high

    def as_dict(self):
        return dict(self.__dict__)


def binomial_interval(hits, n, confidence=0.99):
    """
    Clopper-Pearson interval for a binomial proportion.
    """
    alpha = 1.0 - confidence
    low = 0.0 if hits == 0 else stats.beta.ppf(alpha / 2, hits, n - hits + 1)
    high = 1.0 if hits == n else stats.beta.ppf(1 - alpha / 2, hits + 1,
                                                n - hits)
    return float(low), float(high)


def monte_carlo_outperformance(market, cfg, delta, confidence=0.99,
                               workers=1):
    """
    Fraction of paths with ln K_T - ln S^0_T > ln(1/delta).
    """
    _check_probability('delta', delta, upper_closed=True)
    log_factor = math.log(1.0 / delta)
    hits = 0
    for bundle in iter_path_chunks(market, cfg, workers=workers):
        bundle = log_wealth_path(market, bundle)
        excess = bundle.log_K[:, -1] - bundle.log_S[:, -1, 0]
        hits += int(np.count_nonzero(excess > log_factor))
    low, high = binomial_interval(hits, cfg.n_paths, confidence)
    return OutperformanceEstimate(probability=hits / cfg.n_paths,
                                  ci_low=low, ci_high=high, hits=hits,
                                  n_paths=cfg.n_paths, confidence=confidence)


@dataclass(frozen=True)
class CheckpointSummary:
    """
    Monte Carlo summary of a per-path statistic at one grid time, next to
    the values the Gaussian structure of ln K_t - ln S^0_t predicts.
    """
    t: float
    variance_budget: float
    mean: float
    sd: float
    se: float
    quantiles: tuple
    expected_mean: float
    expected_sd: float

    def mean_within(self, n_se):
        return abs(self.mean - self.expected_mean) <= n_se * self.se

    def sd_within(self, rel):
        return abs(self.sd / self.expected_sd - 1.0) <= rel

    def as_dict(self):
        data = dict(self.__dict__)
        data['quantiles'] = dict(zip(
            ['q{:02d}'.format(int(q * 100)) for q in QUANTILE_LEVELS],
            self.quantiles))
        return data


def _collect(market, cfg, checkpoints, statistic, workers):
    schedule = as_schedule(market, cfg.horizon_T)
    indices = [grid_index(cfg.times, t) for t in checkpoints]
    budgets = [discrepancy_integral(schedule, float(cfg.times[i]),
                                    cfg.horizon_T) for i in indices]
    values = np.empty((cfg.n_paths, len(indices)))
    for bundle in iter_path_chunks(schedule, cfg, workers=workers):
        bundle = log_wealth_path(schedule, bundle)
        excess = (bundle.log_K[:, indices] - bundle.log_S[:, indices, 0])
        rows = slice(bundle.path_offset, bundle.path_offset + bundle.n_paths)
        values[rows] = statistic(excess, np.array(budgets))
    return indices, budgets, values


def _summaries(cfg, indices, budgets, values, expected):
    summaries = []
    for column, (index, budget) in enumerate(zip(indices, budgets)):
        sample = values[:, column]
        sd = float(np.std(sample, ddof=1)) if cfg.n_paths > 1 else 0.0
        expected_mean, expected_sd = expected(budget)
        summaries.append(CheckpointSummary(
            t=float(cfg.times[index]),
            variance_budget=budget,
            mean=float(np.mean(sample)),
            sd=sd,
            se=expected_sd / math.sqrt(cfg.n_paths),
            quantiles=tuple(float(q) for q in
                            np.quantile(sample, QUANTILE_LEVELS)),
            expected_mean=expected_mean,
            expected_sd=expected_sd,
        ))
    return summaries


def asymptotic_ratio_experiment(market, cfg, checkpoints, workers=1):
    """
    Summaries of (ln K_t - ln S^0_t) / int_0^t ||disc||^2 ds at each
    checkpoint. The ratio has mean 1/2 and SD 1/sqrt(int ||disc||^2).
    """
    schedule = as_schedule(market, cfg.horizon_T)
    if all(risk_profile(spec).is_scapm for spec in schedule.markets):
        raise DomainError(
            "the ratio needs int ||theta - sigma^0||^2 dt to grow without "
            "bound; this market has zero discrepancy")
    if min(discrepancy_integral(schedule, t, cfg.horizon_T)
           for t in checkpoints) <= 0:
        raise DomainError("checkpoints must lie after the first discrepancy")
    indices, budgets, values = _collect(
        schedule, cfg, checkpoints,
        lambda excess, budget: excess / budget, workers)
    summaries = _summaries(cfg, indices, budgets, values,
                           lambda v: (0.5, 1.0 / math.sqrt(v)))
    for summary in summaries:
        logger.info("ratio at t=%g: mean %.5f sd %.5f (expected 0.5, %.5f)",
                    summary.t, summary.mean, summary.sd, summary.expected_sd)
    return summaries


def lil_experiment(market, cfg, checkpoints, workers=1):
    """
    Summaries of the iterated-logarithm statistic at each checkpoint; at a
    fixed time it is Normal(0, 1 / (2 ln ln V)).
    """
    schedule = as_schedule(market, cfg.horizon_T)
    budgets = [discrepancy_integral(schedule, t, cfg.horizon_T)
               for t in checkpoints]
    if min(budgets) <= math.e:
        raise DomainError(
            "every checkpoint needs int ||disc||^2 ds > e, got {}".format(
                min(budgets)))

    def statistic(excess, budget):
        return (excess - 0.5 * budget) / np.sqrt(
            2.0 * budget * np.log(np.log(budget)))

    indices, budgets, values = _collect(schedule, cfg, checkpoints,
                                        statistic, workers)
    return _summaries(
        cfg, indices, budgets, values,
        lambda v: (0.0, 1.0 / math.sqrt(2.0 * math.log(math.log(v)))))
