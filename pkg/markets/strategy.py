"""
The index-beating wealth process K_t = R_t dP/dQ along simulated paths:

    ln K_t = int r ds + int theta . dW + 1/2 int ||theta||^2 ds,

and the checks built around it.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, MarketStructureError, ScapmError
from .market_model import replication_weights, risk_profile
from .simulation import (
    SimulationConfig, as_schedule, coarsen_increments, diffuse, grid_index,
    iter_path_chunks, log_price_increments, simulate_from_increments)

logger = logging.getLogger(__name__)

SCHEMES = ('euler', 'milstein')


def _schedule_for(market, bundle):
    schedule = as_schedule(market, float(bundle.times[-1]))
    if schedule.brownian_dim != bundle.brownian_dim:
        raise MarketStructureError(
            "market has Brownian dimension {} but the bundle {}".format(
                schedule.brownian_dim, bundle.brownian_dim))
    if schedule.n_assets != bundle.n_assets:
        raise MarketStructureError(
            "market has {} securities but the bundle {}".format(
                schedule.n_assets, bundle.n_assets))
    return schedule


def _segments(market, bundle):
    schedule = _schedule_for(market, bundle)
    return [(spec, risk_profile(spec), start, stop)
            for spec, start, stop in schedule.step_slices(bundle.n_steps,
                                                          bundle.dt)]


def _accumulate(increments):
    out = np.zeros((increments.shape[0], increments.shape[1] + 1))
    np.cumsum(increments, axis=1, out=out[:, 1:])
    return out


def log_wealth_path(market, bundle):
    """
    Return `bundle` with log_K filled in, using the same Brownian increments
    as the prices.

    On a segment where the market is exactly SCAPM the strategy holds the
    index alone, so its increments are the index's own.
    """
    dt = bundle.dt
    d_log_K = np.empty((bundle.n_paths, bundle.n_steps))
    for spec, profile, start, stop in _segments(market, bundle):
        if profile.is_scapm:
            d_log_K[:, start:stop] = log_price_increments(
                spec, bundle.dW[:, start:stop, :], dt)[..., 0]
            continue
        drift = (spec.r + 0.5 * float(profile.theta @ profile.theta)) * dt
        d_log_K[:, start:stop] = drift + diffuse(
            bundle.dW[:, start:stop, :], profile.theta)[..., 0]
    return bundle.with_log_K(_accumulate(d_log_K))


def _require_log_K(bundle):
    if bundle.log_K is None:
        raise ScapmError("bundle has no log wealth; run log_wealth_path first")


def central_identity_residual(market, bundle):
    """
    [ln K_t - ln S^0_t] - [1/2 int ||disc||^2 ds + int disc . dW] on the
    grid, shape (n_paths, n_steps + 1). Zero up to rounding.
    """
    _require_log_K(bundle)
    dt = bundle.dt
    d_expected = np.empty((bundle.n_paths, bundle.n_steps))
    for _, profile, start, stop in _segments(market, bundle):
        d_expected[:, start:stop] = 0.5 * profile.disc_norm_sq * dt + diffuse(
            bundle.dW[:, start:stop, :], profile.disc)[..., 0]
    excess = bundle.log_K - bundle.log_S[:, :, 0]
    return excess - _accumulate(d_expected)


def discrepancy_integral(market, t, horizon_T=None):
    """
    int_0^t ||theta_s - sigma^0_s||^2 ds.
    """
    schedule = as_schedule(market, t if horizon_T is None else horizon_T)
    total = 0.0
    elapsed = 0.0
    for duration, spec in schedule.segments:
        overlap = min(duration, max(0.0, t - elapsed))
        if overlap > 0:
            total += risk_profile(spec).disc_norm_sq * overlap
        elapsed += duration
    return total


@dataclass(frozen=True, eq=False)
class ReplicationResult:
    max_discrepancy: np.ndarray
    censored: int
    scheme: str

    @property
    def mean_max_discrepancy(self):
        kept = self.max_discrepancy[~np.isnan(self.max_discrepancy)]
        return float(np.mean(kept)) if kept.size else math.nan


def replicate_and_compare(market, bundle, scheme='milstein'):
    """
    Trade the constant fractions `replication_weights` on the grid and
    report, per path, max_t |ln V_t - ln K_t|.

    ``euler`` compounds 1 + (r + pi.(mu - r)) dt + pi.sigma.dW each step;
    ``milstein`` adds ((pi.sigma.dW)^2 - ||sigma^T pi||^2 dt) / 2. A path
    whose one-step factor is not positive is censored (NaN).
    """
    if scheme not in SCHEMES:
        raise ValueError("unknown scheme {!r}".format(scheme))
    _require_log_K(bundle)
    dt = bundle.dt
    growth = np.empty((bundle.n_paths, bundle.n_steps))
    for spec, _, start, stop in _segments(market, bundle):
        pi = replication_weights(spec)
        exposure = spec.sigma.T @ pi
        drift = (spec.r + float(pi @ spec.excess_appreciation)) * dt
        shock = diffuse(bundle.dW[:, start:stop, :], exposure)[..., 0]
        growth[:, start:stop] = drift + shock
        if scheme == 'milstein':
            growth[:, start:stop] += 0.5 * (
                shock ** 2 - float(exposure @ exposure) * dt)
    censored_rows = np.any(growth <= -1.0, axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        log_V = _accumulate(np.log1p(growth))
    discrepancy = np.max(np.abs(log_V - bundle.log_K), axis=1)
    discrepancy[censored_rows] = np.nan
    censored = int(np.count_nonzero(censored_rows))
    if censored:
        logger.warning("%d of %d replication paths censored (non-positive "
                       "wealth step)", censored, bundle.n_paths)
    return ReplicationResult(max_discrepancy=discrepancy, censored=censored,
                             scheme=scheme)


@dataclass(frozen=True)
class RefinementResult:
    n_steps: tuple
    mean_errors: tuple
    censored: int

    @property
    def ratios(self):
        """
        Error at each level divided by the error at the next finer level.
        """
        return tuple(coarse / fine for coarse, fine
                     in zip(self.mean_errors, self.mean_errors[1:]))


def replication_refinement(market, cfg, levels=3, scheme='milstein',
                           workers=1):
    """
    Compare replication on `levels` nested grids driven by one Brownian
    path: ``cfg.n_steps`` is the finest grid, each coarser level halves it.
    """
    if cfg.n_steps % (2 ** (levels - 1)):
        raise ValueError("n_steps must be divisible by 2**(levels - 1)")
    configs = [SimulationConfig(cfg.horizon_T, cfg.n_steps // 2 ** j,
                                cfg.n_paths, cfg.seed)
               for j in reversed(range(levels))]
    sums = [0.0] * levels
    counts = [0] * levels
    censored = 0
    for bundle in iter_path_chunks(market, cfg, workers=workers):
        increments = [bundle.dW]
        for _ in range(levels - 1):
            increments.insert(0, coarsen_increments(increments[0]))
        for level, level_cfg in enumerate(configs):
            coarse = simulate_from_increments(market, level_cfg,
                                              increments[level],
                                              bundle.path_offset)
            result = replicate_and_compare(
                market, log_wealth_path(market, coarse), scheme)
            kept = result.max_discrepancy[~np.isnan(result.max_discrepancy)]
            sums[level] += float(np.sum(kept))
            counts[level] += kept.size
            censored += result.censored
    mean_errors = tuple(s / c if c else math.nan
                        for s, c in zip(sums, counts))
    logger.info("replication refinement %s: errors %s",
                [c.n_steps for c in configs], mean_errors)
    return RefinementResult(n_steps=tuple(c.n_steps for c in configs),
                            mean_errors=mean_errors, censored=censored)


def lil_statistic(market, bundle, t):
    """
    [ln K_t - ln S^0_t - V/2] / sqrt(2 V ln ln V) per path, with
    V = int_0^t ||disc_s||^2 ds, which must exceed e.
    """
    _require_log_K(bundle)
    index = grid_index(bundle.times, t)
    variance = discrepancy_integral(market, float(bundle.times[index]),
                                    float(bundle.times[-1]))
    if variance <= math.e:
        raise DomainError(
            "the iterated-logarithm statistic needs int ||disc||^2 ds > e, "
            "got {}".format(variance))
    excess = bundle.log_K[:, index] - bundle.log_S[:, index, 0]
    scale = math.sqrt(2.0 * variance * math.log(math.log(variance)))
    return (excess - 0.5 * variance) / scale
