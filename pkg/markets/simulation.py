"""
Exact grid-point simulation of the market's log prices.

Randomness is keyed by (seed, path_index): every path owns a Philox stream
whose counter walks its (step, dimension) cells in row-major order, so a
path is the same whichever chunk or thread produced it.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DomainError, MarketStructureError, ScheduleError
from .market_model import MarketSpec
from .normal import inverse_normal_cdf

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1

DEFAULT_CHUNK_SIZE = 1024

# Relative slack allowed when matching times against the grid.
GRID_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SimulationConfig:
    horizon_T: float
    n_steps: int
    n_paths: int
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.horizon_T) and self.horizon_T > 0):
            raise ValueError("horizon_T must be positive")
        if int(self.n_steps) < 1 or int(self.n_paths) < 1:
            raise ValueError("n_steps and n_paths must be at least 1")
        object.__setattr__(self, 'horizon_T', float(self.horizon_T))
        object.__setattr__(self, 'n_steps', int(self.n_steps))
        object.__setattr__(self, 'n_paths', int(self.n_paths))
        object.__setattr__(self, 'seed', int(self.seed) & SEED_MASK)

    @property
    def dt(self):
        return self.horizon_T / self.n_steps

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    def as_dict(self):
        return {
            'horizon_T': self.horizon_T,
            'n_steps': self.n_steps,
            'n_paths': self.n_paths,
            'seed': self.seed,
        }


@dataclass(frozen=True)
class MarketSchedule:
    """
    Deterministic piecewise-constant coefficients: consecutive
    ``(duration, MarketSpec)`` segments.
    """
    segments: tuple

    def __post_init__(self):
        segments = tuple((float(duration), spec)
                         for duration, spec in self.segments)
        if not segments:
            raise ScheduleError("a schedule needs at least one segment")
        first = segments[0][1]
        for duration, spec in segments:
            if not (math.isfinite(duration) and duration > 0):
                raise ScheduleError("segment durations must be positive")
            if (spec.n_assets != first.n_assets
                    or spec.brownian_dim != first.brownian_dim):
                raise MarketStructureError(
                    "all segments must share the number of securities and "
                    "the Brownian dimension")
        object.__setattr__(self, 'segments', segments)

    @property
    def total_duration(self):
        return math.fsum(duration for duration, _ in self.segments)

    @property
    def markets(self):
        return [spec for _, spec in self.segments]

    @property
    def n_assets(self):
        return self.segments[0][1].n_assets

    @property
    def brownian_dim(self):
        return self.segments[0][1].brownian_dim

    @property
    def labels(self):
        return self.segments[0][1].labels

    def step_slices(self, n_steps, dt):
        """
        Return ``[(spec, start, stop)]`` step ranges of every segment on a
        uniform grid of `n_steps` steps of size `dt`.
        """
        horizon = n_steps * dt
        if abs(self.total_duration - horizon) > GRID_TOLERANCE * horizon:
            raise ScheduleError(
                "schedule durations sum to {} but the horizon is {}".format(
                    self.total_duration, horizon))
        slices = []
        start = 0
        elapsed = 0.0
        for duration, spec in self.segments:
            elapsed += duration
            stop = round(elapsed / dt)
            if abs(stop * dt - elapsed) > GRID_TOLERANCE * horizon:
                raise ScheduleError(
                    "segment boundary {} is not on the time grid "
                    "(dt = {})".format(elapsed, dt))
            slices.append((spec, start, stop))
            start = stop
        return slices


def as_schedule(market, horizon_T):
    """
    Wrap a single MarketSpec as the one-segment schedule over `horizon_T`.
    """
    if isinstance(market, MarketSchedule):
        return market
    if isinstance(market, MarketSpec):
        return MarketSchedule(((horizon_T, market),))
    raise TypeError("expected a MarketSpec or a MarketSchedule")


@dataclass(frozen=True, eq=False)
class PathBundle:
    """
    One batch of simulated paths; the leading axis of the per-path arrays
    runs over paths ``path_offset .. path_offset + n_paths - 1``.
    """
    times: np.ndarray
    dW: np.ndarray
    log_S: np.ndarray
    log_R: np.ndarray
    log_K: np.ndarray = None
    path_offset: int = 0

    def __post_init__(self):
        for name in ('times', 'dW', 'log_S', 'log_R', 'log_K'):
            value = getattr(self, name)
            if value is not None:
                value.setflags(write=False)

    @property
    def n_paths(self):
        return self.dW.shape[0]

    @property
    def n_steps(self):
        return self.dW.shape[1]

    @property
    def brownian_dim(self):
        return self.dW.shape[2]

    @property
    def n_assets(self):
        return self.log_S.shape[2]

    @property
    def dt(self):
        return self.times[-1] / self.n_steps

    @property
    def path_ids(self):
        return np.arange(self.path_offset, self.path_offset + self.n_paths)

    def brownian(self):
        """
        W on the grid, shape (n_paths, n_steps + 1, D_b).
        """
        return _accumulate(self.dW)

    def with_log_K(self, log_K):
        return replace(self, log_K=log_K)


def grid_index(times, t):
    """
    Index of time `t` on the grid `times`; times off the grid are an error.
    """
    horizon = times[-1]
    index = int(round(t / horizon * (len(times) - 1)))
    if index < 0 or index >= len(times) \
            or abs(times[index] - t) > GRID_TOLERANCE * horizon:
        raise DomainError("time {} is not a grid point".format(t))
    return index


def _accumulate(increments):
    """
    Running sums along the time axis with a leading zero.
    """
    shape = list(increments.shape)
    shape[1] += 1
    out = np.zeros(shape)
    np.cumsum(increments, axis=1, out=out[:, 1:])
    return out


def diffuse(dW, vectors):
    """
    Dot products of Brownian increments with volatility rows:
    ``out[..., k] = vectors[k] . dW[...]``.

    Accumulated dimension by dimension in elementwise operations so that
    the result of a path does not depend on the batch around it.
    """
    vectors = np.atleast_2d(vectors)
    out = dW[..., 0:1] * vectors[:, 0]
    for d in range(1, vectors.shape[1]):
        out = out + dW[..., d:d + 1] * vectors[:, d]
    return out


def log_price_increments(spec, dW, dt):
    """
    (mu^k - ||sigma^k||^2 / 2) dt + sigma^k . dW for every security.
    """
    drift = (spec.mu - 0.5 * np.sum(spec.sigma ** 2, axis=1)) * dt
    return drift + diffuse(dW, spec.sigma)


def _uniforms(seed, path_index, count):
    key = np.array([seed & SEED_MASK, path_index], dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(count)
    # 53 random bits, centred in their cell: strictly inside (0, 1)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def generate_increments(cfg, path_index, d):
    """
    Brownian increments of path `path_index`, shape (n_steps, d), entries
    i.i.d. Normal(0, dt); a pure function of (cfg.seed, path_index).
    """
    if not 0 <= path_index < cfg.n_paths:
        raise ValueError("path_index {} out of range".format(path_index))
    u = _uniforms(cfg.seed, path_index, cfg.n_steps * d)
    z = inverse_normal_cdf(u)
    return (z * math.sqrt(cfg.dt)).reshape(cfg.n_steps, d)


def _chunk_increments(cfg, start, stop, d):
    count = cfg.n_steps * d
    u = np.empty((stop - start, count))
    for row, path_index in enumerate(range(start, stop)):
        u[row] = _uniforms(cfg.seed, path_index, count)
    z = inverse_normal_cdf(u)
    return (z * math.sqrt(cfg.dt)).reshape(stop - start, cfg.n_steps, d)


def coarsen_increments(dW, factor=2):
    """
    Sum consecutive groups of `factor` increments: the same Brownian path
    on a grid with `factor` times fewer steps.
    """
    n_paths, n_steps, d = dW.shape
    if n_steps % factor:
        raise ScheduleError(
            "{} steps cannot be coarsened by {}".format(n_steps, factor))
    grouped = dW.reshape(n_paths, n_steps // factor, factor, d)
    out = grouped[:, :, 0, :]
    for j in range(1, factor):
        out = out + grouped[:, :, j, :]
    return out


def simulate_from_increments(market, cfg, dW, path_offset=0):
    """
    Build the PathBundle driven by the given increments with the exact
    log-space recursion on every segment.
    """
    schedule = as_schedule(market, cfg.horizon_T)
    if dW.shape[1:] != (cfg.n_steps, schedule.brownian_dim):
        raise MarketStructureError(
            "increments of shape {} do not match {} steps x {} "
            "dimensions".format(dW.shape, cfg.n_steps,
                                schedule.brownian_dim))
    dt = cfg.dt
    n_paths = dW.shape[0]
    d_log_S = np.empty((n_paths, cfg.n_steps, schedule.n_assets))
    d_log_R = np.empty(cfg.n_steps)
    for spec, start, stop in schedule.step_slices(cfg.n_steps, dt):
        d_log_S[:, start:stop, :] = log_price_increments(
            spec, dW[:, start:stop, :], dt)
        d_log_R[start:stop] = spec.r * dt
    log_R = np.zeros(cfg.n_steps + 1)
    np.cumsum(d_log_R, out=log_R[1:])
    return PathBundle(times=cfg.times, dW=dW, log_S=_accumulate(d_log_S),
                      log_R=log_R, path_offset=path_offset)


def _simulate_chunk(schedule, cfg, start, stop):
    dW = _chunk_increments(cfg, start, stop, schedule.brownian_dim)
    return simulate_from_increments(schedule, cfg, dW, path_offset=start)


def iter_path_chunks(market, cfg, chunk_size=DEFAULT_CHUNK_SIZE, workers=1):
    """
    Yield PathBundles of at most `chunk_size` paths, in path order.

    With ``workers > 1`` chunks are simulated on a thread pool, `workers`
    chunks at a time; the yielded bundles are identical either way.
    """
    schedule = as_schedule(market, cfg.horizon_T)
    schedule.step_slices(cfg.n_steps, cfg.dt)
    bounds = [(start, min(start + chunk_size, cfg.n_paths))
              for start in range(0, cfg.n_paths, chunk_size)]
    if workers <= 1:
        for start, stop in bounds:
            yield _simulate_chunk(schedule, cfg, start, stop)
        return
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for i in range(0, len(bounds), workers):
            window = bounds[i:i + workers]
            futures = [executor.submit(_simulate_chunk, schedule, cfg,
                                       start, stop)
                       for start, stop in window]
            for future in futures:
                yield future.result()


def _concatenate(bundles):
    first = bundles[0]
    if len(bundles) == 1:
        return first
    log_K = None
    if first.log_K is not None:
        log_K = np.concatenate([b.log_K for b in bundles])
    return PathBundle(times=first.times,
                      dW=np.concatenate([b.dW for b in bundles]),
                      log_S=np.concatenate([b.log_S for b in bundles]),
                      log_R=first.log_R,
                      log_K=log_K,
                      path_offset=first.path_offset)


def schedule_simulate(schedule, cfg, workers=1, chunk_size=DEFAULT_CHUNK_SIZE):
    """
    Simulate all paths of a piecewise-constant schedule in one bundle.
    """
    logger.debug("simulating %d paths x %d steps", cfg.n_paths, cfg.n_steps)
    return _concatenate(list(iter_path_chunks(schedule, cfg, chunk_size,
                                              workers)))


def simulate_prices(spec, cfg, workers=1):
    return schedule_simulate(as_schedule(spec, cfg.horizon_T), cfg, workers)
