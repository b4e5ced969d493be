"""
Constant-coefficient multi-asset Black-Scholes markets and the static risk
quantities derived from them.

Security 0 is always the index. Prices follow

    dS^k / S^k = mu^k dt + sigma^k . dW,    k = 0..K,

with W a standard Brownian motion of dimension D_b.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .conf import get_setting
from .exceptions import MarketStructureError, NonViableMarketError

logger = logging.getLogger(__name__)

# ||disc|| below this (scaled by max(1, ||theta||)) is an exact SCAPM market.
SCAPM_TOLERANCE = 1e-12


def _frozen(values, ndim):
    array = np.array(values, dtype=np.float64, ndmin=ndim)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class MarketSpec:
    """
    The market's constant coefficients: interest rate `r`, appreciation
    vector `mu` (length K+1) and volatility matrix `sigma`
    ((K+1) x D_b, row k is the volatility vector of security k).
    """
    r: float
    mu: np.ndarray
    sigma: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        object.__setattr__(self, 'r', float(self.r))
        object.__setattr__(self, 'mu', _frozen(self.mu, 1))
        object.__setattr__(self, 'sigma', _frozen(self.sigma, 2))
        if self.mu.ndim != 1 or self.sigma.ndim != 2:
            raise MarketStructureError("mu must be a vector and sigma a matrix")
        if self.sigma.shape[0] != self.mu.shape[0]:
            raise MarketStructureError(
                "sigma has {} rows but mu has {} entries".format(
                    self.sigma.shape[0], self.mu.shape[0]))
        if self.sigma.shape[1] < 1:
            raise MarketStructureError("the Brownian dimension must be >= 1")
        if not (np.isfinite(self.r) and np.all(np.isfinite(self.mu))
                and np.all(np.isfinite(self.sigma))):
            raise MarketStructureError("market coefficients must be finite")
        if self.brownian_dim > self.n_assets:
            raise MarketStructureError(
                "Brownian dimension {} exceeds the number of securities "
                "{}".format(self.brownian_dim, self.n_assets))
        rank = np.linalg.matrix_rank(self.sigma)
        if rank < self.brownian_dim:
            raise MarketStructureError(
                "sigma has rank {} < {}: the market is incomplete".format(
                    rank, self.brownian_dim))
        if self.labels is None:
            labels = ['index'] + ['stock{}'.format(k)
                                  for k in range(1, self.n_assets)]
        else:
            labels = [str(label) for label in self.labels]
        if len(labels) != self.n_assets:
            raise MarketStructureError(
                "{} labels given for {} securities".format(
                    len(labels), self.n_assets))
        object.__setattr__(self, 'labels', tuple(labels))

    @property
    def n_assets(self):
        """K + 1, the index included."""
        return self.mu.shape[0]

    @property
    def brownian_dim(self):
        return self.sigma.shape[1]

    @property
    def index_volatility(self):
        return self.sigma[0]

    @property
    def excess_appreciation(self):
        return self.mu - self.r

    def __eq__(self, other):
        if not isinstance(other, MarketSpec):
            return NotImplemented
        return (self.r == other.r
                and np.array_equal(self.mu, other.mu)
                and np.array_equal(self.sigma, other.sigma)
                and self.labels == other.labels)

    def __hash__(self):
        return hash((self.r, self.mu.tobytes(), self.sigma.tobytes(),
                     self.labels))


@dataclass(frozen=True, eq=False)
class RiskProfile:
    """
    Risk quantities derived from a viable market.
    """
    theta: np.ndarray
    disc: np.ndarray
    disc_norm_sq: float
    scapm_residuals: np.ndarray
    deficits: np.ndarray
    optimal_growth_rate: float
    growth_rates: np.ndarray
    equity_premium_gap: float
    capm_betas: np.ndarray = None
    condition_number: float = 1.0

    @property
    def disc_norm(self):
        return float(np.sqrt(self.disc_norm_sq))

    @property
    def is_scapm(self):
        """
        True when theta coincides with the index volatility up to rounding.
        """
        scale = max(1.0, float(np.linalg.norm(self.theta)))
        return self.disc_norm <= SCAPM_TOLERANCE * scale

    def as_dict(self):
        return {
            'theta': self.theta.tolist(),
            'disc': self.disc.tolist(),
            'disc_norm_sq': self.disc_norm_sq,
            'disc_norm': self.disc_norm,
            'is_scapm': self.is_scapm,
            'scapm_residuals': self.scapm_residuals.tolist(),
            'deficits': self.deficits.tolist(),
            'optimal_growth_rate': self.optimal_growth_rate,
            'growth_rates': self.growth_rates.tolist(),
            'equity_premium_gap': self.equity_premium_gap,
            'capm_betas': (None if self.capm_betas is None
                           else self.capm_betas.tolist()),
            'condition_number': self.condition_number,
        }


def _viability_scale(spec):
    return max(1.0, float(np.linalg.norm(spec.excess_appreciation)))


def check_viability(spec, tol=None):
    """
    Return ``(viable, residual)`` where `residual` is the Euclidean norm of
    the least-squares residual of ``sigma . theta = mu - r*1``.

    `tol` is relative to max(1, ||mu - r*1||).
    """
    if tol is None:
        tol = get_setting('SCAPM_VIABILITY_TOLERANCE')
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    theta, _, rank, _ = np.linalg.lstsq(spec.sigma, spec.excess_appreciation,
                                        rcond=None)
    if rank < spec.brownian_dim:
        raise MarketStructureError("sigma is rank deficient")
    residual = float(np.linalg.norm(spec.sigma @ theta
                                    - spec.excess_appreciation))
    return residual <= tol * _viability_scale(spec), residual


def solve_theta(spec, tol=None):
    """
    Market price of risk: the unique theta with sigma . theta = mu - r*1.

    Square markets use the inverse-matrix solution, markets with fewer
    Brownian motions than securities the normal equations.
    """
    if tol is None:
        tol = get_setting('SCAPM_VIABILITY_TOLERANCE')
    viable, residual = check_viability(spec, tol)
    if not viable:
        raise NonViableMarketError(residual, tol * _viability_scale(spec))
    excess = spec.excess_appreciation
    if spec.brownian_dim == spec.n_assets:
        theta = np.linalg.solve(spec.sigma, excess)
    else:
        gram = spec.sigma.T @ spec.sigma
        theta = np.linalg.solve(gram, spec.sigma.T @ excess)
    logger.debug("theta=%s (residual %.2e)", theta, residual)
    return theta


def condition_number(spec):
    """
    Condition number of the matrix actually inverted by `solve_theta`.
    """
    if spec.brownian_dim == spec.n_assets:
        return float(np.linalg.cond(spec.sigma))
    return float(np.linalg.cond(spec.sigma.T @ spec.sigma))


def growth_rates(spec):
    """
    Log growth rate mu^k - ||sigma^k||^2 / 2 of each security.
    """
    return spec.mu - 0.5 * np.sum(spec.sigma ** 2, axis=1)


def capm_betas(spec):
    """
    Standard CAPM betas sigma^k . sigma^0 / ||sigma^0||^2.
    """
    index_var = float(spec.index_volatility @ spec.index_volatility)
    if index_var == 0.0:
        raise MarketStructureError("the index has zero volatility")
    return spec.sigma @ spec.index_volatility / index_var


def capm_residuals(spec):
    """
    mu^k - r - beta^k (mu^0 - r): the standard-CAPM part of SCAPM.
    """
    excess = spec.excess_appreciation
    return excess - capm_betas(spec) * excess[0]


def scapm_residuals(spec):
    """
    mu^k - r - sigma^k . sigma^0 for every security.
    """
    return spec.excess_appreciation - spec.sigma @ spec.index_volatility


def risk_profile(spec, tol=None):
    theta = solve_theta(spec, tol)
    disc = theta - spec.index_volatility
    gaps = theta[np.newaxis, :] - spec.sigma
    index_vol_sq = float(spec.index_volatility @ spec.index_volatility)
    return RiskProfile(
        theta=theta,
        disc=disc,
        disc_norm_sq=float(disc @ disc),
        scapm_residuals=scapm_residuals(spec),
        deficits=0.5 * np.sum(gaps ** 2, axis=1),
        optimal_growth_rate=spec.r + 0.5 * float(theta @ theta),
        growth_rates=growth_rates(spec),
        equity_premium_gap=float(spec.excess_appreciation[0]) - index_vol_sq,
        capm_betas=capm_betas(spec) if index_vol_sq > 0 else None,
        condition_number=condition_number(spec),
    )


def replication_weights(spec, tol=None):
    """
    Fractions of wealth held in each security (the rest earns r) with
    sigma^T . pi = theta; minimum-norm when D_b < K+1.
    """
    theta = solve_theta(spec, tol)
    if spec.brownian_dim == spec.n_assets:
        return np.linalg.solve(spec.sigma.T, theta)
    gram = spec.sigma.T @ spec.sigma
    return spec.sigma @ np.linalg.solve(gram, theta)


def market_with_discrepancy(r, sigma, disc=None, labels=None):
    """
    Build the market with volatility `sigma` whose discrepancy
    theta - sigma^0 equals `disc` (zero gives the SCAPM market).
    """
    sigma = np.array(sigma, dtype=np.float64, ndmin=2)
    if disc is None:
        disc = np.zeros(sigma.shape[1])
    theta = sigma[0] + np.asarray(disc, dtype=np.float64)
    return MarketSpec(r=r, mu=r + sigma @ theta, sigma=sigma, labels=labels)


def market_to_dict(spec):
    return {
        'r': spec.r,
        'mu': spec.mu.tolist(),
        'sigma': spec.sigma.tolist(),
        'labels': list(spec.labels),
    }
