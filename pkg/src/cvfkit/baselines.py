"""Comparison procedures: fixed normal quantile, residual bootstraps, and
overlapping-block subsampling.

Both bootstraps regenerate pseudo-series recursively under the null slope
(beta = 0) with the OLS autoregressive estimate; residual pairs are
resampled jointly so the cross-correlation that drives the size problem
is preserved.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from . import model as pm
from .engine import RejectionEstimate, _draw_paths, default_statistic, derive_seed
from .errors import DegenerateSample
from .rng import child_rng

NORMAL_QUANTILE = "normal_quantile"
BOOTSTRAP_NP = "bootstrap_np"
BOOTSTRAP_PARAM = "bootstrap_param"
SUBSAMPLING = "subsampling"
BASELINE_KINDS = (NORMAL_QUANTILE, BOOTSTRAP_NP, BOOTSTRAP_PARAM, SUBSAMPLING)


def default_block_size(T):
    """floor(T^{2/3}): 21 at T = 100."""
    return int(math.floor(T ** (2.0 / 3.0)))


@dataclass(frozen=True)
class BaselineConfig:
    kind: str
    alpha: float = 0.10
    B: int = 399
    block_size: int | None = None  # subsampling window, default floor(T^{2/3})
    sigma_yy: float = 1.0          # statistic scale, as in the known-cov tests
    det_kind: str = pm.INTERCEPT
    beta0: float = 0.0

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"kind must be one of {BASELINE_KINDS}")
        if self.B < 99:
            raise ValueError("need B >= 99 bootstrap replications")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")

    def block_for(self, T):
        b = self.block_size if self.block_size is not None else default_block_size(T)
        if not 2 <= b <= T - 1:
            raise ValueError("block_size must lie in [2, T-1]")
        return b


def normal_quantile_test(psi, alpha):
    """Reject iff psi exceeds the 1-alpha standard normal quantile."""
    return bool(psi > scipy.stats.norm.ppf(1.0 - alpha))


def _ols_fit(sample, kind):
    """OLS of y on deterministics + x_{t-1}, and x on x_{t-1} (no intercept)."""
    x_lag = pm.lagged(sample.x)
    xl_mu = pm.demean(x_lag, kind)
    y_mu = pm.demean(sample.y, kind)
    ssq = float(np.sum(xl_mu**2))
    if ssq <= 0.0:
        raise DegenerateSample("regressor has no variation after demeaning")
    beta_hat = float(np.sum(xl_mu * y_mu)) / ssq
    resid_y = y_mu - beta_hat * xl_mu
    denom = float(np.sum(x_lag**2))
    if denom <= 0.0:
        raise DegenerateSample("lagged regressor is identically zero")
    gamma_hat = float(np.sum(x_lag * sample.x)) / denom
    resid_x = sample.x - gamma_hat * x_lag
    return beta_hat, gamma_hat, resid_y, resid_x


def _bootstrap_quantile(values, alpha):
    """ceil((B+1)(1-alpha))-th order statistic of the replicate statistics."""
    b = values.size
    rank = min(b, int(math.ceil((b + 1) * (1.0 - alpha))))
    return float(np.sort(values)[rank - 1])


def bootstrap_test(sample, cfg, seed):
    """Residual bootstrap of the t-statistic under the null slope.

    Nonparametric: joint resampling of centered residual pairs.
    Parametric: bivariate normal draws with the residual covariance.
    Rejects iff the observed statistic exceeds the empirical 1-alpha
    quantile of the B pseudo-sample statistics.
    """
    if cfg.kind not in (BOOTSTRAP_NP, BOOTSTRAP_PARAM):
        raise ValueError("bootstrap_test needs a bootstrap config")
    T = sample.T
    psi_obs = pm.t_statistic(sample, cfg.sigma_yy, cfg.beta0, cfg.det_kind)
    _, gamma_hat, resid_y, resid_x = _ols_fit(sample, cfg.det_kind)
    ey = resid_y - resid_y.mean()
    ex = resid_x - resid_x.mean()
    rng = child_rng(seed, "bootstrap")
    if cfg.kind == BOOTSTRAP_NP:
        idx = rng.integers(0, T, size=(cfg.B, T))
        eps_y, eps_x = ey[idx], ex[idx]
    else:
        cov = np.cov(np.stack([ey, ex]), bias=True)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise DegenerateSample("residual covariance is singular") from exc
        z = rng.standard_normal((cfg.B, T, 2))
        eps_y = chol[0, 0] * z[:, :, 0]
        eps_x = chol[1, 0] * z[:, :, 0] + chol[1, 1] * z[:, :, 1]
    x_star = pm._ar1_recursion(eps_x, gamma_hat)
    y_star = eps_y  # null slope imposed; deterministic part drops by invariance
    psi_star = default_statistic(y_star, x_star, (cfg.sigma_yy, 0.0, 0.0), cfg.beta0, cfg.det_kind)
    return bool(psi_obs > _bootstrap_quantile(psi_star, cfg.alpha))


def block_statistics(sample, block_size, cfg):
    """t-statistic over every overlapping block, re-zeroing the x origin.

    Block s covers t = s+1 .. s+b; its lag vector starts at the block's
    own origin (x*_0 = 0), and demeaning is per block.
    """
    T = sample.T
    b = block_size
    n_blocks = T - b + 1
    y_blocks = np.lib.stride_tricks.sliding_window_view(sample.y, b)
    lag_core = np.lib.stride_tricks.sliding_window_view(sample.x, b - 1)[:n_blocks]
    origins = np.concatenate([[0.0], sample.x[: n_blocks - 1]])
    lags = np.concatenate(
        [np.zeros((n_blocks, 1)), lag_core - origins[:, None]], axis=1
    )
    xl_mu = pm.demean(lags, cfg.det_kind)
    ssq = np.sum(xl_mu**2, axis=-1)
    if np.any(ssq <= 0.0):
        raise DegenerateSample("a block has no regressor variation")
    beta_hat = np.sum(xl_mu * y_blocks, axis=-1) / ssq
    return (beta_hat - cfg.beta0) * np.sqrt(ssq) / math.sqrt(cfg.sigma_yy)


def subsampling_test(sample, cfg, seed=None):
    """Reject iff the full-sample statistic exceeds the empirical 1-alpha
    quantile of the overlapping-block statistics."""
    if cfg.kind != SUBSAMPLING:
        raise ValueError("subsampling_test needs a subsampling config")
    T = sample.T
    b = cfg.block_for(T)
    psi_obs = pm.t_statistic(sample, cfg.sigma_yy, cfg.beta0, cfg.det_kind)
    stats = block_statistics(sample, b, cfg)
    if stats.size == 1:
        raise DegenerateSample("a single block cannot form a critical value")
    crit = float(np.quantile(stats, 1.0 - cfg.alpha, method="higher"))
    return bool(psi_obs > crit)


def baseline_rejection_rate(kind, gamma, cov, T, J, seed, alpha=0.10, B=399,
                            block_size=None, det_kind=pm.INTERCEPT, beta=0.0):
    """Monte Carlo rejection rate of a baseline test at (beta, gamma)."""
    cfg = BaselineConfig(
        kind=kind, alpha=alpha, B=B, block_size=block_size,
        sigma_yy=cov.sigma_yy, det_kind=det_kind,
    )
    rng_paths = child_rng(seed, "baseline-paths")
    y, x = _draw_paths(cov, gamma, T, rng_paths, J, beta=beta)
    if kind == NORMAL_QUANTILE:
        psi = default_statistic(y, x, (cov.sigma_yy, cov.sigma_xy, cov.sigma_xx), 0.0, det_kind)
        crit = scipy.stats.norm.ppf(1.0 - alpha)
        return RejectionEstimate(p_hat=float(np.mean(psi > crit)), reps=J)
    hits = 0
    for j in range(J):
        s = pm.Sample(y=y[j], x=x[j])
        if kind == SUBSAMPLING:
            hits += subsampling_test(s, cfg)
        else:
            hits += bootstrap_test(s, cfg, derive_rep_seed(seed, j))
    return RejectionEstimate(p_hat=hits / J, reps=J)


def derive_rep_seed(seed, rep):
    return derive_seed(seed, "baseline-rep", rep)
