"""Predictive regression with an AR(1) regressor: simulation and statistics.

The data-generating process is

    y_t = mu'd_t + beta * x_{t-1} + e_t^y,      x_t = gamma * x_{t-1} + e_t^x,

with x_0 = 0, d_t the deterministic part (intercept, or intercept plus
trend) and (e^y, e^x) i.i.d. bivariate normal.  All inference here is
invariant to translations of y along the deterministic columns, so every
statistic is computed from demeaned (projected) sums.

The local log-likelihood ratio in the reparameterization

    beta  = b * sigma_yy.x^{1/2} sigma_xx^{-1/2} * g_T(gbar),
    gamma = gbar + c * g_T(gbar),

is an exact quadratic  [b,c] R - 0.5 [b,c] K [b,c]'  in finite samples;
`local_stats` returns the five coefficients (R_beta, R_gamma, K_bb,
K_bg, K_gg) and `log_lr` evaluates the quadratic.  Array arguments may
carry leading batch dimensions; statistics are reduced over the last
axis.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample
from .rng import child_rng

INTERCEPT = "intercept"
TREND = "trend"
_KINDS = (INTERCEPT, TREND)


@dataclass(frozen=True)
class Cov2:
    """2x2 innovation covariance of (e^y, e^x), positive definite."""

    sigma_yy: float
    sigma_xy: float
    sigma_xx: float

    def __post_init__(self):
        if not (self.sigma_yy > 0 and self.sigma_xx > 0):
            raise ValueError("variances must be positive")
        if self.sigma_xy**2 >= self.sigma_yy * self.sigma_xx:
            raise ValueError("covariance matrix must be positive definite (|rho| < 1)")

    @property
    def rho(self):
        return self.sigma_xy / math.sqrt(self.sigma_xx * self.sigma_yy)

    @property
    def sigma_yy_x(self):
        """Residual variance of e^y given e^x."""
        return self.sigma_yy - self.sigma_xy**2 / self.sigma_xx

    @property
    def tau(self):
        """rho / sqrt(1 - rho^2), the endogeneity tilt entering R_gamma."""
        return self.sigma_xy / math.sqrt(self.sigma_xx * self.sigma_yy_x)

    def as_matrix(self):
        return np.array([[self.sigma_yy, self.sigma_xy], [self.sigma_xy, self.sigma_xx]])


@dataclass(frozen=True)
class ModelParams:
    """Data-generating parameters: slope, AR(1) coefficient, deterministics."""

    beta: float
    gamma: float
    cov: Cov2
    mu_y: tuple = (0.0,)
    kind: str = INTERCEPT

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        want = 1 if self.kind == INTERCEPT else 2
        if len(self.mu_y) != want:
            raise ValueError(f"{self.kind} model needs a length-{want} mu_y")


@dataclass(frozen=True)
class Sample:
    """One simulated path (y_t, x_t), t = 1..T, with the convention x_0 = 0."""

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.shape != x.shape or y.ndim != 1:
            raise ValueError("y and x must be 1-D arrays of equal length")
        if y.size < 3:
            raise ValueError("need T >= 3")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def T(self):
        return self.y.size


@dataclass(frozen=True)
class SuffStats:
    """Four-dimensional sufficient statistic of the invariant density."""

    s_beta: float
    s_gamma: float
    s_bb: float
    s_gg: float


@dataclass(frozen=True)
class LocalStats:
    """Coefficients of the exact quadratic local log-likelihood ratio."""

    center: float
    r_beta: float
    r_gamma: float
    k_bb: float
    k_bg: float
    k_gg: float
    g: float


def lagged(x):
    """x_{t-1} as an array aligned with x, using x_0 = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[..., 1:] = x[..., :-1]
    return out


_DEKKER_SPLIT = 134217729.0  # 2**27 + 1


def _ar1_residual(x, x_lag, gamma):
    """x - gamma * x_lag with an error-free product correction.

    For explosive paths |x| reaches gamma^T, so the rounding of
    gamma * x_lag alone would wipe out the low bits of the O(1) residual;
    a Dekker two-product recovers them.  Exact multiples (gamma = 1, 0.5,
    ...) are unaffected.
    """
    gamma = float(gamma)
    if gamma == 0.0 or math.frexp(gamma)[0] in (0.5, -0.5):
        # powers of two (and the usual center 1.0) multiply exactly
        return x - gamma * x_lag
    a_big = _DEKKER_SPLIT * gamma
    a_hi = a_big - (a_big - gamma)
    a_lo = gamma - a_hi
    p = gamma * x_lag
    b_big = _DEKKER_SPLIT * x_lag
    b_hi = b_big - (b_big - x_lag)
    b_lo = x_lag - b_hi
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return (x - p) - err


def _trend_basis(T):
    """Orthonormal basis of span(1_T, t), cached per length."""
    q = _TREND_CACHE.get(T)
    if q is None:
        t = np.arange(1, T + 1, dtype=float)
        d = np.column_stack([np.ones(T), t])
        q = np.linalg.qr(d)[0]
        _TREND_CACHE[T] = q
    return q


_TREND_CACHE = {}


def demean(v, kind=INTERCEPT):
    """Residual of v from the deterministic columns (1_T, and t for trend).

    Idempotent and orthogonal to the deterministic columns; works on
    arrays with leading batch dimensions (last axis is time).
    """
    v = np.asarray(v, dtype=float)
    if kind == INTERCEPT:
        return v - v.mean(axis=-1, keepdims=True)
    if kind == TREND:
        q = _trend_basis(v.shape[-1])
        return v - (v @ q) @ q.T
    raise ValueError(f"unknown deterministic kind {kind!r}")


def simulate(params, T, rng_seed, size=None):
    """Simulate the model; deterministic given the seed.

    With size=None returns a single Sample; with integer size returns a
    pair of arrays (y, x) of shape (size, T), rows independent.
    """
    if T < 3:
        raise ValueError("need T >= 3")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else child_rng(rng_seed, "simulate")
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, T, 2))
    cov = params.cov
    eps_x = math.sqrt(cov.sigma_xx) * z[:, :, 0]
    eps_y = (cov.sigma_xy / math.sqrt(cov.sigma_xx)) * z[:, :, 0] + math.sqrt(cov.sigma_yy_x) * z[:, :, 1]
    x = _ar1_recursion(eps_x, params.gamma)
    x_lag = np.zeros_like(x)
    x_lag[:, 1:] = x[:, :-1]
    det = _deterministic_part(params, T)
    y = det + params.beta * x_lag + eps_y
    if size is None:
        return Sample(y=y[0], x=x[0])
    return y, x


def _deterministic_part(params, T):
    if params.kind == INTERCEPT:
        return params.mu_y[0]
    t = np.arange(1, T + 1, dtype=float)
    return params.mu_y[0] + params.mu_y[1] * t


def _ar1_recursion(eps, gamma):
    """x_t = gamma x_{t-1} + eps_t from x_0 = 0; gamma scalar or per-row."""
    eps = np.atleast_2d(eps)
    g = np.asarray(gamma, dtype=float)
    if g.ndim > 1:
        raise ValueError("gamma must be scalar or one value per row")
    x = np.empty_like(eps)
    prev = np.zeros(eps.shape[0])
    for t in range(eps.shape[1]):
        prev = g * prev + eps[:, t]
        x[:, t] = prev
    return x


def scaling_g(gamma, T):
    """Contiguity scale g_T(gamma) = (sum_{t=1}^{T-1} sum_{l<t} gamma^{2l})^{-1/2}.

    Evaluated in closed form per regime with 0^0 = 1, continuous in gamma;
    switches to log-space for strongly explosive arguments.
    """
    if T < 2:
        raise ValueError("need T >= 2")
    s = float(gamma) * float(gamma)
    if s == 1.0:
        return (T * (T - 1) / 2.0) ** -0.5
    ls = math.log(s) if s > 0 else -math.inf
    if s > 1.0 and (T - 1) * ls > 600.0:
        # total = [s^T - s - (T-1)(s-1)] / (s-1)^2, dominated by s^T
        log_total = (
            T * ls
            + math.log1p(-math.exp((1 - T) * ls) - (T - 1) * (s - 1) * math.exp(-T * ls))
            - 2.0 * math.log(s - 1.0)
        )
        return math.exp(-0.5 * log_total)
    if s == 0.0:
        total = float(T - 1)
    else:
        t_idx = np.arange(1, T, dtype=float)
        total = float(np.expm1(t_idx * ls).sum() / np.expm1(ls))
    return total**-0.5


def suff_stats(sample, cov, beta0=0.0, kind=INTERCEPT):
    """The four sufficient-statistic sums (S_beta, S_gamma, S_bb, S_gg)."""
    y, x = sample.y, sample.x
    if beta0 != 0.0:
        y = y - beta0 * lagged(x)
    x_lag = lagged(x)
    xl_mu = demean(x_lag, kind)
    s_beta = float(np.sum(xl_mu * (y - (cov.sigma_xy / cov.sigma_xx) * x)) / cov.sigma_yy_x)
    s_gamma = float(np.sum(x_lag * x) / cov.sigma_xx - (cov.sigma_xy / cov.sigma_xx) * s_beta)
    s_bb = float(np.sum(xl_mu**2) / cov.sigma_yy_x)
    s_gg = float(np.sum(x_lag**2) / cov.sigma_xx + (cov.sigma_xy / cov.sigma_xx) ** 2 * s_bb)
    return SuffStats(s_beta=s_beta, s_gamma=s_gamma, s_bb=s_bb, s_gg=s_gg)


def local_stats(sample, cov, center, beta0=0.0, kind=INTERCEPT):
    """Exact quadratic-form coefficients of the local log-likelihood ratio
    at centering gamma = center."""
    r_beta, r_gamma, k_bb, k_bg, k_gg, g = _local_stats_arrays(
        sample.y[None, :], sample.x[None, :], cov, center, beta0, kind
    )
    return LocalStats(
        center=float(center),
        r_beta=float(r_beta[0]),
        r_gamma=float(r_gamma[0]),
        k_bb=float(k_bb[0]),
        k_bg=float(k_bg[0]),
        k_gg=float(k_gg[0]),
        g=g,
    )


def _local_stats_arrays(y, x, cov, center, beta0, kind):
    """Batched core of local_stats; cov fields may be scalars or (J,) arrays."""
    T = y.shape[-1]
    g = scaling_g(center, T)
    sigma_yy, sigma_xy, sigma_xx = _cov_fields(cov)
    sigma_yy_x = sigma_yy - sigma_xy**2 / sigma_xx
    tau = sigma_xy / np.sqrt(sigma_xx * sigma_yy_x)
    ratio = sigma_xy / sigma_xx

    x_lag = lagged(x)
    xl_mu = demean(x_lag, kind)
    x_resid = _ar1_residual(x, x_lag, center)
    u = y - beta0 * x_lag - _per_row(ratio) * x_resid
    r_beta = g * np.sum(xl_mu * u, axis=-1) / np.sqrt(sigma_yy_x * sigma_xx)
    r_gamma = g * np.sum(x_lag * x_resid, axis=-1) / sigma_xx - tau * r_beta
    k_bb = g * g * np.sum(xl_mu**2, axis=-1) / sigma_xx
    k_bg = -tau * k_bb
    k_gg = tau**2 * k_bb + g * g * np.sum(x_lag**2, axis=-1) / sigma_xx
    return r_beta, r_gamma, k_bb, k_bg, k_gg, g


def _per_row(value):
    """Make a scalar-or-(J,) quantity broadcast against (J, T) arrays."""
    value = np.asarray(value, dtype=float)
    return value[..., None] if value.ndim else value


def _cov_fields(cov):
    if isinstance(cov, Cov2):
        return cov.sigma_yy, cov.sigma_xy, cov.sigma_xx
    sigma_yy, sigma_xy, sigma_xx = cov
    return np.asarray(sigma_yy, float), np.asarray(sigma_xy, float), np.asarray(sigma_xx, float)


def log_lr(ls, b, c):
    """[b,c] R - 0.5 [b,c] K [b,c]': exact local log-likelihood ratio."""
    return (
        b * ls.r_beta
        + c * ls.r_gamma
        - 0.5 * (b * b * ls.k_bb + 2.0 * b * c * ls.k_bg + c * c * ls.k_gg)
    )


def log_density_invariant(sample, cov, beta, gamma, kind=INTERCEPT):
    """Log density of the maximal invariant (y demeaned, x observed).

    Constants are kept consistent across (beta, gamma) at fixed cov, so
    density ratios computed from differences of this function are exact.
    """
    y, x = sample.y, sample.x
    T = sample.T
    p = 1 if kind == INTERCEPT else 2
    x_lag = lagged(x)
    resid_x = _ar1_residual(x, x_lag, gamma)
    # y^mu - x^mu (sxy/sxx) - x_{t-1}^mu [beta - gamma sxy/sxx], grouped so
    # huge explosive levels cancel before demeaning rather than after
    resid_y = demean(y - (cov.sigma_xy / cov.sigma_xx) * resid_x - beta * x_lag, kind)
    return float(
        -0.5 * T * math.log(2.0 * math.pi * cov.sigma_xx)
        - 0.5 * np.sum(resid_x**2) / cov.sigma_xx
        - 0.5 * (T - p) * math.log(2.0 * math.pi * cov.sigma_yy_x)
        - 0.5 * np.sum(resid_y**2) / cov.sigma_yy_x
    )


def t_statistic(sample, sigma_yy, beta0=0.0, kind=INTERCEPT):
    """One-sided t-statistic with the model-implied error scale.

    psi = (beta_hat - beta0) / (sigma_yy^{1/2} [sum (x^mu_{t-1})^2]^{-1/2}).
    """
    x_lag = lagged(sample.x)
    xl_mu = demean(x_lag, kind)
    ssq = float(np.sum(xl_mu**2))
    if ssq <= 0.0:
        raise DegenerateSample("regressor has no variation after demeaning")
    beta_hat = float(np.sum(xl_mu * sample.y)) / ssq
    return (beta_hat - beta0) * math.sqrt(ssq) / math.sqrt(sigma_yy)


def _t_statistic_arrays(y, x, sigma_yy, beta0, kind):
    x_lag = lagged(x)
    xl_mu = demean(x_lag, kind)
    ssq = np.sum(xl_mu**2, axis=-1)
    if np.any(ssq <= 0.0):
        raise DegenerateSample("regressor has no variation after demeaning")
    beta_hat = np.sum(xl_mu * y, axis=-1) / ssq
    return (beta_hat - beta0) * np.sqrt(ssq) / np.sqrt(sigma_yy)


def estimate_cov(sample, kind=INTERCEPT):
    """Residual covariance from the two OLS fits, divisor T.

    Raises DegenerateSample when a residual variance collapses relative to
    the data scale (noise-free input) or the 2x2 matrix is singular.
    """
    fields = _estimate_cov_arrays(sample.y[None, :], sample.x[None, :], kind)
    sigma_yy, sigma_xy, sigma_xx = (float(f[0]) for f in fields)
    scale_y = float(np.mean(demean(sample.y, kind) ** 2))
    scale_x = float(np.mean(sample.x**2))
    det = sigma_yy * sigma_xx - sigma_xy**2
    if (
        sigma_yy <= 1e-12 * scale_y
        or sigma_xx <= 1e-12 * scale_x
        or det <= 1e-12 * sigma_yy * sigma_xx
    ):
        raise DegenerateSample("residual covariance is numerically singular")
    return Cov2(sigma_yy=sigma_yy, sigma_xy=sigma_xy, sigma_xx=sigma_xx)


def _estimate_cov_arrays(y, x, kind):
    """Batched OLS residual covariances (sigma_yy, sigma_xy, sigma_xx)."""
    T = y.shape[-1]
    x_lag = lagged(x)
    xl_mu = demean(x_lag, kind)
    y_mu = demean(y, kind)
    ssq = np.sum(xl_mu**2, axis=-1)
    if np.any(ssq <= 0.0):
        raise DegenerateSample("regressor has no variation after demeaning")
    beta_hat = np.sum(xl_mu * y_mu, axis=-1) / ssq
    e_y = y_mu - beta_hat[..., None] * xl_mu
    denom_x = np.sum(x_lag**2, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        gamma_hat = np.where(denom_x > 0, np.sum(x_lag * x, axis=-1) / np.where(denom_x > 0, denom_x, 1.0), 0.0)
    e_x = x - gamma_hat[..., None] * x_lag
    sigma_yy = np.sum(e_y**2, axis=-1) / T
    sigma_xy = np.sum(e_y * e_x, axis=-1) / T
    sigma_xx = np.sum(e_x**2, axis=-1) / T
    return sigma_yy, sigma_xy, sigma_xx
