"""Critical value function construction and refinement.

A calibrated test rejects when the t-statistic exceeds a data-dependent
threshold

    kappa(r) = sum_i k_i exp(L_i(r)) / (n^{-1} sum_j exp(L_j(r)))      (nu*)
    kappa(r) = sum_i k_i exp(L_i(r))                                   (nu†)

where L_i is the exact log-likelihood ratio between grid point gamma_i
and the centering point.  The multipliers k are the equality-row duals
of a box-constrained LP built from draws of the equal-weight mixture
over the grid; the refinement loop adds the most discrepant point of a
check grid until the estimated null rejection profile is flat within a
tolerance.

Since the local log-likelihood ratio is exactly quadratic, each Monte
Carlo draw reduces to three scalars (psi, R_gamma, K_gg); rejection
profiles for any grid reuse those cached reductions.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.stats

from . import model as pm
from .errors import DegenerateSample, Infeasible, NoConvergence
from .lp import LpProblem, solve_boxed_lp
from .rng import child_rng, child_seed_sequence

NU_STAR = "nu_star"
NU_DAGGER = "nu_dagger"
KNOWN = "known"
ESTIMATED = "estimated"

_BLOCK_ELEMS = 2_000_000  # target elements per simulation block
_DUPLICATE_GAMMA_TOL = 1e-9
_EXP_CLIP = 700.0


def derive_seed(seed, *key):
    """A 64-bit child seed for stream (seed, *key); stable across runs."""
    return int(child_seed_sequence(seed, *key).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Grid:
    """Calibration grid of nuisance-parameter points around a center.

    Offsets c_i map to AR coefficients either per sample size
    (gamma_i = center + c_i / T) or on the contiguity scale
    (gamma_i = center + c_i * g_T(center)).
    """

    offsets: tuple
    T: int
    center: float = 1.0
    mode: str = "per-T"  # or "local"

    def __post_init__(self):
        offs = tuple(float(c) for c in self.offsets)
        if len(offs) < 1:
            raise ValueError("grid needs at least one offset")
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise ValueError("offsets must be strictly increasing")
        if self.mode not in ("per-T", "local"):
            raise ValueError("mode must be 'per-T' or 'local'")
        if self.T < 3:
            raise ValueError("need T >= 3")
        object.__setattr__(self, "offsets", offs)
        gammas = self.gamma_values()
        if not np.isfinite(gammas).all():
            raise ValueError("implied gamma values must be finite")
        if len(gammas) > 1 and np.diff(gammas).min() <= _DUPLICATE_GAMMA_TOL:
            raise ValueError("duplicate grid points (gamma spacing <= 1e-9)")

    @property
    def n(self):
        return len(self.offsets)

    def step_scale(self):
        """Offset-to-gamma conversion factor for this grid's mode."""
        if self.mode == "per-T":
            return 1.0 / self.T
        return pm.scaling_g(self.center, self.T)

    def gamma_values(self):
        return self.center + np.asarray(self.offsets) * self.step_scale()

    def local_offsets(self):
        """Offsets re-expressed in units of g_T(center): the c entering L_i."""
        g = pm.scaling_g(self.center, self.T)
        return (self.gamma_values() - self.center) / g

    def with_offset(self, c):
        return Grid(
            offsets=tuple(sorted(self.offsets + (float(c),))),
            T=self.T,
            center=self.center,
            mode=self.mode,
        )


@dataclass(frozen=True)
class Flattening:
    """Force the threshold to the normal quantile in regimes where no
    adjustment is needed (ratio |R_gamma/K_gg| huge, or K_gg extreme)."""

    ratio_threshold: float = 1e2
    k_low: float = 1e-2
    k_high: float = 1e6
    flat_value: float | None = None  # default: norm quantile at 1 - alpha


@dataclass(frozen=True)
class RejectionEstimate:
    p_hat: float
    reps: int

    @property
    def std_err(self):
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.reps)


@dataclass(frozen=True)
class CvfModel:
    """Calibrated critical value function."""

    grid: Grid
    k: tuple
    alpha: float
    measure: str = NU_STAR
    cov_mode: str = KNOWN
    cov: pm.Cov2 | None = None
    kind: str = pm.INTERCEPT
    beta0: float = 0.0
    flattening: Flattening | None = None
    diagnostics: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if len(self.k) != self.grid.n:
            raise ValueError("need one multiplier per grid point")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.measure not in (NU_STAR, NU_DAGGER):
            raise ValueError(f"unknown measure {self.measure!r}")
        if self.cov_mode not in (KNOWN, ESTIMATED):
            raise ValueError(f"unknown cov mode {self.cov_mode!r}")
        if self.cov_mode == KNOWN and self.cov is None:
            raise ValueError("known cov mode requires a Cov2")
        object.__setattr__(self, "k", tuple(float(v) for v in self.k))

    @property
    def flat_value(self):
        if self.flattening is not None and self.flattening.flat_value is not None:
            return self.flattening.flat_value
        return float(scipy.stats.norm.ppf(1.0 - self.alpha))


def default_statistic(y, x, cov_fields, beta0, kind):
    """The t-statistic with the model-implied error scale sigma_yy^{1/2}."""
    sigma_yy = cov_fields[0]
    return pm._t_statistic_arrays(y, x, sigma_yy, beta0, kind)


def residual_scale_statistic(y, x, cov_fields, beta0, kind):
    """t-statistic variant scaled by sigma_yy.x^{1/2} instead of sigma_yy^{1/2}."""
    sigma_yy, sigma_xy, sigma_xx = cov_fields
    sigma_yy_x = sigma_yy - np.asarray(sigma_xy) ** 2 / sigma_xx
    return pm._t_statistic_arrays(y, x, sigma_yy_x, beta0, kind)


@dataclass(frozen=True)
class StatBatch:
    """Per-draw reductions sufficient to evaluate psi and kappa."""

    psi: np.ndarray
    r_gamma: np.ndarray
    k_gg: np.ndarray


def _draw_paths(cov, gamma, T, rng, size, beta=0.0):
    """Null/alternative paths: x AR(1) from x_0 = 0, y = beta x_{t-1} + e^y."""
    z = rng.standard_normal((size, T, 2))
    eps_x = math.sqrt(cov.sigma_xx) * z[:, :, 0]
    eps_y = (cov.sigma_xy / math.sqrt(cov.sigma_xx)) * z[:, :, 0] + math.sqrt(
        cov.sigma_yy_x
    ) * z[:, :, 1]
    x = pm._ar1_recursion(eps_x, gamma)
    x_lag = np.zeros_like(x)
    x_lag[:, 1:] = x[:, :-1]
    y = beta * x_lag + eps_y
    return y, x


def _reduce_paths(y, x, center, cov, cov_mode, statistic, beta0, kind):
    """Map simulated paths to the (psi, R_gamma, K_gg) reductions.

    Shares the lagged/demeaned intermediates between the statistic and the
    local quadratic coefficients when the default statistic is in use.
    """
    if cov_mode == ESTIMATED:
        sigma_yy, sigma_xy, sigma_xx = pm._estimate_cov_arrays(y, x, kind)
        sigma_yy_x = sigma_yy - sigma_xy**2 / sigma_xx
        if np.any(sigma_xx <= 0) or np.any(sigma_yy_x <= 0):
            raise DegenerateSample("estimated residual covariance not positive definite")
        fields = (sigma_yy, sigma_xy, sigma_xx)
    else:
        fields = (cov.sigma_yy, cov.sigma_xy, cov.sigma_xx)

    x_lag = pm.lagged(x)
    xl_mu = pm.demean(x_lag, kind)
    ssq = np.sum(xl_mu**2, axis=-1)
    sigma_yy, sigma_xy, sigma_xx = fields
    sigma_yy_x = sigma_yy - np.asarray(sigma_xy) ** 2 / sigma_xx
    tau = sigma_xy / np.sqrt(sigma_xx * sigma_yy_x)

    if statistic is default_statistic:
        if np.any(ssq <= 0.0):
            raise DegenerateSample("regressor has no variation after demeaning")
        beta_hat = np.sum(xl_mu * y, axis=-1) / ssq
        psi = (beta_hat - beta0) * np.sqrt(ssq) / np.sqrt(sigma_yy)
    else:
        psi = statistic(y, x, fields, beta0, kind)

    g = pm.scaling_g(center, y.shape[-1])
    x_resid = pm._ar1_residual(x, x_lag, center)
    u = y - beta0 * x_lag - pm._per_row(sigma_xy / sigma_xx) * x_resid
    r_beta = g * np.sum(xl_mu * u, axis=-1) / np.sqrt(sigma_yy_x * sigma_xx)
    r_gamma = g * np.sum(x_lag * x_resid, axis=-1) / sigma_xx - tau * r_beta
    k_gg = tau**2 * (g * g * ssq / sigma_xx) + g * g * np.sum(x_lag**2, axis=-1) / sigma_xx
    return StatBatch(psi=psi, r_gamma=r_gamma, k_gg=k_gg)


def _block_sizes(J, T):
    rows = max(1, int(_BLOCK_ELEMS // max(T, 1)))
    edges = list(range(0, J, rows)) + [J]
    return [(b, e) for b, e in zip(edges[:-1], edges[1:])]


def reduce_draws(
    gamma,
    T,
    J,
    seed,
    dgp_cov,
    center=1.0,
    beta=0.0,
    cov_mode=KNOWN,
    stat_cov=None,
    statistic=None,
    beta0=0.0,
    kind=pm.INTERCEPT,
    threads=1,
    stream="draws",
):
    """Simulate J paths under (beta, gamma) and reduce to StatBatch.

    Blocks are seeded individually by (seed, stream, block), so the
    result is bit-identical for any thread count.
    """
    statistic = statistic or default_statistic
    stat_cov = stat_cov if stat_cov is not None else dgp_cov
    blocks = _block_sizes(J, T)
    stream_key = stream if isinstance(stream, tuple) else (stream,)

    def run(idx_block):
        idx, (lo, hi) = idx_block
        rng = child_rng(seed, *stream_key, idx)
        y, x = _draw_paths(dgp_cov, gamma, T, rng, hi - lo, beta=beta)
        return _reduce_paths(y, x, center, stat_cov, cov_mode, statistic, beta0, kind)

    tasks = list(enumerate(blocks))
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    return StatBatch(
        psi=np.concatenate([p.psi for p in parts]),
        r_gamma=np.concatenate([p.r_gamma for p in parts]),
        k_gg=np.concatenate([p.k_gg for p in parts]),
    )


@dataclass(frozen=True)
class MixtureDraws:
    """Paths drawn from the equal-weight grid mixture, with component labels."""

    y: np.ndarray
    x: np.ndarray
    component: np.ndarray
    grid: Grid

    @property
    def J(self):
        return self.y.shape[0]

    def samples(self):
        for j in range(self.J):
            yield pm.Sample(y=self.y[j], x=self.x[j]), int(self.component[j])


def _mixture_blocks(grid, cov, J, seed):
    """Yield (component, y, x) blocks of nu* mixture draws; block-seeded so
    streaming consumers and full materialization see identical draws."""
    gammas = grid.gamma_values()
    for idx, (lo, hi) in enumerate(_block_sizes(J, grid.T)):
        rng = child_rng(seed, "mixture", idx)
        component = rng.integers(0, grid.n, size=hi - lo)
        y, x = _draw_paths(cov, gammas[component], grid.T, rng, hi - lo)
        yield component, y, x


def sample_mixture(grid, cov, J, seed):
    """i.i.d. draws from the nu* mixture: uniform component, then the null
    path under that component's gamma."""
    if J < grid.n:
        raise ValueError("need J >= n")
    comps, ys, xs = [], [], []
    for component, y, x in _mixture_blocks(grid, cov, J, seed):
        comps.append(component)
        ys.append(y)
        xs.append(x)
    return MixtureDraws(
        y=np.concatenate(ys), x=np.concatenate(xs),
        component=np.concatenate(comps), grid=grid,
    )


def _mixture_stats(grid, cov, J, seed, cov_mode, statistic, beta0, kind):
    """Reductions of the mixture draws, never holding all paths at once."""
    parts = [
        _reduce_paths(y, x, grid.center, cov, cov_mode, statistic or default_statistic, beta0, kind)
        for _, y, x in _mixture_blocks(grid, cov, J, seed)
    ]
    return StatBatch(
        psi=np.concatenate([p.psi for p in parts]),
        r_gamma=np.concatenate([p.r_gamma for p in parts]),
        k_gg=np.concatenate([p.k_gg for p in parts]),
    )


def _log_ratio_matrix(stats, local_offsets):
    """L_i per draw for b = 0: c_i R_gamma - c_i^2 K_gg / 2, shape (n, J)."""
    c = np.asarray(local_offsets)[:, None]
    return c * stats.r_gamma[None, :] - 0.5 * c * c * stats.k_gg[None, :]


def assemble_lp(
    draws,
    grid,
    cov,
    alpha,
    beta0=0.0,
    statistic=None,
    measure=NU_STAR,
    cov_mode=KNOWN,
    kind=pm.INTERCEPT,
):
    """Build the calibration LP from mixture draws.

    Row l of the constraint matrix holds the importance ratios
    f_{0,gamma_l}/f_{nu*} (divided by J, so the right-hand side is
    exactly alpha); the objective is psi weighted by f_nu/f_{nu*}.
    """
    if draws.grid != grid:
        raise ValueError("draws were generated for a different grid")
    stats = _reduce_paths(
        draws.y, draws.x, grid.center, cov, cov_mode, statistic or default_statistic, beta0, kind
    )
    return _lp_from_stats(stats, grid, alpha, measure), stats


def _lp_from_stats(stats, grid, alpha, measure):
    lam = _log_ratio_matrix(stats, grid.local_offsets())
    # stabilize relative to the per-draw peak: |lam| can reach 1e16 for
    # explosive draws, where subtracting log-n from logsumexp underflows
    peak = lam.max(axis=0)
    scaled = np.exp(lam - peak[None, :])
    mix_scaled = scaled.mean(axis=0)  # exp(log f_mix - peak), in [1/n, 1]
    ratios = scaled / mix_scaled[None, :]
    if measure == NU_STAR:
        d = stats.psi
    elif measure == NU_DAGGER:
        # f_center / f_mix importance weight, clipped against overflow when
        # every grid point is astronomically unlikely relative to the center
        log_w = -(peak + np.log(mix_scaled))
        d = stats.psi * np.exp(np.clip(log_w, -_EXP_CLIP, _EXP_CLIP))
    else:
        raise ValueError(f"unknown measure {measure!r}")
    J = stats.psi.size
    return LpProblem(
        objective=d / J,
        constraint_matrix=ratios / J,
        rhs=np.full(grid.n, float(alpha)),
    )


def calibrate(
    grid,
    cov,
    alpha,
    J,
    seed,
    statistic=None,
    measure=NU_STAR,
    cov_mode=KNOWN,
    kind=pm.INTERCEPT,
    beta0=0.0,
    flattening=None,
    pricing="dantzig",
    warm_model=None,
):
    """Draw the mixture, solve the LP, and return the calibrated model.

    The equality-row duals are the CVF multipliers.  Diagnostics carry the
    LP status and the in-sample deterministic rejection at each grid point
    (within n/J + 0.005 of alpha unless warned).  `warm_model` seeds the
    simplex with that model's rejection set (pivot path only; the optimum
    is unchanged).
    """
    if J < 100 * grid.n:
        raise ValueError("need J >= 100 n for a usable calibration")
    stats = _mixture_stats(grid, cov, J, seed, cov_mode, statistic, beta0, kind)
    problem = _lp_from_stats(stats, grid, alpha, measure)
    if warm_model is not None:
        warm_upper = stats.psi > _threshold_from_stats(warm_model, stats)
    else:
        warm_upper = stats.psi > scipy.stats.norm.ppf(1.0 - alpha)
    # pilot chain: duals of subset LPs give rejection rules whose mistakes
    # against the full optimum are few, so each larger solve starts near
    # its optimal vertex
    for pilot in (12_500, 50_000, 200_000):
        if J <= pilot * 3 // 2 or pilot < 100 * grid.n:
            continue
        scale = J / pilot
        sub = LpProblem(
            objective=problem.objective[:pilot] * scale,
            constraint_matrix=problem.constraint_matrix[:, :pilot] * scale,
            rhs=problem.rhs,
        )
        try:
            sub_solution = solve_boxed_lp(
                sub, pricing=pricing, initial_upper=warm_upper[:pilot]
            )
        except Infeasible:
            continue  # keep the current warm start
        full_kappa = (problem.constraint_matrix.T @ sub_solution.k) * J
        warm_upper = stats.psi > full_kappa
    solution = solve_boxed_lp(problem, pricing=pricing, initial_upper=warm_upper)

    model = CvfModel(
        grid=grid,
        k=tuple(solution.k),
        alpha=alpha,
        measure=measure,
        cov_mode=cov_mode,
        cov=cov if cov_mode == KNOWN else None,
        kind=kind,
        beta0=beta0,
        flattening=flattening,
        diagnostics={
            "lp_status": solution.status,
            "lp_objective": solution.objective_value,
            "lp_iterations": solution.iterations,
        },
    )
    kappa = _threshold_from_stats(model, stats)
    reject = stats.psi > kappa
    in_sample = (problem.constraint_matrix * reject[None, :]).sum(axis=1)
    tol = grid.n / J + 0.005
    if np.abs(in_sample - alpha).max() > tol:
        warnings.warn(
            f"in-sample rejection off by {np.abs(in_sample - alpha).max():.4f} "
            f"(tolerance {tol:.4f}); increase J",
            stacklevel=2,
        )
    model.diagnostics["in_sample_rejection"] = in_sample
    return model


def _threshold_from_stats(model, stats):
    """kappa per draw from the cached reductions, log-sum-exp stabilized."""
    lam = _log_ratio_matrix(stats, model.grid.local_offsets())
    k = np.asarray(model.k)
    if model.measure == NU_STAR:
        peak = lam.max(axis=0)
        scaled = np.exp(lam - peak[None, :])
        kappa = (k @ scaled) / scaled.mean(axis=0)
    else:
        kappa = k @ np.exp(np.clip(lam, -_EXP_CLIP, _EXP_CLIP))
    if model.flattening is not None:
        f = model.flattening
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.abs(stats.r_gamma / stats.k_gg)
        flat = (ratio > f.ratio_threshold) | (stats.k_gg < f.k_low) | (stats.k_gg > f.k_high)
        kappa = np.where(flat, model.flat_value, kappa)
    return kappa


def evaluate_cvf(model, sample, cov=None):
    """kappa(r) for one sample; estimates the covariance first when the
    model runs in estimated mode."""
    if model.cov_mode == ESTIMATED:
        cov_used = pm.estimate_cov(sample, model.kind)
    else:
        cov_used = cov if cov is not None else model.cov
    y = sample.y[None, :]
    x = sample.x[None, :]
    stats = _reduce_paths(
        y, x, model.grid.center, cov_used, KNOWN, default_statistic, model.beta0, model.kind
    )
    return float(_threshold_from_stats(model, stats)[0])


def rejection_from_stats(model, stats):
    """Empirical rejection rate of psi > kappa over cached reductions."""
    kappa = _threshold_from_stats(model, stats)
    return RejectionEstimate(p_hat=float(np.mean(stats.psi > kappa)), reps=stats.psi.size)


def null_rejection(
    model,
    gamma,
    J,
    seed,
    dgp_cov=None,
    T=None,
    statistic=None,
    threads=1,
    beta=0.0,
):
    """Monte Carlo rejection probability of the calibrated test at gamma.

    Simulates under (beta, gamma) with the DGP covariance (defaults to the
    model's known covariance), applies the deterministic rule
    psi > kappa, and returns the estimate with its standard error.
    """
    dgp = dgp_cov if dgp_cov is not None else model.cov
    if dgp is None:
        raise ValueError("estimated-cov models need an explicit dgp_cov")
    stats = reduce_draws(
        gamma,
        T if T is not None else model.grid.T,
        J,
        seed,
        dgp,
        center=model.grid.center,
        beta=beta,
        cov_mode=model.cov_mode,
        stat_cov=dgp,
        statistic=statistic,
        beta0=model.beta0,
        kind=model.kind,
        threads=threads,
    )
    return rejection_from_stats(model, stats)


@dataclass(frozen=True)
class RefineIteration:
    iteration: int
    offsets: tuple
    k: tuple
    p_hat: np.ndarray
    max_discrepancy: float
    added_offset: float | None


@dataclass(frozen=True)
class RefineResult:
    model: CvfModel
    audit: tuple
    check_offsets: np.ndarray
    check_gammas: np.ndarray

    @property
    def added_points(self):
        return len(self.audit) - 1


def refine(
    cov,
    T=100,
    alpha=0.10,
    eps=0.015,
    J=10_000,
    seed=0,
    initial_offsets=(-50.0, 20.0),
    check_range=(-50.0, 20.0),
    n_check=100,
    max_iter=50,
    center=1.0,
    mode="per-T",
    statistic=None,
    measure=NU_STAR,
    cov_mode=KNOWN,
    kind=pm.INTERCEPT,
    beta0=0.0,
    flattening=None,
    threads=1,
    calibration_J=None,
    check_draws="common",
):
    """Iteratively add the most discrepant check point to the grid.

    Rejection probabilities on the check grid reuse one draw set per check
    point across iterations (check_draws="common"), which keeps the audit
    trail monotone up to Monte Carlo error; "fresh" re-estimates with new
    streams every iteration instead.  Calibration draws always come from a
    disjoint stream.  Raises NoConvergence with the audit attached if
    max_iter is reached with discrepancies above eps outstanding.
    """
    if check_draws not in ("fresh", "common"):
        raise ValueError("check_draws must be 'fresh' or 'common'")
    grid = Grid(offsets=tuple(initial_offsets), T=T, center=center, mode=mode)
    check_offsets = np.linspace(check_range[0], check_range[1], n_check)
    step = grid.step_scale()
    check_gammas = center + check_offsets * step

    def check_stats(iteration):
        key = ("check",) if check_draws == "common" else ("check", iteration)
        return [
            reduce_draws(
                g,
                T,
                J,
                seed,
                cov,
                center=center,
                cov_mode=cov_mode,
                stat_cov=cov,
                statistic=statistic,
                beta0=beta0,
                kind=kind,
                threads=threads,
                stream=key + (idx,),
            )
            for idx, g in enumerate(check_gammas)
        ]

    cache = check_stats(0) if check_draws == "common" else None

    audit = []
    model = None
    for it in range(max_iter + 1):
        model = calibrate(
            grid,
            cov,
            alpha,
            calibration_J if calibration_J is not None else J,
            derive_seed(seed, "calibration", it),
            statistic=statistic,
            measure=measure,
            cov_mode=cov_mode,
            kind=kind,
            beta0=beta0,
            flattening=flattening,
            warm_model=model,
        )
        stats_list = cache if cache is not None else check_stats(it)
        p_hat = np.array([rejection_from_stats(model, s).p_hat for s in stats_list])
        dev = np.abs(p_hat - alpha)
        grid_gammas = grid.gamma_values()
        selectable = np.array(
            [np.abs(grid_gammas - g).min() > _DUPLICATE_GAMMA_TOL for g in check_gammas]
        )
        worst = float(dev.max())
        add = None
        if worst > eps:
            eligible = np.flatnonzero(selectable & (dev > eps))
            if eligible.size:
                add = float(check_offsets[eligible[np.argmax(dev[eligible])]])
        audit.append(
            RefineIteration(
                iteration=it,
                offsets=grid.offsets,
                k=model.k,
                p_hat=p_hat,
                max_discrepancy=worst,
                added_offset=add,
            )
        )
        if add is None:
            # either the profile is flat within eps, or every violation sits
            # on an existing grid point (pure Monte Carlo noise)
            return RefineResult(
                model=model,
                audit=tuple(audit),
                check_offsets=check_offsets,
                check_gammas=check_gammas,
            )
        grid = grid.with_offset(add)

    raise NoConvergence(
        f"refinement did not reach eps={eps} within {max_iter} iterations",
        audit=tuple(audit),
    )


def mc_discrepancy_bound(J, alpha, eps):
    """Exact two-tail probability P(|Bin(J, alpha)/J - alpha| > eps).

    The chance a check point is flagged purely by Monte Carlo noise when
    its true rejection probability equals alpha.
    """
    if J < 1 or not 0 < alpha < 1 or eps <= 0:
        raise ValueError("need J >= 1, alpha in (0,1), eps > 0")
    upper = Fraction(J) * (Fraction(alpha) + Fraction(eps))
    lower = Fraction(J) * (Fraction(alpha) - Fraction(eps))
    # strict inequalities: count X > upper and X < lower
    hi_first = math.floor(upper) + 1 if upper.denominator > 1 else int(upper) + 1
    lo_last = math.ceil(lower) - 1 if lower.denominator > 1 else int(lower) - 1
    p = 0.0
    if hi_first <= J:
        p += float(scipy.stats.binom.sf(hi_first - 1, J, alpha))
    if lo_last >= 0:
        p += float(scipy.stats.binom.cdf(lo_last, J, alpha))
    return p
