"""Reproducible experiment runners with flat-file configuration and CSV output.

Every run is fully determined by (config, seed): CSVs carry a config hash
comment and re-running any command reproduces identical bytes at any
thread count.
"""

import hashlib
import math
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from . import baselines as bl
from . import limits as lim
from . import model as pm
from .engine import (
    ESTIMATED,
    KNOWN,
    NU_DAGGER,
    NU_STAR,
    derive_seed,
    null_rejection,
    reduce_draws,
    refine,
    _threshold_from_stats,
)
from .errors import BadOverlay, ConfigError
from .serialize import load_cvf_model, save_cvf_model

METHOD_CVF = "cvf"
ALL_METHODS = (METHOD_CVF,) + bl.BASELINE_KINDS


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = None  # mandatory: no wall-clock default
    T: int = 100
    alpha: float = 0.10
    rho: tuple = (0.95, -0.95)
    J: int = 10_000
    calibration_J: int = 50_000
    epsilon: float = 0.015
    max_iter: int = 50
    cov_mode: str = KNOWN
    kind: str = pm.INTERCEPT
    measure: str = NU_STAR
    statistic: str = "sigma_yy"  # or "sigma_yy_x": alternative error scale
    check_draws: str = "common"  # refine check streams: common | fresh
    threads: int = 1
    out: str = "out"
    model_file: str = ""
    # refinement / check grid
    c_min: float = -50.0
    c_max: float = 20.0
    n_check: int = 100
    # size / compare sweep
    size_c_min: float = -100.0
    size_c_max: float = 50.0
    size_points: int = 31
    methods: tuple = (METHOD_CVF, bl.NORMAL_QUANTILE)
    B: int = 399
    block_size: int = 0  # 0 = floor(T^(2/3))
    baseline_J: int = 0  # 0 = J
    # power study
    power_c: tuple = (-15.0, 0.0)
    b_min: int = -10
    b_max: int = 10
    external_l2: str = ""
    external_umpcu: str = ""
    # cvf surface
    surface_gammas: tuple = (0.2, 0.5, 0.85, 1.0, 1.05, 1.2, 1.4)
    surface_draws: int = 2_000
    # limit checks
    limits_gamma: tuple = (0.5, 1.0)
    limits_T: tuple = (100, 400, 1600)
    limits_draws: int = 20_000
    limits_steps: int = 4_000
    limits_reading: str = lim.CONSISTENT

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("seed is mandatory (runs must be reproducible)")
        checks = [
            (self.T >= 3, "T >= 3"),
            (0 < self.alpha < 1, "alpha in (0,1)"),
            (self.J >= 1, "J >= 1"),
            (self.epsilon > 0, "epsilon > 0"),
            (self.cov_mode in (KNOWN, ESTIMATED), "cov_mode known|estimated"),
            (self.kind in (pm.INTERCEPT, pm.TREND), "kind intercept|trend"),
            (self.measure in (NU_STAR, NU_DAGGER), "measure nu_star|nu_dagger"),
            (self.statistic in ("sigma_yy", "sigma_yy_x"), "statistic sigma_yy|sigma_yy_x"),
            (self.check_draws in ("common", "fresh"), "check_draws common|fresh"),
            (all(m in ALL_METHODS for m in self.methods), f"methods among {ALL_METHODS}"),
            (self.threads >= 1, "threads >= 1"),
        ]
        for ok, what in checks:
            if not ok:
                raise ConfigError(f"invalid config: need {what}")

    def config_hash(self):
        # out and threads are execution details: they never change the numbers
        skip = {"out", "threads"}
        text = "\n".join(
            f"{f.name}={getattr(self, f.name)!r}" for f in fields(self) if f.name not in skip
        )
        return hashlib.sha256(text.encode()).hexdigest()[:12]


_TUPLE_FLOAT = {"rho", "power_c", "surface_gammas", "limits_gamma"}
_TUPLE_INT = {"limits_T"}
_TUPLE_STR = {"methods"}


def _parse_value(name, raw, target_type):
    raw = raw.strip()
    if name in _TUPLE_FLOAT:
        return tuple(float(v) for v in raw.replace(",", " ").split())
    if name in _TUPLE_INT:
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if name in _TUPLE_STR:
        return tuple(v for v in raw.replace(",", " ").split())
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    return raw


def field_types():
    types = {
        f.name: type(f.default) for f in fields(ExperimentConfig) if f.default is not None
    }
    types["seed"] = int
    return types


def parse_config_file(path):
    """Flat `key = value` text file; '#' starts a comment."""
    values = {}
    names = {f.name for f in fields(ExperimentConfig)}
    types = field_types()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                if "=" not in body:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, _, raw = body.partition("=")
                key = key.strip().replace("-", "_")
                if key not in names:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _parse_value(key, raw, types.get(key, str))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def config_from(values):
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


class CsvWriter:
    """Deterministic CSV writer: comment line with config hash, LF endings."""

    def __init__(self, path, columns, cfg, command):
        self.path = path
        self.columns = columns
        self.rows = []
        self.header = f"# cvfkit {command} config_hash={cfg.config_hash()} seed={cfg.seed}"

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError("row length mismatch")
        self.rows.append(tuple(_fmt(v) for v in row))

    def write(self):
        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
        with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.header + "\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(row) + "\n")
        return self.path


def _rho_tag(rho):
    return f"{rho:g}"


def _cov_for(rho):
    return pm.Cov2(sigma_yy=1.0, sigma_xy=float(rho), sigma_xx=1.0)


def _model_path(cfg, rho):
    trend = "_trend" if cfg.kind == pm.TREND else ""
    mode = "_estimated" if cfg.cov_mode == ESTIMATED else ""
    return os.path.join(cfg.out, f"cvf_rho{_rho_tag(rho)}{trend}{mode}.cvf")


def _statistic_fn(cfg):
    from .engine import residual_scale_statistic

    return residual_scale_statistic if cfg.statistic == "sigma_yy_x" else None


def _obtain_model(cfg, rho, audit_writer=None):
    """Load the configured model file or refine one for this rho."""
    if cfg.model_file:
        return load_cvf_model(cfg.model_file), None
    cov = _cov_for(rho)
    result = refine(
        cov,
        T=cfg.T,
        alpha=cfg.alpha,
        eps=cfg.epsilon,
        J=cfg.J,
        seed=derive_seed(cfg.seed, "refine", _rho_tag(rho)),
        initial_offsets=(cfg.c_min, cfg.c_max),
        check_range=(cfg.c_min, cfg.c_max),
        n_check=cfg.n_check,
        max_iter=cfg.max_iter,
        measure=cfg.measure,
        cov_mode=cfg.cov_mode,
        kind=cfg.kind,
        threads=cfg.threads,
        calibration_J=cfg.calibration_J,
        check_draws=cfg.check_draws,
        statistic=_statistic_fn(cfg),
    )
    if audit_writer is not None:
        for it in result.audit:
            for c, g, p in zip(result.check_offsets, result.check_gammas, it.p_hat):
                audit_writer.add(it.iteration, len(it.offsets), c, g, p)
    return result.model, result


def run_calibrate(cfg):
    """Refine per rho; persist the model (CVF/1) and the audit trail CSV."""
    outputs = []
    for rho in cfg.rho:
        writer = CsvWriter(
            os.path.join(cfg.out, f"calibrate_audit_rho{_rho_tag(rho)}.csv"),
            ["iteration", "n_grid", "c", "gamma", "p_hat"],
            cfg,
            "calibrate",
        )
        model, result = _obtain_model(cfg, rho, audit_writer=writer)
        path = _model_path(cfg, rho)
        os.makedirs(cfg.out, exist_ok=True)
        save_cvf_model(model, path)
        outputs.append(path)
        outputs.append(writer.write())
        summary = CsvWriter(
            os.path.join(cfg.out, f"calibrate_summary_rho{_rho_tag(rho)}.csv"),
            ["offset", "gamma", "k"],
            cfg,
            "calibrate",
        )
        for c, g, k in zip(model.grid.offsets, model.grid.gamma_values(), model.k):
            summary.add(c, g, k)
        outputs.append(summary.write())
    return outputs


def _method_rejection(method, cfg, rho, gamma, model, seed):
    cov = _cov_for(rho)
    J = cfg.baseline_J or cfg.J
    if method == METHOD_CVF:
        est = null_rejection(
            model, gamma, cfg.J, seed, dgp_cov=cov, T=cfg.T,
            threads=cfg.threads, statistic=_statistic_fn(cfg),
        )
    else:
        est = bl.baseline_rejection_rate(
            method,
            gamma,
            cov,
            cfg.T,
            J,
            seed,
            alpha=cfg.alpha,
            B=cfg.B,
            block_size=cfg.block_size or None,
            det_kind=cfg.kind,
        )
    return est


def run_size_study(cfg, command="size"):
    """Null rejection of each method across the gamma sweep, one CSV per rho."""
    outputs = []
    for rho in cfg.rho:
        model = None
        if METHOD_CVF in cfg.methods:
            model, _ = _obtain_model(cfg, rho)
        writer = CsvWriter(
            os.path.join(cfg.out, f"{command}_rho{_rho_tag(rho)}.csv"),
            ["method", "gamma", "c", "p_hat", "std_err", "J", "seed"],
            cfg,
            command,
        )
        sweep = np.linspace(cfg.size_c_min, cfg.size_c_max, cfg.size_points)
        for method in cfg.methods:
            for idx, c in enumerate(sweep):
                gamma = 1.0 + c / cfg.T
                seed = derive_seed(cfg.seed, command, _rho_tag(rho), method, idx)
                est = _method_rejection(method, cfg, rho, gamma, model, seed)
                writer.add(method, gamma, c, est.p_hat, est.std_err, est.reps, seed)
        outputs.append(writer.write())
    return outputs


def run_compare(cfg):
    """Size study including every baseline method."""
    cfg = replace(cfg, methods=ALL_METHODS)
    return run_size_study(cfg, command="compare")


def local_alternative_slope(b, cov, gamma, T):
    """beta for local-alternative index b at (gamma, T)."""
    return b * math.sqrt(cov.sigma_yy_x / cov.sigma_xx) * pm.scaling_g(gamma, T)


def _read_overlay(path, label):
    """External power curves: CSV with header c,b,power."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise BadOverlay(f"cannot read overlay {path}: {exc}") from exc
    if not lines or [c.strip() for c in lines[0].split(",")] != ["c", "b", "power"]:
        raise BadOverlay(f"{label} overlay {path} must have header 'c,b,power'")
    table = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 3:
            raise BadOverlay(f"{label} overlay {path}: malformed row {ln!r}")
        try:
            c, b, power = float(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise BadOverlay(f"{label} overlay {path}: non-numeric row {ln!r}") from exc
        if not 0.0 <= power <= 1.0:
            raise BadOverlay(f"{label} overlay {path}: power outside [0,1] in {ln!r}")
        table[(c, b)] = power
    return table


def run_power_study(cfg):
    """Power of the feasible similar t-test against local alternatives."""
    overlays = []
    if cfg.external_l2:
        overlays.append(("l2", _read_overlay(cfg.external_l2, "L2")))
    if cfg.external_umpcu:
        overlays.append(("umpcu", _read_overlay(cfg.external_umpcu, "UMPCU")))
    outputs = []
    for rho in cfg.rho:
        model, _ = _obtain_model(cfg, rho)
        cov = _cov_for(rho)
        columns = ["method", "gamma", "c", "b", "beta", "p_hat", "std_err", "J", "seed"]
        writer = CsvWriter(
            os.path.join(cfg.out, f"power_rho{_rho_tag(rho)}.csv"), columns, cfg, "power"
        )
        for c in cfg.power_c:
            gamma = 1.0 + c / cfg.T
            for b in range(cfg.b_min, cfg.b_max + 1):
                beta = local_alternative_slope(b, cov, gamma, cfg.T)
                seed = derive_seed(cfg.seed, "power", _rho_tag(rho), _rho_tag(c), b)
                est = null_rejection(
                    model, gamma, cfg.J, seed, dgp_cov=cov, T=cfg.T,
                    threads=cfg.threads, beta=beta, statistic=_statistic_fn(cfg),
                )
                writer.add("cvf", gamma, c, b, beta, est.p_hat, est.std_err, est.reps, seed)
                for label, table in overlays:
                    if (c, float(b)) in table:
                        writer.add(
                            label, gamma, c, b, beta, table[(c, float(b))], 0.0, 0, seed
                        )
        outputs.append(writer.write())
    return outputs


def g_transform(z):
    """G(z) = 2 (F(z) - 1/2) with logistic F: odd, zero at zero, range (-1, 1)."""
    z = np.asarray(z, dtype=float)
    return np.tanh(z / 2.0)


def run_cvf_surface(cfg):
    """Threshold values over simulated draws across regimes, raw and
    logistic-transformed axes."""
    outputs = []
    for rho in cfg.rho:
        model, _ = _obtain_model(cfg, rho)
        cov = _cov_for(rho)
        writer = CsvWriter(
            os.path.join(cfg.out, f"surface_rho{_rho_tag(rho)}.csv"),
            ["gamma", "r_gamma", "k_gg", "kappa", "g_ratio", "g_k", "psi"],
            cfg,
            "cvf-surface",
        )
        for g_idx, gamma in enumerate(cfg.surface_gammas):
            seed = derive_seed(cfg.seed, "surface", _rho_tag(rho), g_idx)
            stats = reduce_draws(
                gamma, cfg.T, cfg.surface_draws, seed, cov,
                center=model.grid.center, cov_mode=model.cov_mode, stat_cov=cov,
                threads=cfg.threads, statistic=_statistic_fn(cfg),
            )
            kappa = _threshold_from_stats(model, stats)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = stats.r_gamma / stats.k_gg
            for j in range(stats.psi.size):
                writer.add(
                    gamma,
                    stats.r_gamma[j],
                    stats.k_gg[j],
                    kappa[j],
                    float(g_transform(ratio[j])),
                    float(g_transform(stats.k_gg[j])),
                    stats.psi[j],
                )
        outputs.append(writer.write())
    return outputs


def run_limits(cfg):
    """Distances between finite-sample statistics and their limit laws."""
    writer = CsvWriter(
        os.path.join(cfg.out, "limits.csv"),
        ["regime_gamma", "T", "statistic", "distance"],
        cfg,
        "limits",
    )
    for g_idx, gamma in enumerate(cfg.limits_gamma):
        rho = cfg.rho[0]
        report = lim.convergence_check(
            gamma,
            rho,
            cfg.limits_T,
            cfg.limits_draws,
            derive_seed(cfg.seed, "limits", g_idx),
            cov=_cov_for(rho),
            steps=cfg.limits_steps,
            reading=cfg.limits_reading,
        )
        for T, dists in report.items():
            for name, value in dists.items():
                writer.add(gamma, T, name, value)
    return [writer.write()]


RUNNERS = {
    "calibrate": run_calibrate,
    "size": run_size_study,
    "power": run_power_study,
    "cvf-surface": run_cvf_surface,
    "compare": run_compare,
    "limits": run_limits,
}
