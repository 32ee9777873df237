"""Synthetic-data generation and the three standard experiments.

Data model: rows of the design are i.i.d. N(0, Sigma) with Toeplitz
covariance Sigma_jk = rho^|j-k|, the response is y = f(x' beta*) + sigma * z
with standard normal z, and beta* carries its nonzeros in the first s_star
coordinates.

Randomness uses the counter-based Philox generator keyed by
(seed, trial_index, stream), where stream 0 draws the design, stream 1 the
nonzero coefficients and stream 2 the noise. Every trial is therefore an
independent, reproducible function of (seed, trial_index), regardless of how
many worker processes run the trials, and experiment CSV output is
byte-identical across reruns and thread counts.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InputError, NlsparseError, NumericalError
from .model import Dataset, FitConfig, SparsityGroundTruth, builtin_link, invert_link
from .inference import InferenceConfig, score_test, wald_estimate
from .solver import fit

__all__ = [
    "UniformBeta",
    "ConstantBeta",
    "SimConfig",
    "TrialRecord",
    "SweepRow",
    "BaselineRow",
    "InferenceRow",
    "TrialInference",
    "sample_design",
    "make_beta_star",
    "generate",
    "run_estimation_sweep",
    "run_baseline_comparison",
    "run_inference_trials",
    "run_inference_table",
    "sweep_csv_text",
    "baseline_csv_text",
    "inference_csv_text",
    "default_threads",
]

_STREAM_DESIGN = 0
_STREAM_BETA = 1
_STREAM_NOISE = 2

THREADS_ENV_VAR = "NLSPARSE_THREADS"

# Floor for rule-derived regularization when sigma = 0 (noiseless runs).
_NOISELESS_LAMBDA = 1e-4


@dataclass(frozen=True)
class UniformBeta:
    """Nonzero coefficients drawn i.i.d. uniform on [lo, hi]."""

    lo: float = 0.0
    hi: float = 2.0


@dataclass(frozen=True)
class ConstantBeta:
    """All nonzero coefficients equal to mu."""

    mu: float = 0.0


BetaMode = Union[UniformBeta, ConstantBeta]


@dataclass(frozen=True)
class SimConfig:
    """One synthetic-data setting: dimensions, link, noise, design, seeding."""

    n: int
    d: int
    s_star: int
    link_name: str = "paper"
    noise_sd: float = 1.0
    toeplitz_rho: float = 0.95
    beta_mode: BetaMode = UniformBeta(0.0, 2.0)
    seed: int = 0
    trials: int = 1

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise InputError(f"n and d must be >= 1, got n={self.n}, d={self.d}")
        if not 1 <= self.s_star <= self.d:
            raise InputError(f"s_star must lie in 1..{self.d}, got {self.s_star}")
        if self.noise_sd < 0.0:
            raise InputError(f"noise_sd must be nonnegative, got {self.noise_sd}")
        if not 0.0 <= self.toeplitz_rho < 1.0:
            raise InputError(f"toeplitz_rho must lie in [0, 1), got {self.toeplitz_rho}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2 ** 64):
            raise InputError("seed must be an integer in [0, 2^64)")
        if self.trials < 1:
            raise InputError(f"trials must be >= 1, got {self.trials}")

    @property
    def effective_sample(self) -> float:
        return float(np.sqrt(self.s_star * np.log(self.d) / self.n))

    def lambda_rule(self, scale: float = 3.0) -> float:
        """scale * sigma * sqrt(log d / n), floored at 1e-4 when sigma = 0."""
        value = scale * self.noise_sd * np.sqrt(np.log(self.d) / self.n)
        return float(value) if value > 0.0 else _NOISELESS_LAMBDA

    def rho_rule(self, scale: float = 30.0) -> float:
        value = scale * self.noise_sd * np.sqrt(np.log(self.d) / self.n)
        return float(value) if value > 0.0 else _NOISELESS_LAMBDA


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    l2_error: float
    l1_error: float
    effective_sample: float
    reject_null_true: Optional[bool] = None
    reject_null_false: Optional[bool] = None
    runtime_ms: float = 0.0
    failure: Optional[str] = None


def _stream_rng(seed: int, trial: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), int(trial), int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def sample_design(n: int, d: int, toeplitz_rho: float, rng: np.random.Generator) -> np.ndarray:
    """Draw n rows of N(0, Sigma), Sigma_jk = toeplitz_rho^|j-k|, via Cholesky."""
    if not 0.0 <= toeplitz_rho < 1.0:
        raise InputError(f"toeplitz_rho must lie in [0, 1), got {toeplitz_rho}")
    idx = np.arange(d)
    sigma = toeplitz_rho ** np.abs(idx[:, None] - idx[None, :])
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:  # unreachable for rho < 1; defensive
        raise NumericalError(f"design covariance is not positive definite: {exc}") from exc
    return rng.standard_normal((n, d)) @ chol.T


def make_beta_star(d: int, s_star: int, beta_mode: BetaMode, rng: np.random.Generator) -> SparsityGroundTruth:
    """Ground-truth vector: first s_star entries per beta_mode, zeros after."""
    if not 0 <= s_star <= d:
        raise InputError(f"s_star must lie in 0..{d}, got {s_star}")
    beta = np.zeros(d)
    if isinstance(beta_mode, UniformBeta):
        beta[:s_star] = rng.uniform(beta_mode.lo, beta_mode.hi, size=s_star)
    elif isinstance(beta_mode, ConstantBeta):
        beta[:s_star] = beta_mode.mu
    else:
        raise InputError(f"unknown beta_mode {beta_mode!r}")
    return SparsityGroundTruth(beta_star=beta, support_size=int(np.count_nonzero(beta)))


def generate(config: SimConfig, trial: int):
    """Build the dataset and ground truth for one trial, reproducibly.

    Returns ``(Dataset, SparsityGroundTruth)``. The same (config.seed, trial)
    pair always yields bitwise identical output.
    """
    link = builtin_link(config.link_name)
    X = sample_design(
        config.n, config.d, config.toeplitz_rho, _stream_rng(config.seed, trial, _STREAM_DESIGN)
    )
    truth = make_beta_star(
        config.d, config.s_star, config.beta_mode, _stream_rng(config.seed, trial, _STREAM_BETA)
    )
    noise = _stream_rng(config.seed, trial, _STREAM_NOISE).standard_normal(config.n)
    y = link.eval(X @ truth.beta_star) + config.noise_sd * noise
    return Dataset(design=X, response=y), truth


def default_threads() -> int:
    """Worker count for trial parallelism: NLSPARSE_THREADS or the CPU count."""
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _map_trials(worker, jobs, threads):
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    chunksize = max(1, len(jobs) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, jobs, chunksize=chunksize))


# ---------------------------------------------------------------------------
# Estimation-error sweep


@dataclass(frozen=True)
class SweepRow:
    d: int
    s_star: int
    n: int
    effective_sample: float
    mean_l2: float
    sd_l2: float
    mean_l1: float
    sd_l1: float
    trials: int
    failures: int


def _sweep_trial(job) -> TrialRecord:
    config, trial, lam = job
    started = time.perf_counter()
    data, truth = generate(config, trial)
    link = builtin_link(config.link_name)
    try:
        result = fit(link, data, FitConfig(lam=lam))
    except NlsparseError as exc:
        return TrialRecord(
            trial_index=trial,
            l2_error=np.nan,
            l1_error=np.nan,
            effective_sample=config.effective_sample,
            runtime_ms=1e3 * (time.perf_counter() - started),
            failure=str(exc),
        )
    err = result.beta_hat - truth.beta_star
    return TrialRecord(
        trial_index=trial,
        l2_error=float(np.linalg.norm(err)),
        l1_error=float(np.abs(err).sum()),
        effective_sample=config.effective_sample,
        runtime_ms=1e3 * (time.perf_counter() - started),
    )


def _mean_sd(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.nan, np.nan
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return mean, sd


def run_estimation_sweep(configs: Sequence[SimConfig], lambda_scale: float = 3.0,
                         lam: Optional[float] = None, threads: Optional[int] = None):
    """Fit every trial of every config; summarize l2/l1 errors per grid point.

    ``lam`` overrides the default rule lambda = lambda_scale * sigma *
    sqrt(log d / n). Individual trial failures are counted, not fatal.
    """
    rows = []
    for config in configs:
        lam_point = lam if lam is not None else config.lambda_rule(lambda_scale)
        jobs = [(config, trial, lam_point) for trial in range(config.trials)]
        records = _map_trials(_sweep_trial, jobs, threads)
        good = [r for r in records if r.failure is None]
        mean_l2, sd_l2 = _mean_sd([r.l2_error for r in good])
        mean_l1, sd_l1 = _mean_sd([r.l1_error for r in good])
        rows.append(SweepRow(
            d=config.d,
            s_star=config.s_star,
            n=config.n,
            effective_sample=config.effective_sample,
            mean_l2=mean_l2,
            sd_l2=sd_l2,
            mean_l1=mean_l1,
            sd_l1=sd_l1,
            trials=config.trials,
            failures=len(records) - len(good),
        ))
    return rows


# ---------------------------------------------------------------------------
# Comparison against the inverted-data linear baseline


@dataclass(frozen=True)
class BaselineRow:
    d: int
    s_star: int
    n: int
    effective_sample: float
    mean_l2: float
    sd_l2: float
    mean_l1: float
    sd_l1: float
    base_mean_l2: float
    base_sd_l2: float
    base_mean_l1: float
    base_sd_l1: float
    trials: int
    failures: int


def _cv_lasso(data: Dataset, folds: int, grid_size: int):
    """Pick lambda for an identity-link fit by k-fold cross-validation.

    The grid is ``grid_size`` log-spaced values spanning
    [1e-4, 1] * sd(z) * sqrt(log d / n), searched from the largest value down
    so each fit warm-starts from the previous solution. Folds are contiguous
    index blocks, which keeps the selection deterministic.
    """
    identity = builtin_link("identity")
    n, d = data.design.shape
    base = max(float(np.std(data.response, ddof=1)), 1e-8) * np.sqrt(np.log(d) / n)
    grid = np.geomspace(base, 1e-4 * base, grid_size)
    fold_idx = np.array_split(np.arange(n), folds)

    cv_mse = np.zeros(grid_size)
    for val_rows in fold_idx:
        mask = np.ones(n, dtype=bool)
        mask[val_rows] = False
        train = Dataset(design=data.design[mask], response=data.response[mask])
        X_val = data.design[val_rows]
        z_val = data.response[val_rows]
        warm = None
        for gi, lam in enumerate(grid):
            # selection-only fits: coarse tolerance, warm-started down the path
            res = fit(identity, train,
                      FitConfig(lam=float(lam), init=warm, tol=1e-4, max_iter=2000))
            warm = res.beta_hat
            pred_err = z_val - X_val @ res.beta_hat
            cv_mse[gi] += float(pred_err @ pred_err) / z_val.size
    best = int(np.argmin(cv_mse))  # ties resolve to the strongest penalty
    final = fit(identity, data, FitConfig(lam=float(grid[best])))
    return final.beta_hat, float(grid[best])


def _baseline_trial(job):
    config, trial, lam, folds, grid_size = job
    data, truth = generate(config, trial)
    link = builtin_link(config.link_name)
    try:
        proposed = fit(link, data, FitConfig(lam=lam)).beta_hat
        inverted = Dataset(design=data.design, response=invert_link(link, data.response))
        baseline, _ = _cv_lasso(inverted, folds, grid_size)
    except NlsparseError as exc:
        return trial, None, None, str(exc)
    err_p = proposed - truth.beta_star
    err_b = baseline - truth.beta_star
    return (
        trial,
        (float(np.linalg.norm(err_p)), float(np.abs(err_p).sum())),
        (float(np.linalg.norm(err_b)), float(np.abs(err_b).sum())),
        None,
    )


def run_baseline_comparison(configs: Sequence[SimConfig], lambda_scale: float = 3.0,
                            cv_folds: int = 5, cv_grid_size: int = 30,
                            threads: Optional[int] = None):
    """Paired comparison: nonlinear fit vs Lasso on inverted responses.

    The baseline transforms each response through the link inverse and runs
    the identity-link solver with cross-validated regularization. Trials
    where either side fails are excluded from both means (pairing preserved)
    and counted in ``failures``.
    """
    rows = []
    for config in configs:
        lam = config.lambda_rule(lambda_scale)
        jobs = [(config, t, lam, cv_folds, cv_grid_size) for t in range(config.trials)]
        outcomes = _map_trials(_baseline_trial, jobs, threads)
        good = [(p, b) for (_, p, b, failure) in outcomes if failure is None]
        p_l2, p_l1 = zip(*[p for p, _ in good]) if good else ((), ())
        b_l2, b_l1 = zip(*[b for _, b in good]) if good else ((), ())
        mean_l2, sd_l2 = _mean_sd(p_l2)
        mean_l1, sd_l1 = _mean_sd(p_l1)
        base_mean_l2, base_sd_l2 = _mean_sd(b_l2)
        base_mean_l1, base_sd_l1 = _mean_sd(b_l1)
        rows.append(BaselineRow(
            d=config.d,
            s_star=config.s_star,
            n=config.n,
            effective_sample=config.effective_sample,
            mean_l2=mean_l2,
            sd_l2=sd_l2,
            mean_l1=mean_l1,
            sd_l1=sd_l1,
            base_mean_l2=base_mean_l2,
            base_sd_l2=base_sd_l2,
            base_mean_l1=base_mean_l1,
            base_sd_l1=base_sd_l1,
            trials=config.trials,
            failures=len(outcomes) - len(good),
        ))
    return rows


# ---------------------------------------------------------------------------
# Inference calibration table


@dataclass(frozen=True)
class TrialInference:
    """Test outcomes for one coordinate in one trial (None when it failed)."""

    coordinate: int
    score_reject: Optional[bool]
    wald_reject: Optional[bool]
    ci_low: float = np.nan
    ci_high: float = np.nan
    failure: Optional[str] = None


@dataclass(frozen=True)
class InferenceRow:
    mu: float
    score_type1: float
    score_power: float
    wald_type1: float
    wald_power: float
    trials: int
    excluded: int


def _inference_trial(job):
    config, trial, coordinates, lam, rho, delta = job
    data, _truth = generate(config, trial)
    link = builtin_link(config.link_name)
    try:
        fit_result = fit(link, data, FitConfig(lam=lam))
    except NlsparseError as exc:
        failed = str(exc)
        return trial, [
            TrialInference(coordinate=j, score_reject=None, wald_reject=None, failure=failed)
            for j in coordinates
        ]

    out = []
    for j in coordinates:
        cfg = InferenceConfig(coordinate=j, rho=rho, significance=delta)
        failure = None
        score_reject = wald_reject = None
        ci_low = ci_high = np.nan
        try:
            score_reject = score_test(link, data, fit_result, cfg).reject
            wald = wald_estimate(link, data, fit_result, cfg)
            wald_reject = wald.reject
            ci_low, ci_high = wald.ci_low, wald.ci_high
        except NlsparseError as exc:
            failure = str(exc)
        out.append(TrialInference(
            coordinate=j,
            score_reject=score_reject,
            wald_reject=wald_reject,
            ci_low=ci_low,
            ci_high=ci_high,
            failure=failure,
        ))
    return trial, out


def run_inference_trials(config: SimConfig, coordinates: Sequence[int],
                         lambda_scale: float = 3.0, rho_scale: float = 30.0,
                         significance: float = 0.05, threads: Optional[int] = None):
    """Fit + test every trial of one config at the given coordinates.

    Returns ``[(trial_index, [TrialInference, ...]), ...]`` ordered by trial.
    This is the building block of :func:`run_inference_table`; use it
    directly when per-trial detail (e.g. CI coverage) is needed.
    """
    lam = config.lambda_rule(lambda_scale)
    rho = config.rho_rule(rho_scale)
    coords = tuple(int(j) for j in coordinates)
    for j in coords:
        if not 1 <= j <= config.d:
            raise InputError(f"coordinate {j} outside 1..{config.d}")
    jobs = [(config, t, coords, lam, rho, significance) for t in range(config.trials)]
    return _map_trials(_inference_trial, jobs, threads)


def _rejection_rate(outcomes, coordinate, which):
    flags = [
        getattr(o, which)
        for _, per_trial in outcomes
        for o in per_trial
        if o.coordinate == coordinate and getattr(o, which) is not None
    ]
    return float(np.mean(flags)) if flags else np.nan


def run_inference_table(config: SimConfig, mu_grid: Optional[Sequence[float]] = None,
                        type1_coordinate: Optional[int] = None, power_coordinate: int = 1,
                        lambda_scale: float = 3.0, rho_scale: float = 30.0,
                        significance: float = 0.05, threads: Optional[int] = None):
    """Type-I error and power of both tests across signal strengths mu.

    For each mu the nonzero coefficients are set to the constant mu, the
    null coordinate (default s_star + 1, outside the support) measures the
    type-I error, and the power coordinate (default 1, inside the support)
    measures power as the rejection frequency under the false null. Trials
    where any requested test failed are reported in ``excluded``; rates are
    computed over the trials where the specific test succeeded.
    """
    if mu_grid is None:
        mu_grid = [round(0.05 * k, 2) for k in range(11)]
    if type1_coordinate is None:
        type1_coordinate = config.s_star + 1
    coordinates = (type1_coordinate, power_coordinate)

    rows = []
    for mu in mu_grid:
        cfg = replace(config, beta_mode=ConstantBeta(mu=float(mu)))
        outcomes = run_inference_trials(
            cfg, coordinates, lambda_scale, rho_scale, significance, threads
        )
        excluded = sum(
            1 for _, per_trial in outcomes if any(o.failure is not None for o in per_trial)
        )
        rows.append(InferenceRow(
            mu=float(mu),
            score_type1=_rejection_rate(outcomes, type1_coordinate, "score_reject"),
            score_power=_rejection_rate(outcomes, power_coordinate, "score_reject"),
            wald_type1=_rejection_rate(outcomes, type1_coordinate, "wald_reject"),
            wald_power=_rejection_rate(outcomes, power_coordinate, "wald_reject"),
            trials=config.trials,
            excluded=excluded,
        ))
    return rows


# ---------------------------------------------------------------------------
# CSV rendering (floats use 6 significant digits)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def _csv_text(header, rows, fields) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, f)) for f in fields))
    return "\n".join(lines) + "\n"


def sweep_csv_text(rows: Sequence[SweepRow]) -> str:
    fields = ["d", "s_star", "n", "effective_sample", "mean_l2", "sd_l2",
              "mean_l1", "sd_l1", "trials", "failures"]
    return _csv_text(fields, rows, fields)


def baseline_csv_text(rows: Sequence[BaselineRow]) -> str:
    fields = ["d", "s_star", "n", "effective_sample", "mean_l2", "sd_l2",
              "mean_l1", "sd_l1", "base_mean_l2", "base_sd_l2", "base_mean_l1",
              "base_sd_l1", "trials", "failures"]
    return _csv_text(fields, rows, fields)


def inference_csv_text(rows: Sequence[InferenceRow]) -> str:
    fields = ["mu", "score_type1", "score_power", "wald_type1", "wald_power",
              "trials", "excluded"]
    return _csv_text(fields, rows, fields)
