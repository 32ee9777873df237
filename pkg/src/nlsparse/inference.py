"""Coordinate-wise tests and confidence intervals for the sparse estimate.

Inference on a single coordinate beta_j works by decorrelating its score from
the remaining (nuisance) coordinates. Writing alpha for coordinate j and
gamma for the rest, the decorrelated score at an evaluation point beta is

    F_S(beta, rho) = grad_a L(beta) - d_hat' grad_g L(beta),

where d_hat solves the Dantzig selector LP over the Hessian partition at j.
The score test evaluates F_S at the null-imposed point (coordinate j replaced
by the hypothesized value); the Wald construction evaluates it at the fitted
point and applies a one-step correction

    alpha_bar = alpha_hat - F_S / (h_aa - h_ag . d_hat)

whose normalized version is asymptotically standard normal, giving tests and
confidence intervals. Coordinates are 1-based throughout, matching the usual
statistical convention beta_1 .. beta_d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dantzig import DantzigResult, solve_dantzig
from .errors import (
    DantzigInfeasibleError,
    DegenerateVarianceError,
    InputError,
    SingularDenominatorError,
)
from .loss import hessian_partition, loss_gradient, loss_hessian, _check_beta
from .model import Dataset, LinkFunction
from .solver import FitResult

__all__ = [
    "InferenceConfig",
    "ScoreTestResult",
    "WaldResult",
    "normal_cdf",
    "normal_quantile",
    "decorrelated_score",
    "score_variance",
    "score_test",
    "wald_estimate",
]


@dataclass(frozen=True)
class InferenceConfig:
    """Which coordinate to test, at which level, against which null value."""

    coordinate: int
    rho: float
    significance: float = 0.05
    null_value: float = 0.0

    def __post_init__(self):
        if not (isinstance(self.coordinate, (int, np.integer)) and self.coordinate >= 1):
            raise InputError(f"coordinate must be a positive integer, got {self.coordinate}")
        if not (np.isfinite(self.rho) and self.rho > 0.0):
            raise InputError(f"rho must be a positive real, got {self.rho}")
        if not 0.0 < self.significance < 1.0:
            raise InputError(f"significance must lie in (0, 1), got {self.significance}")
        if not np.isfinite(self.null_value):
            raise InputError("null_value must be finite")


@dataclass(frozen=True)
class ScoreTestResult:
    statistic: float
    f_s: float
    sigma_s: float
    p_value: float
    reject: bool
    d_hat: DantzigResult


@dataclass(frozen=True)
class WaldResult:
    alpha_bar: float
    sigma_w: float
    statistic: float
    ci_low: float
    ci_high: float
    p_value: float
    reject: bool
    d_hat: DantzigResult


def normal_cdf(x: float) -> float:
    """Standard normal CDF, tail-accurate via erfc."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Rational approximation coefficients for the normal quantile (Acklam).
_QA = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
       1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_QB = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
       6.680131188771972e+01, -1.328068155288572e+01)
_QC = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
       -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_QD = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
       3.754408661907416e+00)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, accurate to better than 1e-10.

    A rational initial approximation is polished with one Newton step against
    the erfc-based CDF; the residual is computed in whichever tail is
    numerically stable.
    """
    if not (isinstance(p, (float, int, np.floating, np.integer)) and 0.0 < p < 1.0):
        raise InputError(f"quantile argument must lie strictly in (0, 1), got {p!r}")
    p = float(p)
    a, b, c, d = _QA, _QB, _QC, _QD
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)

    # Newton residual err = cdf(x) - p, computed in the stable tail:
    # for p > 0.5 use cdf(x) - p = (1 - p) - erfc(x / sqrt 2) / 2.
    if p <= 0.5:
        err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    else:
        err = (1.0 - p) - 0.5 * math.erfc(x / math.sqrt(2.0))
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if pdf > 0.0:
        x -= err / pdf
    return x


def _embed_w(d_hat: np.ndarray, j: int, d: int) -> np.ndarray:
    """Place 1 at coordinate j and -d_hat at the others (ascending order)."""
    w = np.empty(d)
    idx = j - 1
    w[idx] = 1.0
    w[np.arange(d) != idx] = -d_hat
    return w


def _score_pieces(link, data, beta, j, rho):
    hess = loss_hessian(link, data, beta)
    h_aa, h_ag, h_gg = hessian_partition(hess, j)
    dres = solve_dantzig(h_ag, h_gg, rho)
    if dres.status != "optimal":
        raise DantzigInfeasibleError(
            f"coordinate {j}: {dres.message or 'decorrelation LP infeasible'}"
        )
    grad = loss_gradient(link, data, beta)
    idx = j - 1
    f_s = float(grad[idx] - dres.d_hat @ np.delete(grad, idx))
    return f_s, dres, h_aa, h_ag


def decorrelated_score(link: LinkFunction, data: Dataset, beta, j: int, rho: float):
    """Decorrelated score F_S at ``beta`` for coordinate ``j`` (1-based).

    Returns ``(f_s, dantzig_result)``.
    """
    beta = _check_beta(data, beta)
    f_s, dres, _, _ = _score_pieces(link, data, beta, j, rho)
    return f_s, dres


def _variance_factors(link, data, beta, w):
    u = data.design @ beta
    xw = data.design @ w
    slope = link.deriv(u)
    resid = data.response - link.eval(u)
    factor_design = float(np.mean((slope * xw) ** 2))
    factor_resid = float(np.mean(resid ** 2))
    return factor_design, factor_resid


def score_variance(link: LinkFunction, data: Dataset, beta, d_hat, j: int) -> float:
    """Variance estimate for sqrt(n) F_S: mean[f'(u)^2 (x'w)^2] * mean[resid^2].

    ``w`` carries 1 at coordinate ``j`` and ``-d_hat`` elsewhere. Raises
    :class:`DegenerateVarianceError` when the product vanishes (all residuals
    zero, or the design direction is degenerate).
    """
    beta = _check_beta(data, beta)
    d_hat = np.asarray(d_hat, dtype=float)
    if d_hat.shape != (data.d - 1,):
        raise InputError(f"d_hat must have length {data.d - 1}, got {d_hat.shape}")
    w = _embed_w(d_hat, j, data.d)
    factor_design, factor_resid = _variance_factors(link, data, beta, w)
    var = factor_design * factor_resid
    if not np.isfinite(var) or var <= 0.0:
        raise DegenerateVarianceError(
            f"degenerate score variance ({var}) at coordinate {j}"
        )
    return var


def score_test(link: LinkFunction, data: Dataset, fit: FitResult, config: InferenceConfig) -> ScoreTestResult:
    """Decorrelated score test of H0: beta_j = null_value.

    Evaluates the score at the null-imposed point: the fitted vector with
    coordinate j replaced by the hypothesized value.
    """
    j = config.coordinate
    if j > data.d:
        raise InputError(f"coordinate {j} exceeds dimension {data.d}")
    beta_tilde = fit.beta_hat.copy()
    beta_tilde[j - 1] = config.null_value

    f_s, dres, _, _ = _score_pieces(link, data, beta_tilde, j, config.rho)
    var = score_variance(link, data, beta_tilde, dres.d_hat, j)
    sigma_s = math.sqrt(var)
    statistic = math.sqrt(data.n) * f_s / sigma_s
    p_value = 2.0 * (1.0 - normal_cdf(abs(statistic)))
    z_crit = normal_quantile(1.0 - config.significance / 2.0)
    return ScoreTestResult(
        statistic=statistic,
        f_s=f_s,
        sigma_s=sigma_s,
        p_value=p_value,
        reject=bool(abs(statistic) > z_crit),
        d_hat=dres,
    )


def wald_estimate(link: LinkFunction, data: Dataset, fit: FitResult, config: InferenceConfig) -> WaldResult:
    """One-step corrected estimate of beta_j with CI and Wald test.

    Everything is evaluated at the fitted point (not the null-imposed one).
    The correction divides the decorrelated score by
    ``D0 = h_aa - h_ag . d_hat``; the variance estimate inverts the design
    factor of the score variance, so the CI is
    ``alpha_bar -+ z * sigma_w / sqrt(n)``.
    """
    j = config.coordinate
    if j > data.d:
        raise InputError(f"coordinate {j} exceeds dimension {data.d}")
    beta_hat = fit.beta_hat
    alpha_hat = float(beta_hat[j - 1])

    f_s, dres, h_aa, h_ag = _score_pieces(link, data, beta_hat, j, config.rho)
    denom = h_aa - float(h_ag @ dres.d_hat)
    if abs(denom) <= 1e-12:
        raise SingularDenominatorError(
            f"one-step denominator {denom:.3e} at coordinate {j}"
        )
    alpha_bar = alpha_hat - f_s / denom

    w = _embed_w(dres.d_hat, j, data.d)
    factor_design, factor_resid = _variance_factors(link, data, beta_hat, w)
    if factor_design <= 0.0 or factor_resid <= 0.0:
        raise DegenerateVarianceError(
            f"degenerate Wald variance at coordinate {j} "
            f"(design factor {factor_design}, residual factor {factor_resid})"
        )
    var_w = factor_resid / factor_design
    if not np.isfinite(var_w) or var_w <= 0.0:
        raise DegenerateVarianceError(f"degenerate Wald variance ({var_w})")
    sigma_w = math.sqrt(var_w)

    z_crit = normal_quantile(1.0 - config.significance / 2.0)
    half_width = z_crit * sigma_w / math.sqrt(data.n)
    statistic = math.sqrt(data.n) * (alpha_bar - config.null_value) / sigma_w
    p_value = 2.0 * (1.0 - normal_cdf(abs(statistic)))
    return WaldResult(
        alpha_bar=alpha_bar,
        sigma_w=sigma_w,
        statistic=statistic,
        ci_low=alpha_bar - half_width,
        ci_high=alpha_bar + half_width,
        p_value=p_value,
        reject=bool(abs(statistic) > z_crit),
        d_hat=dres,
    )
