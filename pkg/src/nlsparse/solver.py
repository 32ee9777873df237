"""Proximal gradient solver with BB stepsizes and a nonmonotone line search.

Each outer iteration proposes the spectral (Barzilai-Borwein) stepsize, then
grows it by ``eta`` until the soft-thresholded gradient step satisfies a
nonmonotone sufficient-decrease test against the worst objective value in the
last ``memory + 1`` accepted iterates:

    phi(beta_new) <= max window(phi) - zeta * alpha/2 * ||beta_new - beta||^2

Accepted objective values, stepsizes and squared step norms are logged so the
acceptance inequality can be replayed exactly from the returned traces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, LineSearchError, NumericalError
from .loss import loss_gradient, _check_beta
from .model import Dataset, FitConfig, LinkFunction

__all__ = [
    "FitResult",
    "soft_threshold",
    "bb_stepsize",
    "prox_step",
    "acceptance_check",
    "fit",
    "kkt_residual",
]


@dataclass(frozen=True)
class FitResult:
    """Outcome of a solver run.

    Attributes
    ----------
    beta_hat : ndarray
        The final iterate (a stationary point when ``converged``).
    iterations : int
        Number of accepted proximal steps.
    objective_trace : ndarray
        Penalized objective of each accepted iterate; entry 0 is the
        starting point, so ``len == iterations + 1``.
    kkt_residual : float
        Stationarity certificate at ``beta_hat`` (see :func:`kkt_residual`).
    converged : bool
        True when the relative-change stopping rule fired before max_iter.
    stepsize_trace : ndarray
        Accepted stepsize alpha_t per iteration (``len == iterations``).
    step_sqnorm_trace : ndarray
        Squared l2 norm of each accepted step, exactly as used inside the
        acceptance test (``len == iterations``).
    """

    beta_hat: np.ndarray
    iterations: int
    objective_trace: np.ndarray
    kkt_residual: float
    converged: bool
    stepsize_trace: np.ndarray
    step_sqnorm_trace: np.ndarray


def soft_threshold(u, a):
    """Soft-thresholding: sign(u) * max(|u| - a, 0), elementwise."""
    if np.any(np.asarray(a) < 0):
        raise InputError("threshold must be nonnegative")
    return np.sign(u) * np.maximum(np.abs(u) - a, 0.0)


def bb_stepsize(t: int, delta, g, alpha_min: float, alpha_max: float) -> float:
    """Spectral stepsize <delta, g> / <delta, delta>, clamped to [alpha_min, alpha_max].

    ``delta`` and ``g`` are the differences of consecutive iterates and of
    their gradients. Returns 1 on the first iteration (t = 0), and falls back
    to 1 whenever the quotient is nonpositive or non-finite (negative
    curvature along the step, or a stalled step with ``delta = 0``).
    """
    if t == 0:
        alpha = 1.0
    else:
        delta = np.asarray(delta, dtype=float)
        g = np.asarray(g, dtype=float)
        if delta.shape != g.shape:
            raise InputError("delta and g must have the same length")
        dd = float(delta @ delta)
        dg = float(delta @ g)
        alpha = dg / dd if dd > 0.0 else np.nan
        if not np.isfinite(alpha) or alpha <= 0.0:
            alpha = 1.0
    return min(max(alpha, alpha_min), alpha_max)


def prox_step(link: LinkFunction, data: Dataset, beta_t, alpha_t: float, lam: float):
    """One proximal update: soft-threshold the gradient step at level lam/alpha."""
    if not alpha_t > 0.0:
        raise InputError(f"alpha_t must be positive, got {alpha_t}")
    beta_t = _check_beta(data, beta_t)
    u = beta_t - loss_gradient(link, data, beta_t) / alpha_t
    return soft_threshold(u, lam / alpha_t)


def acceptance_check(objective_history, phi_new: float, alpha_t: float, step, zeta: float, memory: int) -> bool:
    """Nonmonotone sufficient-decrease test.

    Accept iff ``phi_new <= max(window) - zeta * alpha_t / 2 * ||step||^2``
    where the window is the last ``min(memory + 1, len(history))`` entries of
    ``objective_history``.
    """
    hist = np.asarray(objective_history, dtype=float)
    if hist.size == 0:
        raise InputError("objective_history must be nonempty")
    step = np.asarray(step, dtype=float)
    window = hist[-min(memory + 1, hist.size):]
    bound = float(window.max()) - zeta * alpha_t / 2.0 * float(step @ step)
    return bool(phi_new <= bound)


def _objective(link, data, beta, lam, index=None):
    # Non-raising objective for line-search candidates: +inf on overflow.
    with np.errstate(over="ignore", invalid="ignore"):
        if index is None:
            index = data.design @ beta
        resid = data.response - link.eval(index)
        value = 0.5 * float(resid @ resid) / data.n + lam * float(np.abs(beta).sum())
    return value if np.isfinite(value) else np.inf


def fit(link: LinkFunction, data: Dataset, config: FitConfig) -> FitResult:
    """Minimize L(beta) + lam ||beta||_1 to stationarity.

    Runs the proximal gradient iteration with BB initial stepsizes and the
    nonmonotone acceptance rule until the relative iterate change
    ``||beta_t - beta_{t-1}|| / ||beta_t||`` drops to ``config.tol`` (absolute
    change when the iterate is zero) AND the KKT residual certifies
    stationarity at ``10 * config.tol``, or ``config.max_iter`` is reached.
    The small-step rule alone can trigger during a slow stretch while the
    iterate is still far from stationary; the certificate makes ``converged``
    mean what callers expect.

    The run is deterministic: identical inputs produce a bitwise identical
    :class:`FitResult`.

    Raises
    ------
    LineSearchError
        If ``config.max_linesearch`` stepsize increases never satisfy the
        acceptance test; the partial result is attached to the exception.
    NumericalError
        If the starting objective is not finite.
    """
    if config.init is None:
        beta = np.zeros(data.d)
    else:
        if config.init.shape[0] != data.d:
            raise InputError(
                f"init has length {config.init.shape[0]}, expected {data.d}"
            )
        beta = config.init.copy()
    lam = config.lam

    phi = _objective(link, data, beta, lam)
    if not np.isfinite(phi):
        raise NumericalError("fit: objective is not finite at the starting point")
    grad = loss_gradient(link, data, beta)

    history = [phi]
    alphas: list[float] = []
    step_sqnorms: list[float] = []
    prev_beta = None
    prev_grad = None
    converged = False
    t = 0

    while t < config.max_iter:
        if prev_beta is None:
            alpha = bb_stepsize(0, None, None, config.alpha_min, config.alpha_max)
        else:
            alpha = bb_stepsize(
                t, beta - prev_beta, grad - prev_grad, config.alpha_min, config.alpha_max
            )

        accepted = False
        for _ in range(config.max_linesearch):
            with np.errstate(over="ignore", invalid="ignore"):
                cand = soft_threshold(beta - grad / alpha, lam / alpha)
            step = cand - beta
            sqnorm = float(step @ step)
            phi_cand = _objective(link, data, cand, lam)
            window = history[-min(config.memory + 1, len(history)):]
            bound = max(window) - config.zeta * alpha / 2.0 * sqnorm
            if phi_cand <= bound:
                accepted = True
                break
            alpha *= config.eta
        if not accepted:
            partial = _build_result(
                beta, grad, lam, t, history, alphas, step_sqnorms, False
            )
            raise LineSearchError(
                f"fit: line search exhausted {config.max_linesearch} trials at "
                f"iteration {t}",
                result=partial,
            )

        prev_beta, prev_grad = beta, grad
        beta = cand
        grad = loss_gradient(link, data, beta)
        history.append(phi_cand)
        alphas.append(alpha)
        step_sqnorms.append(sqnorm)
        t += 1

        step_norm = np.sqrt(sqnorm)
        beta_norm = float(np.linalg.norm(beta))
        if beta_norm > 0.0:
            small = step_norm <= config.tol * beta_norm
        else:
            small = step_norm <= config.tol
        if small and _kkt_from_gradient(grad, beta, lam) <= 10.0 * config.tol:
            converged = True
            break

    return _build_result(
        beta, grad, lam, t, history, alphas, step_sqnorms, converged
    )


def _build_result(beta, grad, lam, t, history, alphas, sqnorms, converged):
    return FitResult(
        beta_hat=beta,
        iterations=t,
        objective_trace=np.asarray(history, dtype=float),
        kkt_residual=_kkt_from_gradient(grad, beta, lam),
        converged=converged,
        stepsize_trace=np.asarray(alphas, dtype=float),
        step_sqnorm_trace=np.asarray(sqnorms, dtype=float),
    )


def _kkt_from_gradient(grad, beta, lam) -> float:
    on_support = beta != 0.0
    viol = np.where(
        on_support,
        np.abs(grad + lam * np.sign(beta)),
        np.maximum(np.abs(grad) - lam, 0.0),
    )
    return float(viol.max())


def kkt_residual(link: LinkFunction, data: Dataset, beta, lam: float) -> float:
    """Max violation of the stationarity condition grad L + lam * xi = 0.

    At nonzero coordinates the subgradient is sign(beta_j), so the violation
    is ``|g_j + lam sign(beta_j)|``; at zero coordinates any xi in [-1, 1] is
    allowed, so it is ``max(|g_j| - lam, 0)``.
    """
    if lam < 0.0:
        raise InputError(f"lam must be nonnegative, got {lam}")
    beta = _check_beta(data, beta)
    return _kkt_from_gradient(loss_gradient(link, data, beta), beta, lam)
