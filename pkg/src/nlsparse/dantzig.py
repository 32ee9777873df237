"""Dantzig-selector linear program for the decorrelation vector.

Solves

    minimize ||v||_1  subject to  ||h_ag - v' h_gg||_inf <= rho

by an exact dense two-phase simplex with Bland's anti-cycling rule on the
split-variable reformulation (v = p - q with p, q >= 0). Exactness keeps the
downstream test statistics deterministic; ties among optimal vertices are
broken by Bland's lowest-index rule, so repeated runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, NumericalError

__all__ = ["DantzigResult", "solve_dantzig"]

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-8


@dataclass(frozen=True)
class DantzigResult:
    """Solution of the decorrelation LP.

    ``d_hat`` is None when ``status == "infeasible"``. ``max_slack`` is
    ``rho - ||h_ag - h_gg d_hat||_inf``; nonnegative (within 1e-8) at an
    optimum.
    """

    d_hat: Optional[np.ndarray]
    l1_norm: float
    max_slack: float
    status: str
    message: str = ""


def solve_dantzig(h_ag, h_gg, rho: float) -> DantzigResult:
    """Minimize ||v||_1 subject to ||h_ag - v' h_gg||_inf <= rho.

    ``h_gg`` must be symmetric (checked to 1e-10) and ``rho`` positive. The
    LP is solved exactly; feasibility and optimality are certified to 1e-8.
    An infeasible program (possible only for rank-deficient ``h_gg``) is
    reported through ``status`` rather than an exception.
    """
    h_ag = np.asarray(h_ag, dtype=float)
    h_gg = np.asarray(h_gg, dtype=float)
    if h_ag.ndim != 1:
        raise InputError("h_ag must be a vector")
    m = h_ag.shape[0]
    if h_gg.shape != (m, m):
        raise InputError(f"h_gg must be {m}x{m} to match h_ag, got {h_gg.shape}")
    if m > 0 and float(np.abs(h_gg - h_gg.T).max()) > 1e-10:
        raise InputError("h_gg is not symmetric within 1e-10")
    if not (np.isfinite(rho) and rho > 0.0):
        raise InputError(f"rho must be a positive real, got {rho}")
    if m == 0:
        # No nuisance coordinates: the LP is vacuous.
        return DantzigResult(
            d_hat=np.zeros(0), l1_norm=0.0, max_slack=rho, status="optimal"
        )

    # Split v = p - q, x = (p, q) >= 0; both sides of the sup-norm constraint:
    #   [ h_gg, -h_gg] x <= rho + h_ag
    #   [-h_gg,  h_gg] x <= rho - h_ag
    A = np.block([[h_gg, -h_gg], [-h_gg, h_gg]])
    b = np.concatenate([rho + h_ag, rho - h_ag])
    c = np.ones(2 * m)

    status, x = _simplex_two_phase(c, A, b)
    if status != "optimal":
        return DantzigResult(
            d_hat=None,
            l1_norm=np.nan,
            max_slack=np.nan,
            status="infeasible",
            message=(
                f"decorrelation LP infeasible at rho={rho:g}; "
                "increase rho (the constraint radius)"
            ),
        )

    v = x[:m] - x[m:]
    residual = h_ag - h_gg @ v
    max_slack = rho - float(np.abs(residual).max())
    if max_slack < -_FEAS_TOL:
        raise NumericalError(
            f"simplex returned an infeasible vertex (slack {max_slack:.3e})"
        )
    return DantzigResult(
        d_hat=v,
        l1_norm=float(np.abs(v).sum()),
        max_slack=max_slack,
        status="optimal",
    )


def _simplex_two_phase(c, A, b):
    """Minimize c'x s.t. Ax <= b, x >= 0. Returns (status, x).

    status is "optimal" or "infeasible". Bland's rule everywhere: the
    entering column is the lowest index with a negative reduced cost, the
    leaving row breaks ratio ties by the lowest basic variable index.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape

    # Equality form A x + diag(sign) s = b with b >= 0 after flipping rows.
    flip = b < 0.0
    A1 = np.where(flip[:, None], -A, A)
    b1 = np.where(flip, -b, b)
    slack = np.diag(np.where(flip, -1.0, 1.0))
    art_rows = np.flatnonzero(flip)
    n_art = art_rows.size

    n_cols = n + m + n_art
    T = np.zeros((m, n_cols + 1))
    T[:, :n] = A1
    T[:, n:n + m] = slack
    for k, i in enumerate(art_rows):
        T[i, n + m + k] = 1.0
    T[:, -1] = b1

    basis = np.empty(m, dtype=int)
    basis[:] = n + np.arange(m)  # slacks
    basis[art_rows] = n + m + np.arange(n_art)  # artificials where flipped

    if n_art > 0:
        cost1 = np.zeros(n_cols + 1)
        cost1[n + m:n_cols] = 1.0
        obj = cost1.copy()
        for i in range(m):
            if obj[basis[i]] != 0.0:
                obj -= obj[basis[i]] * T[i]
        if not _run_simplex(T, basis, obj):
            raise NumericalError("simplex phase 1 reported unbounded (impossible)")
        if -obj[-1] > _FEAS_TOL:
            return "infeasible", None
        T, basis = _drop_artificials(T, basis, n + m)
        m = T.shape[0]

    cost2 = np.zeros(T.shape[1])
    cost2[:n] = c
    obj = cost2.copy()
    for i in range(m):
        if obj[basis[i]] != 0.0:
            obj -= obj[basis[i]] * T[i]
    if not _run_simplex(T, basis, obj):
        raise NumericalError("simplex phase 2 reported unbounded")

    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = max(T[i, -1], 0.0)
    return "optimal", x


def _run_simplex(T, basis, obj):
    """Pivot until all reduced costs are nonnegative. False on unbounded."""
    m = T.shape[0]
    limit = 1000 + 50 * T.shape[1]
    n_scan = T.shape[1] - 1
    for _ in range(limit):
        negative = np.flatnonzero(obj[:n_scan] < -_PIVOT_TOL)
        if negative.size == 0:
            return True
        col = int(negative[0])

        ratios = np.full(m, np.inf)
        positive = T[:, col] > _PIVOT_TOL
        ratios[positive] = T[positive, -1] / T[positive, col]
        best = ratios.min()
        if not np.isfinite(best):
            return False
        tie = ratios <= best + 1e-12 * (1.0 + abs(best))
        row = int(min(np.flatnonzero(tie), key=lambda i: basis[i]))

        _pivot(T, obj, row, col)
        basis[row] = col
    raise NumericalError("simplex exceeded the pivot limit")


def _pivot(T, obj, row, col):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    obj -= obj[col] * T[row]


def _drop_artificials(T, basis, first_art):
    """Pivot artificial variables out of the basis, dropping redundant rows."""
    keep = np.ones(T.shape[0], dtype=bool)
    dummy_obj = np.zeros(T.shape[1])
    for i in range(T.shape[0]):
        if basis[i] < first_art:
            continue
        pivot_col = -1
        for j in range(first_art):
            if abs(T[i, j]) > _PIVOT_TOL:
                pivot_col = j
                break
        if pivot_col >= 0:
            _pivot(T, dummy_obj, i, pivot_col)
            basis[i] = pivot_col
        else:
            keep[i] = False  # redundant constraint row
    T = np.hstack([T[keep][:, :first_art], T[keep][:, -1:]])
    return T, basis[keep]
