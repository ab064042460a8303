"""Shared estimation kernels: OLS, logistic MLE, elastic-net Poisson.

These back the causal regressions and the zero-inflated model.  They are
deliberately small and explicit: dense linear algebra, Newton steps with
backtracking, and a proximal-gradient solver whose accepted iterations never
increase the penalized objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import DomainError, NonConvergenceError, SeparationError

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class DesignMatrix:
    """Dense design with named columns; rejects non-finite entries."""

    values: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise DomainError("design matrix must be 2-dimensional")
        if not np.all(np.isfinite(v)):
            raise DomainError("design matrix contains non-finite entries")
        if len(self.column_names) != v.shape[1]:
            raise DomainError("column_names length must match column count")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FitResult:
    """Coefficients with uncertainty and solver diagnostics."""

    coefficients: np.ndarray
    standard_errors: np.ndarray
    objective: float
    converged: bool
    n_iter: int
    covariance: np.ndarray | None = None
    column_names: tuple[str, ...] | None = None
    trace: tuple[float, ...] | None = None

    def __post_init__(self):
        if np.any(np.asarray(self.standard_errors) < 0):
            raise DomainError("standard errors must be non-negative")


def _as_design(X, names=None) -> DesignMatrix:
    if isinstance(X, DesignMatrix):
        return X
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if names is None:
        names = tuple(f"x{j}" for j in range(X.shape[1]))
    return DesignMatrix(values=X, column_names=tuple(names))


def _collinear_columns(X: np.ndarray, names: Sequence[str]) -> list[str]:
    """Columns whose R diagonal collapses in a pivoted-ish QR pass."""
    _q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    return [names[j] for j in range(len(diag)) if diag[j] <= _RANK_TOL * max(scale, 1.0)]


def ols(X, y, cluster_ids=None, *, names=None) -> FitResult:
    """Least squares with plain or cluster-robust standard errors.

    Raises a domain error naming the offending columns when the design is
    rank deficient.  Residuals of the returned fit are orthogonal to every
    design column.
    """
    d = _as_design(X, names)
    y = np.asarray(y, dtype=float)
    if y.shape != (d.n,):
        raise DomainError("y must be a vector matching the design rows")
    if d.n < d.p:
        raise DomainError(f"need n >= p for OLS (n={d.n}, p={d.p})")
    Xv = d.values
    if np.linalg.matrix_rank(Xv, tol=_RANK_TOL * max(1.0, np.abs(Xv).max())) < d.p:
        bad = _collinear_columns(Xv, d.column_names)
        raise DomainError(f"design is rank deficient; collinear columns: {bad}")

    xtx = Xv.T @ Xv
    xtx_inv = np.linalg.inv(xtx)
    beta = xtx_inv @ (Xv.T @ y)
    resid = y - Xv @ beta
    rss = float(resid @ resid)
    dof = max(d.n - d.p, 1)

    if cluster_ids is None:
        sigma2 = rss / dof
        cov = sigma2 * xtx_inv
    else:
        cluster_ids = np.asarray(cluster_ids)
        if cluster_ids.shape[0] != d.n:
            raise DomainError("cluster_ids must match the design rows")
        groups = {}
        for i, g in enumerate(cluster_ids):
            groups.setdefault(g, []).append(i)
        n_groups = len(groups)
        if n_groups < 2:
            raise DomainError("cluster-robust errors need at least 2 clusters")
        meat = np.zeros((d.p, d.p))
        for idx in groups.values():
            xg = Xv[idx]
            ug = resid[idx]
            s = xg.T @ ug
            meat += np.outer(s, s)
        # Small-sample factor: G/(G-1) * (n-1)/(n-p).
        c = n_groups / (n_groups - 1) * (d.n - 1) / max(d.n - d.p, 1)
        cov = c * xtx_inv @ meat @ xtx_inv

    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(
        coefficients=beta,
        standard_errors=se,
        objective=rss,
        converged=True,
        n_iter=1,
        covariance=cov,
        column_names=d.column_names,
    )


def logit_mle(
    X,
    y,
    *,
    sample_weight=None,
    beta0=None,
    tol: float = 1e-8,
    max_iter: int = 200,
    names=None,
) -> FitResult:
    """Bernoulli maximum likelihood by damped Newton iterations.

    ``y`` may be binary or fractional in [0, 1] (the latter arises as
    posterior responsibilities inside EM).  Convergence requires the
    gradient max-norm below ``tol``; clean separation raises instead of
    silently returning runaway coefficients.
    """
    d = _as_design(X, names)
    y = np.asarray(y, dtype=float)
    if y.shape != (d.n,):
        raise DomainError("y must match the design rows")
    if np.any((y < 0) | (y > 1)):
        raise DomainError("responses must lie in [0, 1]")
    if np.isclose(y.max(), y.min()):
        raise DomainError("both response classes must be present")
    w = np.ones(d.n) if sample_weight is None else np.asarray(sample_weight, float)
    if w.shape != (d.n,) or np.any(w < 0):
        raise DomainError("sample_weight must be non-negative and match rows")

    Xv = d.values
    beta = np.zeros(d.p) if beta0 is None else np.asarray(beta0, float).copy()

    def nll(b):
        eta = Xv @ b
        # log(1 + e^eta) - y*eta, numerically stable
        return float(np.sum(w * (np.logaddexp(0.0, eta) - y * eta)))

    binary = bool(np.all((y == 0.0) | (y == 1.0)))

    f = nll(beta)
    for it in range(1, max_iter + 1):
        eta = Xv @ beta
        p = expit(eta)
        grad = Xv.T @ (w * (p - y))
        if np.max(np.abs(grad)) < tol:
            # A vanishing gradient with every binary response perfectly
            # classified means the likelihood is maximized at infinity.
            if binary and np.all(np.abs(y - p) < 1e-4):
                raise SeparationError(
                    "perfect separation: all observations classified exactly"
                )
            break
        hw = w * p * (1.0 - p)
        if np.max(hw) < 1e-12 and np.max(np.abs(grad)) >= tol:
            raise SeparationError(
                "perfect separation: fitted probabilities saturated before convergence"
            )
        H = Xv.T @ (Xv * hw[:, None])
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        # Backtracking on the negative log-likelihood.
        t = 1.0
        while t > 1e-12:
            cand = beta - t * step
            fc = nll(cand)
            if fc <= f + 1e-12:
                beta, f = cand, fc
                break
            t *= 0.5
        if np.max(np.abs(beta)) > 1e4:
            raise SeparationError(
                "perfect separation: coefficients diverging without meeting tolerance"
            )
    else:
        raise NonConvergenceError(
            f"logit_mle failed to converge in {max_iter} iterations",
            last_coefficients=beta,
            gradient_norm=float(np.max(np.abs(grad))),
        )

    p = expit(Xv @ beta)
    hw = w * p * (1.0 - p)
    H = Xv.T @ (Xv * hw[:, None])
    try:
        cov = np.linalg.inv(H)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        cov = None
        se = np.zeros(d.p)
    return FitResult(
        coefficients=beta,
        standard_errors=se,
        objective=f,
        converged=True,
        n_iter=it,
        covariance=cov,
        column_names=d.column_names,
    )


def _soft_threshold(x: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def elastic_net_poisson(
    X,
    y,
    rho1: float,
    rho2: float,
    *,
    sample_weight=None,
    offset=None,
    unpenalized: Sequence[int] = (0,),
    beta0=None,
    tol: float = 1e-10,
    max_iter: int = 20000,
    names=None,
) -> FitResult:
    """Penalized Poisson regression by proximal gradient with backtracking.

    Minimizes ``sum_i w_i (mu_i - y_i log mu_i) + rho1*||b||_1 + rho2*||b||_2^2``
    with log link ``mu = exp(X b + offset)``.  Penalties skip the columns in
    ``unpenalized`` (by default the first column, conventionally the
    intercept).  The objective is non-increasing over accepted steps; the
    per-iteration trace is returned for inspection.
    """
    if rho1 < 0 or rho2 < 0:
        raise DomainError("penalty strengths must be non-negative")
    d = _as_design(X, names)
    y = np.asarray(y, dtype=float)
    if y.shape != (d.n,):
        raise DomainError("y must match the design rows")
    if np.any(y < 0) or np.any(np.abs(y - np.round(y)) > 1e-9):
        raise DomainError("y must be non-negative integer counts")
    w = np.ones(d.n) if sample_weight is None else np.asarray(sample_weight, float)
    if w.shape != (d.n,) or np.any(w < 0):
        raise DomainError("sample_weight must be non-negative and match rows")
    off = np.zeros(d.n) if offset is None else np.asarray(offset, float)

    Xv = d.values
    pen_mask = np.ones(d.p, dtype=bool)
    for j in unpenalized:
        pen_mask[j] = False

    _ETA_CAP = 50.0  # keeps exp() finite; binds only far outside any optimum

    def mu_of(b):
        return np.exp(np.clip(Xv @ b + off, -_ETA_CAP, _ETA_CAP))

    def smooth(b):
        mu = mu_of(b)
        nll = np.sum(w * mu) - np.sum(w[y > 0] * y[y > 0] * np.log(mu[y > 0]))
        return float(nll + rho2 * np.sum(b[pen_mask] ** 2))

    def smooth_grad(b):
        mu = mu_of(b)
        g = Xv.T @ (w * (mu - y))
        g = g + 2.0 * rho2 * np.where(pen_mask, b, 0.0)
        return g

    def total(b):
        return smooth(b) + rho1 * np.sum(np.abs(b[pen_mask]))

    beta = np.zeros(d.p) if beta0 is None else np.asarray(beta0, float).copy()
    f_smooth = smooth(beta)
    trace = [total(beta)]
    step = 1.0
    converged = False
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        g = smooth_grad(beta)
        accepted = False
        while step > 1e-18:
            cand = beta - step * g
            thresh = np.where(pen_mask, step * rho1, 0.0)
            cand = _soft_threshold(cand, thresh)
            diff = cand - beta
            quad = f_smooth + g @ diff + (diff @ diff) / (2.0 * step)
            f_cand = smooth(cand)
            if f_cand <= quad + 1e-12:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise NonConvergenceError(
                "elastic_net_poisson step size underflow",
                iteration=it,
                objective=trace[-1],
                gradient_norm=float(np.max(np.abs(g))),
            )
        move = np.max(np.abs(cand - beta))
        beta = cand
        f_smooth = f_cand
        trace.append(total(beta))
        if trace[-1] > trace[-2] + 1e-9 * max(1.0, abs(trace[-2])):
            raise NonConvergenceError(
                "elastic_net_poisson objective increased on an accepted step",
                iteration=it,
                objective=trace[-1],
            )
        # Converge once both the iterate and the objective have stalled for
        # a few consecutive accepted steps.
        obj_change = trace[-2] - trace[-1]
        if (
            move <= 1e-9 * max(1.0, np.max(np.abs(beta)))
            and obj_change <= tol * max(1.0, abs(trace[-1]))
        ):
            stall += 1
            if stall >= 3:
                converged = True
                break
        else:
            stall = 0
        step = min(step * 1.25, 1e6)
    if not converged:
        raise NonConvergenceError(
            f"elastic_net_poisson failed to converge in {max_iter} iterations",
            objective=trace[-1],
            last_coefficients=beta,
        )

    # Fisher-information SEs at the solution (L2 curvature included); these
    # are diagnostic: penalized estimators have no exact classical SEs.
    mu = mu_of(beta)
    H = Xv.T @ (Xv * (w * mu)[:, None]) + 2.0 * rho2 * np.diag(pen_mask.astype(float))
    try:
        cov = np.linalg.inv(H)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        cov = None
        se = np.zeros(d.p)
    return FitResult(
        coefficients=beta,
        standard_errors=se,
        objective=trace[-1],
        converged=True,
        n_iter=it,
        covariance=cov,
        column_names=d.column_names,
        trace=tuple(trace),
    )
