"""Zero-inflated Poisson medal model with dynamic gains and change detection.

A country-cycle's zero medal count can be *structural* (persistent barriers,
modeled by a logistic gate on deficit indicators) or *random* (Poisson chance
at positive intensity).  The intensity combines a static power factor
exp(b0 + b1*LogGDP + b2*AthleteCount) with a dynamic gain factor driven by
exponentially decayed resource inputs (coaching, event experience, athlete
pipeline trends).

Fitting is an EM loop: the E-step computes posterior structural-zero
responsibilities, the M-step refits the gate by weighted logistic regression
and the intensity by an elastic-net penalized Poisson regression.  Because
the gain enters the M-step log-linearly, the gain multiplier and the gain
coefficients are only identified as a product; fitted models store the
convention gamma = 1 with the product absorbed into theta.

Online change detection is a run-length recursion with a constant hazard and
a Gamma-Poisson conjugate predictive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit, gammaln, logsumexp

from .errors import DomainError, NonConvergenceError, StateError
from .regress import elastic_net_poisson, logit_mle

DEFAULT_ETA = 0.33          # per-cycle decay of resource effects
DEFAULT_ALPHA_RATE = 1.0    # weight of the athlete growth *rate* inside the trend
DEFAULT_EXPOSURE = 1.0      # Olympic cycles per observation
DEFAULT_HAZARD = 0.01       # change probability per step
DEFAULT_RHO1 = 0.1
DEFAULT_RHO2 = 0.05

_CLIP = 1e-10


@dataclass(frozen=True)
class ResourceRecord:
    """Resource inputs observed in one cycle."""

    cycle: int
    coach_input: float = 0.0
    event_experience: float = 0.0
    athlete_growth: float = 0.0
    athlete_rate: float = 0.0


@dataclass(frozen=True)
class ResourceHistory:
    """Per-country resource inputs over strictly increasing cycles."""

    records: tuple[ResourceRecord, ...]

    def __post_init__(self):
        cycles = [r.cycle for r in self.records]
        if any(b <= a for a, b in zip(cycles, cycles[1:])):
            raise DomainError("resource history cycles must be strictly increasing")

    def decayed_basis(
        self, t0: int, t: int, eta: float, alpha_rate: float
    ) -> np.ndarray:
        """Per-channel sums of inputs in [t0, t], decayed by exp(-eta*(t-tau)).

        Returns the three summands that the theta coefficients multiply:
        coaching, event experience, and the composite athlete trend
        (growth + alpha_rate * rate).
        """
        if eta <= 0:
            raise DomainError("eta must be positive")
        if t < t0:
            raise DomainError("t must be >= t0")
        basis = np.zeros(3)
        for r in self.records:
            if t0 <= r.cycle <= t:
                decay = math.exp(-eta * (t - r.cycle))
                basis[0] += r.coach_input * decay
                basis[1] += r.event_experience * decay
                basis[2] += (r.athlete_growth + alpha_rate * r.athlete_rate) * decay
        return basis


@dataclass(frozen=True)
class ZicpRow:
    """One (country, cycle) observation prepared for fitting."""

    noc: str
    cycle: int
    medals: int
    log_gdp: float
    athlete_count: float
    s1: float
    s2: float

    def __post_init__(self):
        if self.medals < 0:
            raise DomainError("medals must be non-negative")
        for name in ("log_gdp", "athlete_count", "s1", "s2"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")


@dataclass(frozen=True)
class ZicpModel:
    """Fitted parameters of the zero-inflated intensity model."""

    alpha: tuple[float, float, float]
    beta: tuple[float, float, float]
    gamma: float
    theta: tuple[float, float, float]
    eta: float = DEFAULT_ETA
    alpha_rate: float = DEFAULT_ALPHA_RATE
    exposure_T: float = DEFAULT_EXPOSURE
    fitted: bool = False
    em_trace: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.eta <= 0:
            raise DomainError("eta must be positive")
        if self.exposure_T <= 0:
            raise DomainError("exposure_T must be positive")
        values = [*self.alpha, *self.beta, self.gamma, *self.theta]
        if not all(math.isfinite(v) for v in values):
            raise DomainError("model parameters must be finite")


def structural_zero_prob(
    s1: float, s2: float, alpha: Sequence[float]
) -> float:
    """Logistic gate: probability that the zero is structural."""
    a0, a1, a2 = alpha
    return float(expit(a0 + a1 * s1 + a2 * s2))


def zero_prob(pi: float, lam: float, T: float) -> float:
    """P(no medals) = pi + (1 - pi) * exp(-lam * T)."""
    if not 0.0 <= pi <= 1.0:
        raise DomainError("pi must lie in [0, 1]")
    if lam < 0:
        raise DomainError("lam must be non-negative")
    if T <= 0:
        raise DomainError("T must be positive")
    return pi + (1.0 - pi) * math.exp(-lam * T)


def dynamic_gain(
    history: ResourceHistory | None,
    theta: Sequence[float],
    alpha_rate: float,
    eta: float,
    t0: int,
    t: int,
) -> float:
    """Decayed cumulative resource gain between cycles t0 and t."""
    if history is None or not history.records:
        return 0.0
    basis = history.decayed_basis(t0, t, eta, alpha_rate)
    return float(np.dot(np.asarray(theta, dtype=float), basis))


def intensity(
    model: ZicpModel, log_gdp: float, athlete_count: float, gain: float
) -> float:
    """Static power factor times the dynamic gain factor (1 + gamma*gain)."""
    b0, b1, b2 = model.beta
    static = math.exp(b0 + b1 * log_gdp + b2 * athlete_count)
    dynamic = 1.0 + model.gamma * gain
    lam = static * dynamic
    if lam <= 0:
        raise DomainError(
            f"intensity must be positive; gain={gain} drives the dynamic factor to {dynamic}"
        )
    return lam


def _resource_basis(
    rows: Sequence[ZicpRow],
    histories: Mapping[str, ResourceHistory] | None,
    eta: float,
    alpha_rate: float,
) -> np.ndarray:
    basis = np.zeros((len(rows), 3))
    if histories:
        first_cycle = {
            noc: min(r.cycle for r in h.records)
            for noc, h in histories.items()
            if h.records
        }
        for i, row in enumerate(rows):
            h = histories.get(row.noc)
            if h is not None and h.records:
                t0 = min(first_cycle[row.noc], row.cycle)
                basis[i] = h.decayed_basis(t0, row.cycle, eta, alpha_rate)
    return basis


def fit(
    rows: Sequence[ZicpRow],
    histories: Mapping[str, ResourceHistory] | None = None,
    *,
    rho1: float = DEFAULT_RHO1,
    rho2: float = DEFAULT_RHO2,
    eta: float = DEFAULT_ETA,
    alpha_rate: float = DEFAULT_ALPHA_RATE,
    exposure_T: float = DEFAULT_EXPOSURE,
    tol: float = 1e-7,
    max_iter: int = 200,
) -> ZicpModel:
    """EM estimation of the gate and intensity parameters.

    The penalized observed-data log-likelihood is non-decreasing across
    iterations (both M-steps are warm-started from the current parameters);
    a decrease beyond float noise raises.  Stops when the improvement drops
    below ``tol``.
    """
    rows = list(rows)
    nocs = {r.noc for r in rows}
    cycles = {r.cycle for r in rows}
    if len(nocs) < 10 or len(cycles) < 3:
        raise DomainError(
            f"fit needs >= 10 countries over >= 3 cycles (got {len(nocs)}, {len(cycles)})"
        )
    y = np.array([r.medals for r in rows], dtype=float)
    if np.all(y == 0):
        raise DomainError("degenerate panel: every outcome is zero")

    n = len(rows)
    S = np.column_stack(
        [np.ones(n), [r.s1 for r in rows], [r.s2 for r in rows]]
    )
    X_static = np.column_stack(
        [np.ones(n), [r.log_gdp for r in rows], [r.athlete_count for r in rows]]
    )
    A = _resource_basis(rows, histories, eta, alpha_rate)
    Xp = np.column_stack([X_static, A])
    gain_active = bool(np.any(A != 0.0))
    offset = np.full(n, math.log(exposure_T))

    # --- deterministic initialization -------------------------------------
    pos = y > 0
    beta_fit = elastic_net_poisson(
        X_static[pos], y[pos], rho1, rho2, offset=offset[pos]
    )
    coef = np.concatenate([beta_fit.coefficients, np.zeros(3)])

    zero_country = {
        noc: all(r.medals == 0 for r in rows if r.noc == noc) for noc in nocs
    }
    z0 = np.array([1.0 if zero_country[r.noc] else 0.0 for r in rows])
    if z0.max() > z0.min():
        alpha = logit_mle(S, z0).coefficients
    else:
        # Degenerate indicator (no fully-zero country): start the gate from
        # the classic excess-zeros moment estimate.
        mu0 = np.exp(np.clip(X_static @ beta_fit.coefficients + offset, -50, 50))
        random_zero_share = float(np.mean(np.exp(-mu0)))
        excess = (float(np.mean(y == 0)) - random_zero_share) / max(
            1.0 - random_zero_share, _CLIP
        )
        share = min(max(excess, 0.02), 1 - _CLIP)
        alpha = np.array([math.log(share / (1 - share)), 0.0, 0.0])

    def penalized_loglik(alpha_v, coef_v):
        pi = np.clip(expit(S @ alpha_v), _CLIP, 1 - _CLIP)
        mu = np.exp(np.clip(Xp @ coef_v + offset, -50, 50))
        ll = np.where(
            y == 0,
            np.log(pi + (1 - pi) * np.exp(-mu)),
            np.log1p(-pi) + y * np.log(mu) - mu - gammaln(y + 1),
        ).sum()
        pen_coef = coef_v[1:]  # intercept unpenalized
        return float(ll - rho1 * np.abs(pen_coef).sum() - rho2 * (pen_coef**2).sum())

    trace = [penalized_loglik(alpha, coef)]
    for _ in range(max_iter):
        # E-step: posterior probability each zero is structural.
        pi = np.clip(expit(S @ alpha), _CLIP, 1 - _CLIP)
        mu = np.exp(np.clip(Xp @ coef + offset, -50, 50))
        p0 = np.exp(-mu)
        z = np.where(y == 0, pi / (pi + (1 - pi) * p0), 0.0)
        z = np.clip(z, 0.0, 1.0)

        # M-step 1: logistic gate on responsibilities (warm start).
        if z.max() - z.min() > 1e-12:
            alpha = logit_mle(S, z, beta0=alpha).coefficients
        # M-step 2: penalized Poisson on the non-structural mass.
        w = 1.0 - z
        active_cols = Xp if gain_active else X_static
        m_fit = elastic_net_poisson(
            active_cols,
            y.astype(int),
            rho1,
            rho2,
            sample_weight=w,
            offset=offset,
            beta0=coef[: active_cols.shape[1]],
        )
        if gain_active:
            coef = m_fit.coefficients
        else:
            coef = np.concatenate([m_fit.coefficients, np.zeros(3)])

        trace.append(penalized_loglik(alpha, coef))
        if trace[-1] < trace[-2] - 1e-6 * max(1.0, abs(trace[-2])):
            raise NonConvergenceError(
                "EM objective decreased", trace=tuple(trace)
            )
        if trace[-1] - trace[-2] < tol * max(1.0, abs(trace[-2])):
            return ZicpModel(
                alpha=tuple(alpha),
                beta=tuple(coef[:3]),
                gamma=1.0,
                theta=tuple(coef[3:6]),
                eta=eta,
                alpha_rate=alpha_rate,
                exposure_T=exposure_T,
                fitted=True,
                em_trace=tuple(trace),
            )
    raise NonConvergenceError(
        f"EM did not converge within {max_iter} iterations", trace=tuple(trace)
    )


def decay_covariate(x: float, nu: float, dt: float) -> float:
    """Exponential half-life weighting of a covariate effect."""
    if nu < 0 or dt < 0:
        raise DomainError("nu and dt must be non-negative")
    return x * math.exp(-nu * dt)


def predict_first_medal(
    model: ZicpModel,
    rows: Sequence[ZicpRow],
    histories: Mapping[str, ResourceHistory] | None = None,
) -> list[tuple[str, float]]:
    """Breakthrough probability per zero-medal country, sorted descending.

    P(first medal) = (1 - pi) * (1 - exp(-lam * T)).  Ties break on the NOC
    code; the result does not depend on the input ordering.
    """
    if not model.fitted:
        raise StateError("predict_first_medal requires a fitted model")
    out = []
    for row in rows:
        pi = structural_zero_prob(row.s1, row.s2, model.alpha)
        history = histories.get(row.noc) if histories else None
        if history is not None and history.records:
            t0 = min(r.cycle for r in history.records)
            gain = dynamic_gain(
                history, model.theta, model.alpha_rate, model.eta, t0, row.cycle
            )
        else:
            gain = 0.0
        lam = intensity(model, row.log_gdp, row.athlete_count, gain)
        prob = (1.0 - pi) * (1.0 - math.exp(-lam * model.exposure_T))
        out.append((row.noc, float(prob)))
    return sorted(out, key=lambda kv: (-kv[1], kv[0]))


# ---------------------------------------------------------------------------
# Bayesian online change detection


@dataclass(frozen=True)
class BocpdState:
    """Run-length posterior plus Gamma sufficient statistics per run length."""

    run_length_posterior: np.ndarray
    shape: np.ndarray
    rate: np.ndarray
    hazard: float = DEFAULT_HAZARD
    prior_shape: float = 1.0
    prior_rate: float = 1.0
    t: int = 0

    def __post_init__(self):
        p = np.asarray(self.run_length_posterior, dtype=float)
        if abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
            raise DomainError("run-length posterior must be a distribution")
        if not 0.0 < self.hazard < 1.0:
            raise DomainError("hazard must lie in (0, 1)")
        if len(self.shape) != len(p) or len(self.rate) != len(p):
            raise DomainError("sufficient statistics must match posterior length")


def bocpd_init(
    hazard: float = DEFAULT_HAZARD,
    prior_shape: float = 1.0,
    prior_rate: float = 1.0,
) -> BocpdState:
    """Fresh state: all mass at run length zero."""
    return BocpdState(
        run_length_posterior=np.array([1.0]),
        shape=np.array([prior_shape]),
        rate=np.array([prior_rate]),
        hazard=hazard,
        prior_shape=prior_shape,
        prior_rate=prior_rate,
        t=0,
    )


def bocpd_step(state: BocpdState, observation: int) -> tuple[BocpdState, float]:
    """One run-length recursion step; returns the new state and P(change now).

    The predictive under the Gamma(shape, rate) posterior is negative
    binomial.  Probability of a change is the posterior mass at run length
    zero after the update.
    """
    if observation < 0:
        raise DomainError("observation must be a non-negative count")
    x = float(observation)
    a = state.shape
    b = state.rate

    def log_nb(shape, rate):
        return (
            gammaln(x + shape)
            - gammaln(shape)
            - gammaln(x + 1.0)
            + shape * np.log(rate / (rate + 1.0))
            + x * np.log(1.0 / (rate + 1.0))
        )

    log_pred = log_nb(a, b)
    # A change means x starts a fresh segment: its predictive is the prior's.
    log_pred_prior = float(log_nb(state.prior_shape, state.prior_rate))
    with np.errstate(divide="ignore"):
        log_post = np.log(np.clip(state.run_length_posterior, 1e-300, None))
    log_growth = log_post + log_pred + math.log1p(-state.hazard)
    log_change = logsumexp(log_post) + log_pred_prior + math.log(state.hazard)
    log_new = np.concatenate([[log_change], log_growth])
    log_new -= logsumexp(log_new)
    posterior = np.exp(log_new)
    posterior /= posterior.sum()

    new_state = BocpdState(
        run_length_posterior=posterior,
        shape=np.concatenate([[state.prior_shape], a + x]),
        rate=np.concatenate([[state.prior_rate], b + 1.0]),
        hazard=state.hazard,
        prior_shape=state.prior_shape,
        prior_rate=state.prior_rate,
        t=state.t + 1,
    )
    return new_state, float(posterior[0])
