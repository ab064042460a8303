"""Host/program weighting and investment decision tools.

Covers the per-event country weighting, the host program-change simulator
(medal pools redistributed by affinity-weighted shares, conserving the
total pool exactly), the model-applicability discriminant, budget
allocation across sports under a CES-style objective, and the GDP level at
which the medal growth rate peaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, NonConvergenceError

DEFAULT_EVENT_WEIGHT_COEFFS = (0.5, 0.3, 0.2)
APPLICABILITY_COEFFS = (0.71, 0.29, 0.15)
APPLICABILITY_THRESHOLD = 0.53
DEFAULT_SUBSTITUTION_RHO = 0.68


@dataclass(frozen=True)
class EventWeightInputs:
    """Per (country, event) drivers of the interaction weight."""

    hist_perf: float
    invest: float
    coach_flow: float
    coefficients: tuple[float, float, float] = DEFAULT_EVENT_WEIGHT_COEFFS

    def __post_init__(self):
        values = (self.hist_perf, self.invest, self.coach_flow, *self.coefficients)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("event weight inputs must be finite")


def event_weight(inputs: EventWeightInputs) -> float:
    """alpha*HistPerf + beta*Invest + gamma*CoachFlow."""
    a, b, g = inputs.coefficients
    return a * inputs.hist_perf + b * inputs.invest + g * inputs.coach_flow


@dataclass(frozen=True)
class HostImpactResult:
    deltas: Mapping[str, float]
    pool_change: float
    total_pct_gain: float


def host_impact_sim(
    baseline: Mapping[str, float],
    changes: Sequence[tuple[str, str]],
    affinities: Mapping[tuple[str, str], float],
    event_pools: Mapping[str, float],
    weights: Mapping[tuple[str, str], float] | None = None,
) -> HostImpactResult:
    """Simulate adding/removing events from the program.

    Each changed event's medal pool is distributed across countries
    proportionally to affinity x weight (weight defaults to 1); removals
    are the mirror image.  The summed country deltas equal the net pool
    change exactly.
    """
    for (c, e), a in affinities.items():
        if not 0.0 <= a <= 1.0:
            raise DomainError(f"affinity for ({c}, {e}) outside [0, 1]")
    deltas = {c: 0.0 for c in baseline}
    pool_change = 0.0
    for event, action in changes:
        if action not in ("added", "removed"):
            raise DomainError(f"unknown program action {action!r}")
        if event not in event_pools:
            raise DomainError(f"event {event!r} has no medal pool defined")
        pool = float(event_pools[event])
        if pool < 0:
            raise DomainError(f"event {event!r} pool must be non-negative")
        mass = {
            c: affinities.get((c, event), 0.0)
            * (1.0 if weights is None else weights.get((c, event), 0.0))
            for c in baseline
        }
        total_mass = sum(mass.values())
        if total_mass <= 0:
            raise DomainError(f"no country is eligible for event {event!r}")
        sign = 1.0 if action == "added" else -1.0
        pool_change += sign * pool
        for c in deltas:
            deltas[c] += sign * pool * mass[c] / total_mass
    base_total = sum(baseline.values())
    pct = 100.0 * pool_change / base_total if base_total > 0 else 0.0
    return HostImpactResult(
        deltas=deltas, pool_change=pool_change, total_pct_gain=pct
    )


def applicability(
    gdp: float,
    openness: float,
    instability: float,
    *,
    coefficients: tuple[float, float, float] = APPLICABILITY_COEFFS,
    threshold: float = APPLICABILITY_THRESHOLD,
) -> tuple[float, bool]:
    """Discriminant for model validity; inputs must be z-scored upstream.

    f = c1*gdp + c2*openness - c3*instability; applicable strictly above
    the threshold.
    """
    for name, v in (("gdp", gdp), ("openness", openness), ("instability", instability)):
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite")
    c1, c2, c3 = coefficients
    f = c1 * gdp + c2 * openness - c3 * instability
    return f, f > threshold


@dataclass(frozen=True)
class AllocationProblem:
    """Budget split across sports into economic (x) and institutional (y)
    channels under sum w_i (a_i x_i^rho + b_i y_i^(1-rho))."""

    weights: tuple[float, ...]
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    budget: float
    rho: float = DEFAULT_SUBSTITUTION_RHO
    sports: tuple[str, ...] | None = None

    def __post_init__(self):
        n = len(self.weights)
        if n == 0:
            raise DomainError("problem needs at least one sport")
        if not (len(self.alphas) == len(self.betas) == n):
            raise DomainError("weights, alphas, betas must have equal length")
        if self.sports is not None and len(self.sports) != n:
            raise DomainError("sports labels must match problem size")
        if self.budget <= 0:
            raise DomainError("budget must be positive")
        if not 0.0 < self.rho < 1.0:
            raise DomainError("rho must lie in (0, 1)")
        if any(w < 0 for w in self.weights):
            raise DomainError("weights must be non-negative")
        if any(a <= 0 for a in self.alphas) or any(b <= 0 for b in self.betas):
            raise DomainError("elasticity coefficients must be positive")

    @property
    def n(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class AllocationResult:
    x: np.ndarray
    y: np.ndarray
    objective: float
    ratio: float  # aggregate economic : institutional spending
    kkt_residual: float
    n_iter: int


def _project_simplex(z: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {z >= 0, sum z = budget}."""
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - budget
    ks = np.arange(1, len(z) + 1)
    valid = u - css / ks > 0
    k = int(ks[valid][-1])
    tau = css[k - 1] / k
    return np.maximum(z - tau, 0.0)


def optimize_allocation(
    problem: AllocationProblem,
    *,
    max_iter: int = 50000,
    kkt_tol: float = 1e-6,
) -> AllocationResult:
    """Projected gradient ascent on the budget simplex.

    The objective is strictly increasing in every variable, so the optimum
    exhausts the budget and the KKT condition is a common gradient value
    across all funded channels.  Accepted steps never decrease the
    objective; the returned point's stationarity residual is below
    ``kkt_tol`` (relative to the gradient scale) or the routine raises with
    its last iterate attached.
    """
    n = problem.n
    w = np.asarray(problem.weights)
    a = np.asarray(problem.alphas)
    b = np.asarray(problem.betas)
    rho = problem.rho
    B = problem.budget
    floor = 1e-12 * B

    def objective(z: np.ndarray) -> float:
        x, y = z[:n], z[n:]
        return float(np.sum(w * (a * x**rho + b * y ** (1.0 - rho))))

    def gradient(z: np.ndarray) -> np.ndarray:
        x = np.maximum(z[:n], floor)
        y = np.maximum(z[n:], floor)
        gx = w * a * rho * x ** (rho - 1.0)
        gy = w * b * (1.0 - rho) * y ** (-rho)
        return np.concatenate([gx, gy])

    z = np.full(2 * n, B / (2 * n))
    f = objective(z)
    step = B / (np.max(np.abs(gradient(z))) + 1.0)
    residual = math.inf
    for it in range(1, max_iter + 1):
        g = gradient(z)
        accepted = False
        while step > 1e-16 * B:
            cand = _project_simplex(z + step * g, B)
            fc = objective(cand)
            if fc >= f - 1e-15 * max(1.0, abs(f)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        z, f = cand, fc
        step = min(step * 1.3, 10.0 * B)

        active = z > 1e-9 * B
        g = gradient(z)
        nu = float(np.mean(g[active]))
        residual = float(np.max(np.abs(g[active] - nu))) / max(1.0, abs(nu))
        if residual <= kkt_tol:
            x, y = z[:n], z[n:]
            total_y = float(np.sum(y))
            return AllocationResult(
                x=x,
                y=y,
                objective=f,
                ratio=float(np.sum(x)) / total_y if total_y > 0 else math.inf,
                kkt_residual=residual,
                n_iter=it,
            )
    raise NonConvergenceError(
        f"allocation failed to reach KKT residual {kkt_tol} in {max_iter} iterations",
        last_iterate=z,
        residual=residual,
        objective=f,
    )


def gdp_peak(theta1: float, theta2: float) -> float:
    """GDP level where the medal growth rate tops out: theta1 / (2*theta2)."""
    if theta2 <= 0:
        raise DomainError("theta2 must be positive for an interior maximum")
    return theta1 / (2.0 * theta2)
