"""Triple validation: backtesting, policy-shock simulation, causal checks.

Backtesting uses windowed symmetric percentage errors and segmented-OLS
structural break detection.  Shock robustness integrates a logarithmic
GDP-response ODE and stress-tests a predictor under GDP perturbations.
Causal validation decomposes hosting effects into direct and mediated
channels, traces their event-time dynamics, models effect heterogeneity,
and cross-checks the treatment effect with three estimators (inverse
probability weighting, propensity matching, cross-fitted partialling out).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import expit

from .errors import DomainError
from .regress import DesignMatrix, ols, logit_mle
from .weights import PanelRecord

DEFAULT_SHOCK_ALPHA = 0.82
DEFAULT_SHOCK_BETA = 0.15
DEFAULT_SHOCK_GAMMA = 0.07
STABLE_FLUCTUATION_PCT = 8.0
UNRELIABLE_SMAPE_PCT = 40.0


# ---------------------------------------------------------------------------
# Backtesting


@dataclass(frozen=True)
class BacktestSeries:
    """Observed and predicted values on strictly increasing years."""

    years: tuple[int, ...]
    observed: tuple[float, ...]
    predicted: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.years) == len(self.observed) == len(self.predicted)):
            raise DomainError("series fields must have equal length")
        if any(b <= a for a, b in zip(self.years, self.years[1:])):
            raise DomainError("years must be strictly increasing")
        if any(v < 0 for v in self.observed) or any(v < 0 for v in self.predicted):
            raise DomainError("observed and predicted values must be non-negative")


def smape_points(observed: Sequence[float], predicted: Sequence[float]) -> float:
    """(100/n) * sum 2|y - yhat| / (|y| + |yhat|); range [0, 200]."""
    obs = np.asarray(observed, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    if obs.shape != pred.shape or obs.size == 0:
        raise DomainError("need matching non-empty observation/prediction vectors")
    denom = np.abs(obs) + np.abs(pred)
    both_zero = denom == 0
    if np.any(both_zero):
        raise DomainError(f"0/0 SMAPE point at index {int(np.argmax(both_zero))}")
    return float(100.0 * np.mean(2.0 * np.abs(obs - pred) / denom))


def smape_window(series: BacktestSeries, t: int, h: int) -> float:
    """SMAPE over the window [t-h, t+h]; names the year of any 0/0 point."""
    sel = [
        (y, o, p)
        for y, o, p in zip(series.years, series.observed, series.predicted)
        if t - h <= y <= t + h
    ]
    if not sel:
        raise DomainError(f"window [{t - h}, {t + h}] contains no points")
    for y, o, p in sel:
        if o == 0 and p == 0:
            raise DomainError(f"SMAPE undefined at year {y}: observed = predicted = 0")
    return smape_points([o for _, o, _ in sel], [p for _, _, p in sel])


def smape_by_era(
    series: BacktestSeries, eras: Sequence[tuple[str, int, int]]
) -> list[tuple[str, float]]:
    """Average SMAPE per labelled (start, end) period, inclusive."""
    out = []
    for label, y0, y1 in eras:
        sel = [
            (o, p)
            for y, o, p in zip(series.years, series.observed, series.predicted)
            if y0 <= y <= y1
        ]
        if not sel:
            raise DomainError(f"era {label!r} [{y0}, {y1}] contains no points")
        out.append((label, smape_points([o for o, _ in sel], [p for _, p in sel])))
    return out


# ---------------------------------------------------------------------------
# Structural breaks


@dataclass(frozen=True)
class Segment:
    start_index: int
    end_index: int  # inclusive
    intercept: float
    slope: float
    slope_se: float
    ssr: float


@dataclass(frozen=True)
class BreakResult:
    n_breaks: int
    break_indices: tuple[int, ...]  # first index of each new segment
    break_x: tuple[float, ...]
    segments: tuple[Segment, ...]
    sup_f: tuple[float, ...]
    ssr: float
    bic: float
    ssr_by_count: tuple[float, ...]


def _segment_cost_table(x: np.ndarray, y: np.ndarray, min_segment: int) -> np.ndarray:
    """SSR of a straight-line fit on every admissible [i, j] span, O(n^2)."""
    n = len(x)
    cost = np.full((n, n), np.inf)
    for i in range(n):
        sx = sy = sxx = sxy = syy = 0.0
        for j in range(i, n):
            sx += x[j]
            sy += y[j]
            sxx += x[j] * x[j]
            sxy += x[j] * y[j]
            syy += y[j] * y[j]
            m = j - i + 1
            if m < max(min_segment, 2):
                continue
            vxx = sxx - sx * sx / m
            vxy = sxy - sx * sy / m
            vyy = syy - sy * sy / m
            if vxx <= 0:
                continue
            cost[i, j] = max(vyy - vxy * vxy / vxx, 0.0)
    return cost


def _fit_segment(x, y, i, j) -> Segment:
    xs = x[i : j + 1]
    ys = y[i : j + 1]
    X = np.column_stack([np.ones(len(xs)), xs])
    fit = ols(X, ys)
    return Segment(
        start_index=i,
        end_index=j,
        intercept=float(fit.coefficients[0]),
        slope=float(fit.coefficients[1]),
        slope_se=float(fit.standard_errors[1]),
        ssr=float(fit.objective),
    )


def detect_breaks(
    x: Sequence[float],
    y: Sequence[float],
    max_breaks: int,
    min_segment: int = 5,
) -> BreakResult:
    """Dynamic-programming segmented regression with BIC model selection.

    Minimizes the summed per-segment straight-line SSR for every candidate
    break count up to ``max_breaks`` and keeps the count with the lowest
    BIC.  Each reported break carries a Chow-style F statistic comparing the
    merged adjacent segments against the split.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DomainError("x and y must have equal length")
    n = len(x)
    if max_breaks < 0 or min_segment < 2:
        raise DomainError("max_breaks must be >= 0 and min_segment >= 2")
    if n < (max_breaks + 1) * min_segment:
        raise DomainError(
            f"series of length {n} too short for {max_breaks} breaks with "
            f"min_segment={min_segment}"
        )

    cost = _segment_cost_table(x, y, min_segment)
    # dp[k][j]: best SSR for points [0..j] split into k+1 segments.
    dp = np.full((max_breaks + 1, n), np.inf)
    arg = np.full((max_breaks + 1, n), -1, dtype=int)
    dp[0] = cost[0]
    for k in range(1, max_breaks + 1):
        for j in range(n):
            best = np.inf
            best_i = -1
            for i in range(k * min_segment, j - min_segment + 2):
                c = dp[k - 1][i - 1] + cost[i][j]
                if c < best:
                    best = c
                    best_i = i
            dp[k][j] = best
            arg[k][j] = best_i

    ssr_by_count = []
    candidates = []
    for k in range(max_breaks + 1):
        ssr_k = dp[k][n - 1]
        if not np.isfinite(ssr_k):
            break
        # Parameters: 2 per segment plus one per break location.
        p_k = 2 * (k + 1) + k
        bic_k = n * math.log(max(ssr_k, 1e-300) / n) + p_k * math.log(n)
        ssr_by_count.append(float(ssr_k))
        candidates.append((bic_k, k))
    best_bic, best_k = min(candidates)

    # Reconstruct the chosen segmentation.
    bounds = []
    j = n - 1
    for k in range(best_k, 0, -1):
        i = arg[k][j]
        bounds.append(i)
        j = i - 1
    bounds = sorted(bounds)
    starts = [0, *bounds]
    ends = [*(b - 1 for b in bounds), n - 1]
    segments = tuple(_fit_segment(x, y, i, j) for i, j in zip(starts, ends))

    sup_f = []
    for b_idx in range(len(bounds)):
        i = starts[b_idx]
        j = ends[b_idx + 1]
        merged = _fit_segment(x, y, i, j)
        split_ssr = segments[b_idx].ssr + segments[b_idx + 1].ssr
        m = j - i + 1
        dof = max(m - 4, 1)
        f = ((merged.ssr - split_ssr) / 2.0) / max(split_ssr / dof, 1e-300)
        sup_f.append(float(f))

    return BreakResult(
        n_breaks=best_k,
        break_indices=tuple(bounds),
        break_x=tuple(float(x[b]) for b in bounds),
        segments=segments,
        sup_f=tuple(sup_f),
        ssr=float(dp[best_k][n - 1]),
        bic=float(best_bic),
        ssr_by_count=tuple(ssr_by_count),
    )


# ---------------------------------------------------------------------------
# Error decomposition


@dataclass(frozen=True)
class ErrorShares:
    shares: Mapping[str, float]
    residual: float

    @property
    def total(self) -> float:
        return float(sum(self.shares.values()) + self.residual)


def error_decompose(
    total_errors: Sequence[float], factor_series: Mapping[str, Sequence[float]]
) -> ErrorShares:
    """Variance shares of each factor in the prediction errors.

    Regresses errors on the factors; the share of factor k is
    beta_k * Cov(x_k, e) / Var(e), which sums with the residual share
    1 - R^2 to exactly one.
    """
    e = np.asarray(total_errors, dtype=float)
    if e.size < 3:
        raise DomainError("need at least 3 error observations")
    names = sorted(factor_series)
    if not names:
        raise DomainError("need at least one factor series")
    cols = []
    for nm in names:
        s = np.asarray(factor_series[nm], dtype=float)
        if s.shape != e.shape:
            raise DomainError(f"factor {nm!r} length mismatch")
        cols.append(s)
    X = DesignMatrix(
        values=np.column_stack([np.ones(e.size), *cols]),
        column_names=("const", *names),
    )
    fit = ols(X, e)
    var_e = float(np.var(e))
    if var_e == 0:
        raise DomainError("errors have zero variance; nothing to decompose")
    shares = {}
    for j, nm in enumerate(names, start=1):
        cov = float(np.mean((cols[j - 1] - cols[j - 1].mean()) * (e - e.mean())))
        shares[nm] = float(fit.coefficients[j] * cov / var_e)
    residual = 1.0 - sum(shares.values())
    return ErrorShares(shares=shares, residual=float(residual))


# ---------------------------------------------------------------------------
# Policy shock dynamics


@dataclass(frozen=True)
class ShockParams:
    """Parameters of dM/dt = alpha*ln(1 + dgdp/gdp0) - beta*exp(-gamma*t)."""

    dgdp: float
    gdp0: float
    alpha: float = DEFAULT_SHOCK_ALPHA
    beta: float = DEFAULT_SHOCK_BETA
    gamma: float = DEFAULT_SHOCK_GAMMA

    def __post_init__(self):
        if self.gamma <= 0:
            raise DomainError("gamma must be positive")
        if self.gdp0 <= 0:
            raise DomainError("gdp0 must be positive")
        if 1.0 + self.dgdp / self.gdp0 <= 0:
            raise DomainError("1 + dgdp/gdp0 must be positive")

    @property
    def log_gain(self) -> float:
        return self.alpha * math.log1p(self.dgdp / self.gdp0)


def policy_shock_path(
    p: ShockParams, m0: float, horizon: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Classic fourth-order Runge-Kutta trajectory of the medal level."""
    if dt <= 0 or horizon < dt:
        raise DomainError("need dt > 0 and horizon >= dt")
    n_steps = int(round(horizon / dt))

    def f(t: float) -> float:
        return p.log_gain - p.beta * math.exp(-p.gamma * t)

    times = np.empty(n_steps + 1)
    values = np.empty(n_steps + 1)
    times[0] = 0.0
    values[0] = m0
    m = m0
    for i in range(n_steps):
        t = i * dt
        k1 = f(t)
        k2 = f(t + dt / 2.0)
        k3 = f(t + dt / 2.0)
        k4 = f(t + dt)
        m += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        times[i + 1] = t + dt
        values[i + 1] = m
    return times, values


# ---------------------------------------------------------------------------
# Scenario stress testing


@dataclass(frozen=True)
class ScenarioReport:
    shock_pct: float
    max_fluctuation_pct: float
    smape: float
    classification: str  # stable | degraded | unreliable


def scenario_suite(
    predict_fn: Callable[[Sequence[PanelRecord]], np.ndarray],
    panel: Sequence[PanelRecord],
    shock_pcts: Sequence[float] = (5, -5, 15, -15, 30, -30),
) -> list[ScenarioReport]:
    """Perturb GDP by each percentage and grade prediction robustness.

    Classification: SMAPE above 40 is unreliable; otherwise fluctuations
    below 8 percent are stable and anything else is degraded.
    """
    panel = list(panel)
    observed = np.array([r.total for r in panel], dtype=float)
    baseline = np.asarray(predict_fn(panel), dtype=float)
    if baseline.shape != observed.shape:
        raise DomainError("predictor must return one value per panel record")
    reports = []
    for pct in shock_pcts:
        shocked_panel = [
            PanelRecord(
                noc=r.noc, year=r.year, gold=r.gold, silver=r.silver,
                bronze=r.bronze, total=r.total,
                gdp=None if r.gdp is None else r.gdp * (1.0 + pct / 100.0),
                population=r.population, athlete_count=r.athlete_count,
                is_host=r.is_host,
            )
            for r in panel
        ]
        shocked = np.asarray(predict_fn(shocked_panel), dtype=float)
        denom = np.maximum(np.abs(baseline), 1e-12)
        fluct = float(np.max(np.abs(shocked - baseline) / denom)) * 100.0
        smape = smape_points(observed, shocked)
        if smape > UNRELIABLE_SMAPE_PCT:
            cls = "unreliable"
        elif fluct < STABLE_FLUCTUATION_PCT:
            cls = "stable"
        else:
            cls = "degraded"
        reports.append(
            ScenarioReport(
                shock_pct=float(pct),
                max_fluctuation_pct=fluct,
                smape=smape,
                classification=cls,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# Sensitivity matrix


@dataclass(frozen=True)
class SensitivityReport:
    """Ragged named rows: economic effects per medal color, institutional
    effects on the total."""

    economic: np.ndarray          # length 3: gold, silver, bronze
    economic_se: np.ndarray
    institutional: np.ndarray     # one entry per institutional factor
    institutional_se: np.ndarray
    factor_names: tuple[str, ...]


def sensitivity_matrix(
    predict3_fn: Callable[[np.ndarray], np.ndarray],
    X: np.ndarray,
    feature_names: Sequence[str],
    economic_factor: str,
    institutional_factors: Sequence[str],
    *,
    eps: float = 1e-4,
    n_boot: int = 200,
    seed: int = 0,
) -> SensitivityReport:
    """Central finite-difference marginal effects with bootstrap SEs.

    ``predict3_fn`` maps an (n, p) feature matrix to (n, 3) medal-color
    predictions.  The economic factor's effects are reported per color; each
    institutional factor's effect is on the predicted total.
    """
    X = np.asarray(X, dtype=float)
    names = list(feature_names)
    if X.ndim != 2 or X.shape[1] != len(names):
        raise DomainError("X must be (n, p) matching feature_names")

    def column_effect(col: str) -> np.ndarray:
        j = names.index(col)
        step = eps * max(1.0, float(np.std(X[:, j])))
        hi = X.copy()
        lo = X.copy()
        hi[:, j] += step
        lo[:, j] -= step
        return (predict3_fn(hi) - predict3_fn(lo)) / (2.0 * step)  # (n, 3)

    eco = column_effect(economic_factor)
    inst = [column_effect(f).sum(axis=1) for f in institutional_factors]

    rng_groups = [np.random.default_rng([seed, b]) for b in range(n_boot)]
    n = X.shape[0]
    eco_means = np.empty((n_boot, 3))
    inst_means = np.empty((n_boot, len(inst)))
    for b, rng in enumerate(rng_groups):
        idx = rng.integers(0, n, size=n)
        eco_means[b] = eco[idx].mean(axis=0)
        for k, effect in enumerate(inst):
            inst_means[b, k] = effect[idx].mean()

    def safe_std(a: np.ndarray, axis=0) -> np.ndarray:
        spread = np.ptp(a, axis=axis)
        sd = a.std(axis=axis, ddof=1)
        return np.where(spread == 0, 0.0, sd)

    return SensitivityReport(
        economic=eco.mean(axis=0),
        economic_se=safe_std(eco_means),
        institutional=np.array([e.mean() for e in inst]),
        institutional_se=safe_std(inst_means),
        factor_names=(economic_factor, *institutional_factors),
    )


# ---------------------------------------------------------------------------
# Treatment decomposition (mediation)


@dataclass(frozen=True)
class MediatorPath:
    to_mediator: float
    to_outcome: float
    indirect: float
    sobel_z: float
    sobel_p: float


@dataclass(frozen=True)
class TreatmentDecomposition:
    direct: float
    indirect: float
    mediator_paths: Mapping[str, MediatorPath]
    uncertainty: float

    @property
    def total(self) -> float:
        # Additive by construction.
        return self.direct + self.indirect


def treatment_decompose(
    treat: Sequence[float],
    outcome: Sequence[float],
    mediators: Mapping[str, Sequence[float]],
) -> TreatmentDecomposition:
    """Product-of-coefficients mediation with Sobel tests per path.

    Total effect comes from regressing the outcome on treatment alone; each
    indirect path multiplies treatment->mediator by mediator->outcome (the
    latter from the joint outcome regression); the direct effect is the
    remainder, so direct + indirect = total exactly.
    """
    t = np.asarray(treat, dtype=float)
    y = np.asarray(outcome, dtype=float)
    if t.shape != y.shape:
        raise DomainError("treat and outcome must have equal length")
    if not mediators:
        raise DomainError("at least one mediator column is required")
    names = sorted(mediators)
    M = []
    for nm in names:
        col = np.asarray(mediators[nm], dtype=float)
        if col.shape != t.shape:
            raise DomainError(f"mediator {nm!r} length mismatch")
        M.append(col)

    total_fit = ols(np.column_stack([np.ones(t.size), t]), y)
    total = float(total_fit.coefficients[1])
    total_se = float(total_fit.standard_errors[1])

    joint = ols(
        DesignMatrix(
            values=np.column_stack([np.ones(t.size), t, *M]),
            column_names=("const", "treat", *names),
        ),
        y,
    )
    paths = {}
    indirect_sum = 0.0
    for k, nm in enumerate(names):
        a_fit = ols(np.column_stack([np.ones(t.size), t]), M[k])
        a = float(a_fit.coefficients[1])
        sa = float(a_fit.standard_errors[1])
        b = float(joint.coefficients[2 + k])
        sb = float(joint.standard_errors[2 + k])
        denom = math.sqrt(a * a * sb * sb + b * b * sa * sa)
        z = a * b / denom if denom > 0 else 0.0
        p = 2.0 * stats.norm.sf(abs(z))
        paths[nm] = MediatorPath(
            to_mediator=a, to_outcome=b, indirect=a * b, sobel_z=z, sobel_p=float(p)
        )
        indirect_sum += a * b
    return TreatmentDecomposition(
        direct=float(total - indirect_sum),
        indirect=float(indirect_sum),
        mediator_paths=paths,
        uncertainty=total_se,
    )


# ---------------------------------------------------------------------------
# Hosting event study


@dataclass(frozen=True)
class HostingResult:
    ks: tuple[int, ...]
    theta: np.ndarray
    se: np.ndarray
    phase_shares: Mapping[str, float]  # leading / current / subsequent


def hosting_event_study(
    panel: Sequence[PanelRecord], k_min: int = -3, k_max: int = 5
) -> HostingResult:
    """Event-time dynamics of the hosting effect with phase shares.

    Time is measured in Games editions (ordinal position of the year in the
    panel).  All event-time dummies are estimated against non-host
    observations; phase shares split sum |theta_k| into the leading
    (k < 0), current (k = 0) and subsequent (k > 0) phases.
    """
    panel = list(panel)
    years = sorted({r.year for r in panel})
    ordinal = {y: i for i, y in enumerate(years)}
    host_events = [(r.noc, r.year) for r in panel if r.is_host]
    if not host_events:
        raise DomainError("panel contains no host events")
    host_ord = {}
    for noc, year in host_events:
        host_ord.setdefault(noc, []).append(ordinal[year])

    ks = list(range(k_min, k_max + 1))
    support = set()
    k_of_row = []
    for r in panel:
        k_here = None
        if r.noc in host_ord:
            for h in host_ord[r.noc]:
                k = ordinal[r.year] - h
                if k_min <= k <= k_max:
                    k_here = k
                    support.add(k)
                    break
        k_of_row.append(k_here)
    missing = [k for k in ks if k not in support]
    if missing:
        raise DomainError(f"missing event-time support for k = {missing}")

    names = ["const", "host_country"] + [f"k={k}" for k in ks]
    X = np.zeros((len(panel), len(names)))
    y = np.empty(len(panel))
    clusters = np.empty(len(panel), dtype=object)
    for i, r in enumerate(panel):
        X[i, 0] = 1.0
        X[i, 1] = 1.0 if r.noc in host_ord else 0.0
        if k_of_row[i] is not None:
            X[i, 2 + ks.index(k_of_row[i])] = 1.0
        y[i] = r.total
        clusters[i] = r.noc
    fit = ols(DesignMatrix(values=X, column_names=tuple(names)), y,
              cluster_ids=clusters)

    theta = fit.coefficients[2:]
    se = fit.standard_errors[2:]
    weight = np.abs(theta)
    denom = float(weight.sum())
    if denom == 0:
        shares = {"leading": 0.0, "current": 0.0, "subsequent": 0.0}
    else:
        shares = {
            "leading": float(sum(w for k, w in zip(ks, weight) if k < 0) / denom),
            "current": float(sum(w for k, w in zip(ks, weight) if k == 0) / denom),
            "subsequent": float(sum(w for k, w in zip(ks, weight) if k > 0) / denom),
        }
        # Force the exact unit sum the construction promises.
        shares["subsequent"] = 1.0 - shares["leading"] - shares["current"]
    return HostingResult(ks=tuple(ks), theta=theta, se=se, phase_shares=shares)


# ---------------------------------------------------------------------------
# Moderation analysis


@dataclass(frozen=True)
class ModerationResult:
    terms: tuple[str, ...]
    coefficients: np.ndarray
    se: np.ndarray
    adj_r2: float
    vif: Mapping[str, float]
    shapiro_p: float


def moderation_fit(
    effects: Sequence[float],
    moderators: Mapping[str, Sequence[float]],
    *,
    vif_threshold: float = 10.0,
) -> ModerationResult:
    """Regress unit-level treatment effects on moderators with diagnostics.

    Reports adjusted R^2, variance inflation factors, and the Shapiro-Wilk
    residual-normality p-value.  Any VIF above the threshold raises, with
    the offending factors attached to the error.
    """
    e = np.asarray(effects, dtype=float)
    names = sorted(moderators)
    if len(names) < 3:
        raise DomainError("need at least 3 moderator columns")
    if e.size < 30:
        raise DomainError("need at least 30 observations")
    cols = []
    for nm in names:
        c = np.asarray(moderators[nm], dtype=float)
        if c.shape != e.shape:
            raise DomainError(f"moderator {nm!r} length mismatch")
        cols.append(c)

    vif = {}
    for j, nm in enumerate(names):
        others = [cols[k] for k in range(len(names)) if k != j]
        Xo = np.column_stack([np.ones(e.size), *others])
        target = cols[j]
        try:
            f = ols(Xo, target)
            resid = target - Xo @ f.coefficients
            ss_res = float(resid @ resid)
            ss_tot = float(np.sum((target - target.mean()) ** 2))
            r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        except DomainError:
            r2 = 1.0
        vif[nm] = float("inf") if r2 >= 1.0 - 1e-12 else 1.0 / (1.0 - r2)
    offenders = {k: v for k, v in vif.items() if v > vif_threshold}
    if offenders:
        err = DomainError(f"multicollinearity: VIF above {vif_threshold} for {sorted(offenders)}")
        err.vif = vif
        raise err

    X = DesignMatrix(
        values=np.column_stack([np.ones(e.size), *cols]),
        column_names=("const", *names),
    )
    fit = ols(X, e)
    resid = e - X.values @ fit.coefficients
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((e - e.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    n, p = e.size, len(names) + 1
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - p)
    shapiro_p = float(stats.shapiro(resid).pvalue)
    return ModerationResult(
        terms=X.column_names,
        coefficients=fit.coefficients,
        se=fit.standard_errors,
        adj_r2=float(adj_r2),
        vif=vif,
        shapiro_p=shapiro_p,
    )


# ---------------------------------------------------------------------------
# Triple-robust average treatment effects


@dataclass(frozen=True)
class AteResult:
    method: str
    ate: float
    se: float
    n_used: int


def _propensities(X: np.ndarray, treat: np.ndarray) -> np.ndarray:
    design = np.column_stack([np.ones(X.shape[0]), X])
    fit = logit_mle(design, treat)
    return expit(design @ fit.coefficients)


def robust_ate(
    X: Sequence[Sequence[float]],
    treat: Sequence[float],
    y: Sequence[float],
    method: str,
    *,
    seed: int = 0,
    trim: tuple[float, float] = (0.05, 0.95),
    folds: int = 5,
) -> AteResult:
    """Average treatment effect by IPW, nearest-neighbor matching, or
    cross-fitted partialling out.

    Units whose estimated propensity falls outside ``trim`` are dropped; if
    either arm empties out the overlap assumption has failed and a domain
    error is raised.  All three estimators are deterministic under ``seed``.
    """
    X = np.asarray(X, dtype=float)
    t = np.asarray(treat, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or t.shape != (X.shape[0],) or y.shape != t.shape:
        raise DomainError("X, treat, y shapes are inconsistent")
    if set(np.unique(t)) - {0.0, 1.0}:
        raise DomainError("treatment must be binary")

    e_all = _propensities(X, t)
    keep = (e_all >= trim[0]) & (e_all <= trim[1])
    if not np.any(keep & (t == 1)) or not np.any(keep & (t == 0)):
        raise DomainError("no propensity overlap after trimming")
    Xk, tk, yk, ek = X[keep], t[keep], y[keep], e_all[keep]
    n = len(yk)

    if method == "IPW":
        # Normalized (Hajek) weights so a constant outcome nets exactly zero.
        w1 = tk / ek
        w0 = (1.0 - tk) / (1.0 - ek)
        mu1 = float(np.sum(w1 * yk) / np.sum(w1))
        mu0 = float(np.sum(w0 * yk) / np.sum(w0))
        ate = mu1 - mu0
        psi = w1 * (yk - mu1) / np.mean(w1) - w0 * (yk - mu0) / np.mean(w0)
        se = float(psi.std(ddof=1) / math.sqrt(n))
        return AteResult(method="IPW", ate=ate, se=se, n_used=n)

    if method == "Matching":
        # 1-NN on the propensity with linear-regression bias correction.
        # Point estimate and SE use the influence representation
        #   tau_hat = mean[mu1(x) - mu0(x)] + mean[(2T-1)(1+K)(y - mu_T(x))]
        # where K counts how often a unit serves as a match; the (1+K)
        # factor keeps the SE honest under match reuse.
        mu_hat = np.empty((n, 2))
        for arm in (0, 1):
            sel = tk == arm
            design = np.column_stack([np.ones(int(sel.sum())), Xk[sel]])
            coefs = ols(design, yk[sel]).coefficients
            mu_hat[:, arm] = np.column_stack([np.ones(n), Xk]) @ coefs
        match_counts = np.zeros(n)
        for i in range(n):
            arm = int(tk[i])
            other = np.flatnonzero(tk == 1 - arm)
            j = other[np.argmin(np.abs(ek[other] - ek[i]))]
            match_counts[j] += 1.0
        reg_part = mu_hat[:, 1] - mu_hat[:, 0]
        resid = yk - mu_hat[np.arange(n), tk.astype(int)]
        adj = (2.0 * tk - 1.0) * (1.0 + match_counts) * resid
        ate = float(np.mean(reg_part + adj))
        psi = reg_part + adj - ate
        se = float(np.sqrt(np.sum(psi * psi)) / n)
        return AteResult(method="Matching", ate=ate, se=se, n_used=n)

    if method == "DML":
        rng = np.random.default_rng(seed)
        perm = rng.permutation(n)
        fold_of = np.empty(n, dtype=int)
        for f in range(folds):
            fold_of[perm[f::folds]] = f
        y_res = np.empty(n)
        t_res = np.empty(n)
        design = np.column_stack([np.ones(n), Xk])
        for f in range(folds):
            test = fold_of == f
            train = ~test
            by = ols(design[train], yk[train]).coefficients
            bt = ols(design[train], tk[train]).coefficients
            y_res[test] = yk[test] - design[test] @ by
            t_res[test] = tk[test] - design[test] @ bt
        denom = float(np.sum(t_res * t_res))
        if denom <= 0:
            raise DomainError("treatment residuals are degenerate")
        ate = float(np.sum(t_res * y_res) / denom)
        psi = t_res * (y_res - t_res * ate)
        se = float(
            math.sqrt(np.sum(psi * psi)) / denom
        )
        return AteResult(method="DML", ate=ate, se=se, n_used=n)

    raise DomainError(f"unknown method {method!r}; use IPW, Matching, or DML")
