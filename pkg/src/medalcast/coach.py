"""Coach effect estimation: triple differences, placebo, and dynamics.

The design interacts a treated-country flag, a post-hire flag, and a focal
sport indicator; the triple interaction coefficient isolates the marginal
coach contribution in the targeted sport.  Robustness comes from a label
permutation placebo and an event-study trace around the hire year.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DomainError
from .regress import DesignMatrix, FitResult, ols

DEFAULT_SYNERGY_WEIGHT = 0.7
DEFAULT_LEGACY_WEIGHT = 0.5

_DDD_TERMS = ("const", "treat", "post", "sport", "treat_post", "treat_post_sport")


@dataclass(frozen=True)
class CoachObservation:
    """One (country, sport, year) medal count with treatment flags."""

    noc: str
    sport: str
    year: int
    medals: float
    treat: bool
    post: bool


@dataclass(frozen=True)
class CoachPanel:
    """Panel for the triple-difference design.

    ``target_sport`` is the sport the hired coach works in; other sports act
    as within-country controls.  Needs at least two sports, two periods, and
    both treatment arms.
    """

    rows: tuple[CoachObservation, ...]
    target_sport: str

    def __post_init__(self):
        sports = {r.sport for r in self.rows}
        years = {r.year for r in self.rows}
        if len(sports) < 2:
            raise DomainError("coach panel needs at least 2 sports")
        if len(years) < 2:
            raise DomainError("coach panel needs at least 2 periods")
        if self.target_sport not in sports:
            raise DomainError(f"target sport {self.target_sport!r} absent from panel")
        treats = {r.treat for r in self.rows}
        if treats != {True, False}:
            raise DomainError("both treatment arms must be present")

    @property
    def countries(self) -> tuple[str, ...]:
        return tuple(sorted({r.noc for r in self.rows}))

    @property
    def treated_countries(self) -> tuple[str, ...]:
        return tuple(sorted({r.noc for r in self.rows if r.treat}))


@dataclass(frozen=True)
class DddResult:
    """Named coefficients of the triple-difference regression."""

    terms: tuple[str, ...]
    beta: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    beta5: float
    beta5_se: float
    beta5_p: float
    n_clusters: int
    fit: FitResult


def _ddd_design(panel: CoachPanel, treat_flags: dict[str, bool]):
    rows = panel.rows
    n = len(rows)
    extra_sports = sorted(
        {r.sport for r in rows} - {panel.target_sport}
    )[1:]  # first non-target sport is the reference level
    names = list(_DDD_TERMS) + [f"sport={s}" for s in extra_sports]
    X = np.zeros((n, len(names)))
    y = np.empty(n)
    clusters = np.empty(n, dtype=object)
    for i, r in enumerate(rows):
        treat = 1.0 if treat_flags[r.noc] else 0.0
        post = 1.0 if r.post else 0.0
        sport = 1.0 if r.sport == panel.target_sport else 0.0
        X[i, 0] = 1.0
        X[i, 1] = treat
        X[i, 2] = post
        X[i, 3] = sport
        X[i, 4] = treat * post
        X[i, 5] = treat * post * sport
        for j, s in enumerate(extra_sports):
            X[i, 6 + j] = 1.0 if r.sport == s else 0.0
        y[i] = r.medals
        clusters[i] = r.noc
    return DesignMatrix(values=X, column_names=tuple(names)), y, clusters


def ddd_fit(panel: CoachPanel) -> DddResult:
    """OLS of medals on treat, post, sport and their interactions.

    Standard errors are cluster-robust by country; p-values use a t
    reference with (clusters - 1) degrees of freedom.  A design in which the
    interactions are collinear (for example treatment that never switches
    on) raises a domain error.
    """
    treat_flags = {r.noc: r.treat for r in panel.rows}
    X, y, clusters = _ddd_design(panel, treat_flags)
    fit = ols(X, y, cluster_ids=clusters)
    n_clusters = len(set(clusters))
    dof = max(n_clusters - 1, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(fit.standard_errors > 0,
                           fit.coefficients / fit.standard_errors, np.inf)
    p = 2.0 * stats.t.sf(np.abs(t_stats), dof)
    idx = X.column_names.index("treat_post_sport")
    return DddResult(
        terms=X.column_names,
        beta=fit.coefficients,
        se=fit.standard_errors,
        p_values=p,
        beta5=float(fit.coefficients[idx]),
        beta5_se=float(fit.standard_errors[idx]),
        beta5_p=float(p[idx]),
        n_clusters=n_clusters,
        fit=fit,
    )


def compose_effect(
    individual: float,
    synergy: float,
    legacy: float,
    w_synergy: float = DEFAULT_SYNERGY_WEIGHT,
    w_legacy: float = DEFAULT_LEGACY_WEIGHT,
) -> float:
    """Total coach contribution: individual + synergy and legacy channels,
    each attenuated by its weight."""
    return individual + synergy * w_synergy + legacy * w_legacy


@dataclass(frozen=True)
class PlaceboResult:
    p_value: float
    observed: float
    permuted: np.ndarray
    mean_permuted: float
    n_permutations: int


def placebo_test(
    panel: CoachPanel,
    n_permutations: int,
    seed: int,
    *,
    observed: float | None = None,
) -> PlaceboResult:
    """Permutation placebo: reassign which countries are treated.

    Each permutation keeps the number of treated countries fixed, shuffles
    the labels, and re-estimates the triple-interaction coefficient.  The
    p-value is the add-one fraction of permuted |coefficients| at or above
    the observed one.  Permutation ``i`` derives its RNG stream from
    ``(seed, i)``, so the test is deterministic and parallel-safe.
    """
    if n_permutations < 100:
        raise DomainError("placebo test needs at least 100 permutations")
    countries = panel.countries
    if len(countries) < 4:
        raise DomainError("placebo test needs at least 4 countries to permute")
    true_flags = {r.noc: r.treat for r in panel.rows}
    n_treated = sum(true_flags[c] for c in countries)
    if observed is None:
        observed = ddd_fit(panel).beta5

    permuted = np.empty(n_permutations)
    for i in range(n_permutations):
        rng = np.random.default_rng([seed, i])
        order = rng.permutation(len(countries))
        pseudo = {countries[j] for j in order[:n_treated]}
        flags = {c: c in pseudo for c in countries}
        X, y, clusters = _ddd_design(panel, flags)
        try:
            fit = ols(X, y, cluster_ids=clusters)
        except DomainError:
            # Degenerate pseudo-assignment; count as a zero effect.
            permuted[i] = 0.0
            continue
        permuted[i] = fit.coefficients[X.column_names.index("treat_post_sport")]

    exceed = int(np.sum(np.abs(permuted) >= abs(observed) - 1e-12))
    p_value = (1.0 + exceed) / (n_permutations + 1.0)
    return PlaceboResult(
        p_value=float(p_value),
        observed=float(observed),
        permuted=permuted,
        mean_permuted=float(permuted.mean()),
        n_permutations=n_permutations,
    )


@dataclass(frozen=True)
class EventStudyResult:
    ks: tuple[int, ...]
    delta: np.ndarray
    se: np.ndarray
    reference_k: int
    monotonicity: float  # Kendall-style concordance of delta over k >= 0


def _intro_years(panel: CoachPanel) -> dict[str, int]:
    intro = {}
    for noc in panel.treated_countries:
        post_years = [r.year for r in panel.rows if r.noc == noc and r.post]
        if not post_years:
            raise DomainError(f"treated country {noc} has no post periods")
        intro[noc] = min(post_years)
    return intro


def event_study(
    panel: CoachPanel,
    k_min: int = -3,
    k_max: int = 5,
    *,
    cycle_length: int = 1,
    reference_k: int = -1,
) -> EventStudyResult:
    """Dynamic effect path: indicator per event-time k, reference at k = -1.

    Event time counts cycles relative to the hire year.  Every k in the
    window must be observed for some treated unit, otherwise the missing
    offsets are reported in the error.  The reference category's coefficient
    is identically zero by construction.
    """
    if k_min >= k_max:
        raise DomainError("k_min must be below k_max")
    if not k_min <= reference_k <= k_max:
        raise DomainError("reference_k must lie inside the window")
    intro = _intro_years(panel)
    ks = [k for k in range(k_min, k_max + 1)]
    estimated = [k for k in ks if k != reference_k]

    rows = panel.rows
    support = set()
    event_time = np.full(len(rows), None, dtype=object)
    for i, r in enumerate(rows):
        if r.noc in intro:
            k = (r.year - intro[r.noc]) // cycle_length
            if (r.year - intro[r.noc]) % cycle_length == 0 and k_min <= k <= k_max:
                event_time[i] = k
                support.add(k)
    missing = [k for k in ks if k not in support]
    if missing:
        raise DomainError(f"missing event-time support for k = {missing}")

    names = ["const", "treat"] + [f"k={k}" for k in estimated]
    X = np.zeros((len(rows), len(names)))
    y = np.empty(len(rows))
    clusters = np.empty(len(rows), dtype=object)
    for i, r in enumerate(rows):
        X[i, 0] = 1.0
        X[i, 1] = 1.0 if r.noc in intro else 0.0
        if event_time[i] is not None and event_time[i] != reference_k:
            X[i, 2 + estimated.index(event_time[i])] = 1.0
        y[i] = r.medals
        clusters[i] = r.noc
    fit = ols(DesignMatrix(values=X, column_names=tuple(names)), y,
              cluster_ids=clusters)

    delta = np.zeros(len(ks))
    se = np.zeros(len(ks))
    for j, k in enumerate(ks):
        if k == reference_k:
            continue
        col = names.index(f"k={k}")
        delta[j] = fit.coefficients[col]
        se[j] = fit.standard_errors[col]

    post = [(k, d) for k, d in zip(ks, delta) if k >= 0]
    monotonicity = _kendall(post)
    return EventStudyResult(
        ks=tuple(ks),
        delta=delta,
        se=se,
        reference_k=reference_k,
        monotonicity=monotonicity,
    )


def _kendall(pairs: Sequence[tuple[int, float]]) -> float:
    """Concordance of the coefficient path: +1 = strictly rising."""
    if len(pairs) < 2:
        return 0.0
    conc = disc = 0
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            d = (pairs[j][1] - pairs[i][1]) * (pairs[j][0] - pairs[i][0])
            if d > 0:
                conc += 1
            elif d < 0:
                disc += 1
    total = conc + disc
    return (conc - disc) / total if total else 0.0


def screen_breakouts(
    years: Sequence[int],
    medals: Sequence[float],
    intro_year: int,
    *,
    cycles: int = 3,
    cycle_length: int = 4,
    sigma_mult: float = 2.0,
) -> bool:
    """Case filter: did the post-hire mean rise > sigma_mult pre-period sigmas?

    Looks at ``cycles`` Games before and after the hire; the dispersion is
    estimated on the pre-period only.
    """
    pre = [
        m
        for y, m in zip(years, medals)
        if intro_year - cycles * cycle_length <= y < intro_year
    ]
    post = [
        m
        for y, m in zip(years, medals)
        if intro_year <= y < intro_year + cycles * cycle_length
    ]
    if len(pre) < 2 or not post:
        raise DomainError("need at least 2 pre-period and 1 post-period points")
    pre_mean = float(np.mean(pre))
    pre_sd = float(np.std(pre, ddof=1))
    if pre_sd == 0:
        return float(np.mean(post)) > pre_mean
    return (float(np.mean(post)) - pre_mean) > sigma_mult * pre_sd
