"""Dynamic national power weight matrix with time decay and tiered imputation.

The weight of a country-year combines a log-scaled medal count against
log GDP (units of 100 million USD) and square-rooted population (millions),
discounted exponentially with distance from the reference year.  Missing
panel values are imputed by linear time interpolation between observed
points, with country-median and global-median tiers for anything
interpolation cannot reach.

One deliberate deviation from the raw formula: the GDP log is floored at 1
in the denominator.  With the documented input floor of 1e-6 the raw log
would be negative and the weight undefined; flooring keeps weights finite,
non-negative, and monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError

GDP_FLOOR = 1e-6
POPULATION_FLOOR = 1.0
DEFAULT_LAMBDA = 0.05  # per-year decay; half-life = ln 2 / 0.05 ~ 13.9 years


@dataclass(frozen=True)
class PanelRecord:
    """One (country, year) observation of the medal/economy panel.

    ``gdp`` is expressed in 100 million USD and ``population`` in millions;
    either may be ``None`` before imputation.  Medal counts are final
    integers; ``total`` must equal their sum.
    """

    noc: str
    year: int
    gold: int
    silver: int
    bronze: int
    total: int
    gdp: float | None
    population: float | None
    athlete_count: int = 0
    is_host: bool = False

    def __post_init__(self):
        for name in ("gold", "silver", "bronze", "total", "athlete_count"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if self.total != self.gold + self.silver + self.bronze:
            raise DomainError(
                f"total {self.total} != gold+silver+bronze for {self.noc} {self.year}"
            )
        if not 1896 <= self.year <= 2100:
            raise DomainError(f"year {self.year} outside [1896, 2100]")


@dataclass(frozen=True)
class WeightMatrix:
    """Per (noc, year) non-negative weights under decay coefficient ``lam``."""

    entries: Mapping[tuple[str, int], float]
    lam: float

    def __post_init__(self):
        for key, w in self.entries.items():
            if not math.isfinite(w) or w < 0:
                raise DomainError(f"weight for {key} must be finite and >= 0")

    def __getitem__(self, key: tuple[str, int]) -> float:
        return self.entries[key]


def ln_floor(g: float) -> float:
    """Denominator log, floored at 1 so tiny GDP cannot flip the sign."""
    return max(math.log(g), 1.0)


def impute_series(
    years: Sequence[int],
    values: Sequence[float | None],
    global_pool: Sequence[float],
    *,
    floor: float | None = None,
) -> np.ndarray:
    """Fill gaps in one country's time series.

    Interior gaps are linearly interpolated in the year coordinate.  Gaps
    before the first or after the last observation fall back to the country
    median; a series with no observations at all falls back to the global
    median.  Observed values are preserved exactly.  An optional floor is
    applied last.
    """
    if len(years) != len(values):
        raise DomainError("years and values must have equal length")
    if len(years) == 0:
        return np.array([])
    yr = np.asarray(years, dtype=float)
    if np.any(np.diff(yr) <= 0):
        raise DomainError("years must be strictly increasing")

    observed = [(y, v) for y, v in zip(yr, values) if v is not None]
    if not observed:
        pool = [v for v in global_pool if v is not None]
        if not pool:
            raise DomainError("cannot impute: no observed values anywhere")
        out = np.full(len(yr), float(np.median(pool)))
    else:
        obs_y = np.array([y for y, _ in observed])
        obs_v = np.array([float(v) for _, v in observed])
        out = np.interp(yr, obs_y, obs_v)
        # np.interp clamps the edges to the nearest observation; the tiered
        # rule wants the country median there instead.
        country_median = float(np.median(obs_v))
        out[yr < obs_y[0]] = country_median
        out[yr > obs_y[-1]] = country_median
        for i, v in enumerate(values):
            if v is not None:
                out[i] = float(v)
    if floor is not None:
        out = np.maximum(out, floor)
    return out


def national_weight(
    medals: int,
    gdp: float,
    population: float,
    t: int,
    t_current: int,
    lam: float = DEFAULT_LAMBDA,
) -> float:
    """ln(M+1) / (ln_floor(G) * sqrt(P)) * exp(-lam * (t_current - t)).

    Expects GDP/population already floored (strictly positive).
    """
    if medals < 0:
        raise DomainError("medals must be non-negative")
    if gdp <= 0 or population <= 0:
        raise DomainError("gdp and population must be positive (flooring applied upstream)")
    if t > t_current:
        raise DomainError(f"t={t} lies after t_current={t_current}")
    decay = math.exp(-lam * (t_current - t))
    return math.log1p(medals) / (ln_floor(gdp) * math.sqrt(population)) * decay


def build_weight_matrix(
    panel: Sequence[PanelRecord],
    *,
    t_current: int | None = None,
    lam: float = DEFAULT_LAMBDA,
) -> WeightMatrix:
    """Impute the panel per country and evaluate the weight for every row."""
    if not panel:
        raise DomainError("panel must be non-empty")
    if t_current is None:
        t_current = max(r.year for r in panel)
    gdp_pool = [r.gdp for r in panel if r.gdp is not None]
    pop_pool = [r.population for r in panel if r.population is not None]

    by_noc: dict[str, list[PanelRecord]] = {}
    for r in panel:
        by_noc.setdefault(r.noc, []).append(r)

    entries: dict[tuple[str, int], float] = {}
    for noc in sorted(by_noc):
        rows = sorted(by_noc[noc], key=lambda r: r.year)
        years = [r.year for r in rows]
        gdp = impute_series(years, [r.gdp for r in rows], gdp_pool, floor=GDP_FLOOR)
        pop = impute_series(
            years, [r.population for r in rows], pop_pool, floor=POPULATION_FLOOR
        )
        for r, g, p in zip(rows, gdp, pop):
            entries[(noc, r.year)] = national_weight(
                r.total, g, p, r.year, t_current, lam
            )
    return WeightMatrix(entries=entries, lam=lam)


def bootstrap_cv(
    panel: Sequence[PanelRecord],
    n_boot: int,
    seed: int,
    *,
    lam: float = DEFAULT_LAMBDA,
) -> dict[str, float]:
    """Coefficient of variation of the pooled factor contributions.

    Rows (country-years) are resampled with replacement; per replicate the
    mean GDP term (1/ln_floor(G)), population term (1/sqrt(P)) and decay
    term (exp(-lam * gap)) are recomputed.  Each replicate draws its RNG
    stream from (seed, replicate index) so replicates are order-independent
    and parallel-safe.  Returns std/mean per factor.
    """
    if n_boot < 100:
        raise DomainError("n_boot must be at least 100")
    rows = [r for r in panel if r.gdp is not None and r.population is not None]
    if len(rows) < 2:
        raise DomainError("bootstrap needs at least two complete rows")
    t_current = max(r.year for r in rows)
    gdp_term = np.array([1.0 / ln_floor(max(r.gdp, GDP_FLOOR)) for r in rows])
    pop_term = np.array(
        [1.0 / math.sqrt(max(r.population, POPULATION_FLOOR)) for r in rows]
    )
    decay_term = np.array([math.exp(-lam * (t_current - r.year)) for r in rows])

    n = len(rows)
    means = np.empty((n_boot, 3))
    for b in range(n_boot):
        rng = np.random.default_rng([seed, b])
        idx = rng.integers(0, n, size=n)
        means[b, 0] = gdp_term[idx].mean()
        means[b, 1] = pop_term[idx].mean()
        means[b, 2] = decay_term[idx].mean()

    out = {}
    for k, name in enumerate(("gdp", "population", "decay")):
        col = means[:, k]
        mu = col.mean()
        # All replicate means identical => variance is exactly zero; np.std
        # would otherwise leak a last-ulp rounding artifact.
        sd = 0.0 if np.ptp(col) == 0.0 else col.std(ddof=1)
        out[name] = float(sd / mu) if mu != 0 else float("inf")
    return out
