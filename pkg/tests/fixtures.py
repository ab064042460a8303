"""Deterministic fixture data and synthetic generators shared across tests."""

from __future__ import annotations

import numpy as np

from medalcast.weights import PanelRecord

# (noc, name, gdp_2024 in 100M USD, population millions, medal scale)
_COUNTRIES = [
    ("USA", "United States", 250000.0, 335.0, 110),
    ("CHN", "China", 180000.0, 1410.0, 90),
    ("GBR", "Great Britain", 33000.0, 68.0, 60),
    ("JPN", "Japan", 42000.0, 125.0, 45),
    ("AUS", "Australia", 17000.0, 26.0, 45),
    ("FRA", "France", 30000.0, 68.0, 55),
    ("GER", "Germany", 45000.0, 84.0, 50),
    ("ITA", "Italy", 22000.0, 59.0, 40),
    ("NED", "Netherlands", 11000.0, 18.0, 30),
    ("KOR", "South Korea", 17000.0, 52.0, 30),
    ("BRA", "Brazil", 21000.0, 215.0, 20),
    ("ESP", "Spain", 15000.0, 48.0, 18),
    ("KEN", "Kenya", 1100.0, 54.0, 10),
    ("JAM", "Jamaica", 170.0, 2.8, 9),
    ("CUB", "Cuba", 1100.0, 11.0, 12),
    ("HUN", "Hungary", 2100.0, 9.7, 18),
    ("TUR", "Turkey", 11000.0, 85.0, 8),
    ("IND", "India", 35000.0, 1420.0, 6),
    ("FIJ", "Fiji", 55.0, 0.93, 1),
    ("MAR", "Morocco", 1400.0, 37.0, 3),
]

FIXTURE_YEARS = [1996, 2000, 2004, 2008, 2012, 2016, 2020, 2024]


def make_fixture_panel(seed: int = 7) -> list[PanelRecord]:
    """20 countries x 8 Games with plausible growth paths and one host/year."""
    rng = np.random.default_rng(seed)
    hosts = {1996: "USA", 2000: "AUS", 2004: "GER", 2008: "CHN",
             2012: "GBR", 2016: "BRA", 2020: "JPN", 2024: "FRA"}
    panel = []
    for noc, _name, gdp24, pop24, scale in _COUNTRIES:
        for i, year in enumerate(FIXTURE_YEARS):
            back = len(FIXTURE_YEARS) - 1 - i
            gdp = gdp24 / (1.05 ** (4 * back))
            pop = pop24 / (1.01 ** (4 * back))
            base = scale * (0.85 + 0.3 * rng.random())
            host_bump = 1.15 if hosts[year] == noc else 1.0
            total = max(int(round(base * host_bump)), 0)
            gold = total // 3
            silver = (total - gold) // 2
            bronze = total - gold - silver
            panel.append(
                PanelRecord(
                    noc=noc,
                    year=year,
                    gold=gold,
                    silver=silver,
                    bronze=bronze,
                    total=total,
                    gdp=round(gdp, 3),
                    population=round(pop, 3),
                    athlete_count=int(20 + scale * 4 + rng.integers(0, 10)),
                    is_host=hosts[year] == noc,
                )
            )
    return panel


FIXTURE_HOSTS = {1996: "USA", 2000: "AUS", 2004: "GER", 2008: "CHN",
                 2012: "GBR", 2016: "BRA", 2020: "JPN", 2024: "FRA"}

FIXTURE_SPORTS = ["Swimming", "Athletics", "Gymnastics", "Rowing", "Judo"]


def make_zicp_panel(
    n_countries: int = 40,
    n_cycles: int = 50,
    seed: int = 5,
    pi_target: float = 0.4,
    beta=(0.5, 0.6, 0.5),
):
    """Zero-inflated Poisson generator with country-level structural zeros.

    Structural status is a persistent country attribute signalled by the
    binary deficit indicators: countries with s = (1, 1) are structural at a
    high rate, countries with s = (0, 0) at a low rate, with exact planted
    counts so the overall structural share equals ``pi_target`` exactly.
    Non-structural country-years draw Poisson counts at the log-linear
    intensity.  Returns (rows, pi_target, true_beta).
    """
    import math

    from medalcast.zicp import ZicpRow

    rng = np.random.default_rng(seed)
    n_hi = n_countries // 2
    n_lo = n_countries - n_hi
    k_total = round(pi_target * n_countries)
    k_hi = min(round(0.65 * n_hi), k_total)
    k_lo = k_total - k_hi
    if not 0 <= k_lo <= n_lo:
        raise ValueError("pi_target/n_countries combination not representable")

    hi_struct = set(rng.permutation(n_hi)[:k_hi].tolist())
    lo_struct = set((n_hi + rng.permutation(n_lo)[:k_lo]).tolist())
    rows = []
    for c in range(n_countries):
        deficit = c < n_hi
        structural = c in hi_struct or c in lo_struct
        s1 = s2 = 1.0 if deficit else 0.0
        for t in range(n_cycles):
            log_gdp = float(rng.normal(0.0, 1.0))
            athletes = float(rng.normal(0.0, 1.0))
            lam = math.exp(beta[0] + beta[1] * log_gdp + beta[2] * athletes)
            y = 0 if structural else int(rng.poisson(lam))
            rows.append(
                ZicpRow(
                    noc=f"C{c:03d}",
                    cycle=t,
                    medals=y,
                    log_gdp=log_gdp,
                    athlete_count=athletes,
                    s1=s1,
                    s2=s2,
                )
            )
    return rows, pi_target, beta


def make_coach_panel(
    effect: float = 2.8,
    noise: float = 1.0,
    seed: int = 0,
    n_countries: int = 10,
    n_treated: int = 4,
    years=(2004, 2008, 2012, 2016, 2020, 2024),
    intro_year: int = 2016,
    base: float = 5.0,
):
    """Triple-difference generator: a planted boost in the target sport of
    treated countries after the hire year."""
    from medalcast.coach import CoachObservation, CoachPanel

    rng = np.random.default_rng(seed)
    sports = ("Target", "Control")
    rows = []
    for c in range(n_countries):
        noc = f"C{c:02d}"
        treat = c < n_treated
        level = base + rng.normal(0, 0.5)
        for year in years:
            post = year >= intro_year
            for sport in sports:
                m = level + rng.normal(0, noise)
                if treat and post and sport == "Target":
                    m += effect
                rows.append(
                    CoachObservation(
                        noc=noc, sport=sport, year=year,
                        medals=float(m), treat=treat, post=post,
                    )
                )
    return CoachPanel(rows=tuple(rows), target_sport="Target")


def make_event_study_panel(
    slope: float = 0.5,
    noise: float = 0.3,
    seed: int = 0,
    n_countries: int = 12,
    n_treated: int = 5,
    k_min: int = -3,
    k_max: int = 5,
):
    """Panel with a planted post-hire ramp delta_k = slope*k for k >= 0."""
    from medalcast.coach import CoachObservation, CoachPanel

    rng = np.random.default_rng(seed)
    intro = 2000
    years = [intro + k for k in range(k_min - 2, k_max + 3)]
    rows = []
    for c in range(n_countries):
        noc = f"C{c:02d}"
        treat = c < n_treated
        for year in years:
            k = year - intro
            bump = slope * k if treat and 0 <= k <= k_max else 0.0
            for sport in ("Target", "Control"):
                rows.append(
                    CoachObservation(
                        noc=noc, sport=sport, year=year,
                        medals=float(4.0 + bump + rng.normal(0, noise)),
                        treat=treat, post=year >= intro,
                    )
                )
    return CoachPanel(rows=tuple(rows), target_sport="Target")


def make_ate_data(
    ate: float = 15.0,
    n: int = 1200,
    seed: int = 0,
    noise: float = 2.0,
):
    """Randomized treatment with covariate-driven outcomes and a planted ATE."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    treat = (rng.random(n) < 0.5).astype(float)
    y = 4.0 + X @ np.array([1.5, -1.0, 0.5]) + ate * treat + rng.normal(0, noise, n)
    return X, treat, y


def make_hosting_panel(
    theta_by_k=None,
    seed: int = 0,
    noise: float = 0.4,
    n_hosts: int = 4,
    n_controls: int = 12,
):
    """Panel of Games editions with planted hosting-effect bumps.

    ``theta_by_k`` maps event-time offsets to additive medal effects for
    host countries around their hosting edition.
    """
    if theta_by_k is None:
        # Phase mass 76 / 82 / 42 = 38% / 41% / 21% of the total response.
        theta_by_k = {-3: 20.0, -2: 30.0, -1: 26.0, 0: 82.0, 1: 14.0, 2: 10.0,
                      3: 8.0, 4: 6.0, 5: 4.0}
    rng = np.random.default_rng(seed)
    years = [1992 + 4 * i for i in range(16)]
    host_editions = {f"H{j:02d}": 4 + 2 * j for j in range(n_hosts)}
    panel = []
    for j in range(n_hosts):
        noc = f"H{j:02d}"
        h = host_editions[noc]
        for i, year in enumerate(years):
            k = i - h
            bump = theta_by_k.get(k, 0.0)
            total = max(int(round(200 + bump + rng.normal(0, noise))), 0)
            gold = total // 3
            silver = (total - gold) // 2
            panel.append(
                PanelRecord(
                    noc=noc, year=year, gold=gold, silver=silver,
                    bronze=total - gold - silver, total=total,
                    gdp=1000.0, population=50.0, is_host=(k == 0),
                )
            )
    for j in range(n_controls):
        noc = f"C{j:02d}"
        for year in years:
            total = max(int(round(200 + rng.normal(0, noise))), 0)
            gold = total // 3
            silver = (total - gold) // 2
            panel.append(
                PanelRecord(
                    noc=noc, year=year, gold=gold, silver=silver,
                    bronze=total - gold - silver, total=total,
                    gdp=1000.0, population=50.0, is_host=False,
                )
            )
    return panel, theta_by_k


def make_fixture_events(seed: int = 13) -> list[tuple]:
    """Event-level results (noc, event, year, medal_count, rank, participants)."""
    rng = np.random.default_rng(seed)
    rows = []
    events = [f"{s} {k}" for s in FIXTURE_SPORTS for k in ("A", "B")]
    for noc, _name, _gdp, _pop, scale in _COUNTRIES[:12]:
        for year in FIXTURE_YEARS[-4:]:
            for event in events:
                if rng.random() < 0.45:
                    continue
                participants = int(rng.integers(8, 30))
                rank = int(rng.integers(1, participants + 1))
                medals = int(max(0, rng.poisson(scale / 40)))
                rows.append((noc, event, year, medals, rank, participants))
    return rows
